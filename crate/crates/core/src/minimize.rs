//! Nearly-locally-constant critical points by constrained minimization:
//! semi-implicit gradient flow followed by Newton, stability certification
//! via the smallest second-variation eigenvalue, and enumeration of stable
//! states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fem::{self, DiscreteOperator, FemError, Field};
use crate::geometry::{AssembledDumbbell, Region};
use crate::mesh::TriMesh;
use crate::potential::{Potential, WellSet};
use crate::sparse::{cg, CgOptions, Preconditioner, SolveError};

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("seed value {0} is not a well of the potential")]
    SeedNotWell(f64),
    #[error("constraint radius d must be positive, got {0}")]
    BadConstraintRadius(f64),
    #[error("gradient flow exhausted {steps} steps at residual {residual} (target {target})")]
    FlowBudget { steps: usize, residual: f64, target: f64 },
    #[error("flow step size collapsed below {0}")]
    StepCollapse(f64),
    #[error("Newton stalled after {steps} steps at residual {residual} (target {target})")]
    NewtonBudget { steps: usize, residual: f64, target: f64 },
    #[error("eigenvalue iteration stagnated after {iters} iterations (residual {residual})")]
    EigenStagnation { iters: usize, residual: f64 },
    #[error("perturbed run {index} failed: {source}")]
    PerturbedRun { index: usize, source: Box<MinimizeError> },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Seed wells and the L1 constraint-ball radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeedSpec {
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

impl SeedSpec {
    pub fn validate(&self, wells: &WellSet) -> Result<(), MinimizeError> {
        if !wells.contains(self.alpha) {
            return Err(MinimizeError::SeedNotWell(self.alpha));
        }
        if !wells.contains(self.beta) {
            return Err(MinimizeError::SeedNotWell(self.beta));
        }
        if self.d <= 0.0 {
            return Err(MinimizeError::BadConstraintRadius(self.d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverControls {
    /// Pseudo-time step; defaults to 1/(2 max |W''| over the core interval).
    pub tau: Option<f64>,
    /// Phase-1 stopping residual.
    pub phase1_tol: f64,
    /// Critical residual as a multiple of sqrt(|Omega|).
    pub tol_crit_factor: f64,
    pub max_flow_steps: usize,
    pub max_newton_steps: usize,
    /// Relative tolerance of the Newton CG solves.
    pub cg_rel_tol: f64,
    pub eigen_tol: f64,
    pub max_eigen_iters: usize,
    /// RNG seed for eigenvector starts and perturbations.
    pub rng_seed: u64,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            tau: None,
            phase1_tol: 1e-4,
            tol_crit_factor: 1e-9,
            max_flow_steps: 4000,
            max_newton_steps: 60,
            cg_rel_tol: 1e-10,
            eigen_tol: 1e-8,
            max_eigen_iters: 400,
            rng_seed: 0x5eed,
        }
    }
}

/// Everything a solve needs: computed minimizers are reported against this
/// context's mesh and domain.
pub struct Solver<'a> {
    pub mesh: &'a TriMesh,
    pub op: &'a DiscreteOperator,
    pub asm: &'a AssembledDumbbell,
    pub potential: &'a Potential,
    pub controls: SolverControls,
    truncated: Potential,
}

/// Outcome of one critical-point solve.
#[derive(Debug, Clone)]
pub struct MinimizerReport {
    pub field: Field,
    pub energy: f64,
    pub residual: f64,
    /// Smallest eigenvalue of the mass-weighted second variation.
    pub lambda_min: f64,
    /// min{W''(alpha), W''(beta)} carried alongside for stability checks.
    pub lambda0: f64,
    pub u_center: f64,
    pub u_left_port: f64,
    pub u_right_port: f64,
    pub l1_left: f64,
    pub l1_right: f64,
    /// Dirichlet energy in the ball of radius 2 M delta at the right neck
    /// mouth.
    pub c_eps: f64,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
    pub eigen_iterations: usize,
    pub constraint_active: bool,
    pub max_l1_drift: f64,
}

impl<'a> Solver<'a> {
    pub fn new(
        mesh: &'a TriMesh,
        op: &'a DiscreteOperator,
        asm: &'a AssembledDumbbell,
        potential: &'a Potential,
        controls: SolverControls,
    ) -> Solver<'a> {
        let truncated = potential.truncated();
        Solver { mesh, op, asm, potential, controls, truncated }
    }

    /// Piecewise-constant transition seed: alpha on the left bulk, beta on
    /// the right, the midpoint value on the open neck. Port nodes take the
    /// bulk value.
    pub fn initial_guess(&self, seed: &SeedSpec) -> Field {
        let eps = self.asm.eps;
        let mid = 0.5 * (seed.alpha + seed.beta);
        Field::from_fn(self.mesh, |p| {
            if p[0] <= -eps {
                seed.alpha
            } else if p[0] >= eps {
                seed.beta
            } else {
                mid
            }
        })
    }

    fn tau0(&self) -> f64 {
        self.controls
            .tau
            .unwrap_or_else(|| 0.5 / self.potential.max_ddw_on_core().max(1e-12))
    }

    pub fn tol_crit(&self) -> f64 {
        self.controls.tol_crit_factor * self.op.domain_area().sqrt()
    }

    fn truncated_energy(&self, u: &Field) -> f64 {
        self.op.energy(&self.truncated, u).expect("field is on the solver mesh")
    }

    /// Phase 1: semi-implicit gradient flow on the truncated energy,
    /// `(M/tau + K) u_new = (M/tau) u - M W'(u)`, with adaptive step size and
    /// enforced energy decrease.
    fn gradient_flow(
        &self,
        u: &mut Field,
        u0: &Field,
        d: f64,
        max_drift: &mut f64,
    ) -> Result<usize, MinimizeError> {
        let n = self.op.n();
        let mass = self.op.mass();
        let tau0 = self.tau0();
        let mut tau = tau0;
        let tau_max = tau0 * 4096.0;
        let mut system = None; // (tau, matrix, preconditioner)
        let mut energy = self.truncated_energy(u);
        let mut steps = 0;
        let mut residual = self.op.residual_norm(self.potential, u)?;

        while residual > self.controls.phase1_tol {
            if steps >= self.controls.max_flow_steps {
                return Err(MinimizeError::FlowBudget {
                    steps,
                    residual,
                    target: self.controls.phase1_tol,
                });
            }
            let rebuild = match &system {
                Some((t, _, _)) => (*t as f64 - tau).abs() > 1e-15 * tau,
                None => true,
            };
            if rebuild {
                let a = self.op.stiffness().plus_scaled_diag(mass, 1.0 / tau);
                let pc = Preconditioner::ic0(&a);
                system = Some((tau, a, pc));
            }
            let (_, a, pc) = system.as_ref().unwrap();

            let mut rhs = vec![0.0; n];
            for i in 0..n {
                rhs[i] = mass[i] * (u.values()[i] / tau - self.truncated.dw(u.values()[i]));
            }
            let mut next = u.values().to_vec();
            cg(a, &rhs, &mut next, pc, &CgOptions { rel_tol: 1e-10, max_iters: 40_000 })?;
            let next = Field::new(self.mesh, next)?;
            let next_energy = self.truncated_energy(&next);
            steps += 1;
            if next_energy <= energy + 1e-13 * (1.0 + energy.abs()) {
                *u = next;
                energy = next_energy;
                tau = (tau * 1.4).min(tau_max);
                residual = self.op.residual_norm(self.potential, u)?;
                let drift = self.op.l1_mass_distance(u, u0);
                *max_drift = max_drift.max(drift);
                let _ = d;
            } else {
                tau *= 0.5;
                if tau < 1e-14 * tau0.max(1.0) {
                    return Err(MinimizeError::StepCollapse(tau));
                }
            }
        }
        Ok(steps)
    }

    /// Phase 2: Newton on the criticality system `Ku + m W'(u) = 0` with
    /// diagonally preconditioned CG and residual-decrease line search.
    fn newton(&self, u: &mut Field) -> Result<usize, MinimizeError> {
        let tol = self.tol_crit();
        let n = self.op.n();
        let mass = self.op.mass();
        let mut steps = 0;
        let mut residual = self.op.residual_norm(self.potential, u)?;
        while residual > tol {
            if steps >= self.controls.max_newton_steps {
                return Err(MinimizeError::NewtonBudget { steps, residual, target: tol });
            }
            let mut curvature = vec![0.0; n];
            for i in 0..n {
                curvature[i] = mass[i] * self.potential.ddw(u.values()[i]);
            }
            let jac = self.op.stiffness().plus_scaled_diag(&curvature, 1.0);
            let pc = Preconditioner::jacobi(&jac);
            let g = self.op.gradient(self.potential, u)?;
            let rhs: Vec<f64> = g.values().iter().map(|v| -v).collect();
            let mut step = vec![0.0; n];
            match cg(&jac, &rhs, &mut step, &pc, &CgOptions {
                rel_tol: self.controls.cg_rel_tol,
                max_iters: 60_000,
            }) {
                Ok(_) => {}
                Err(SolveError::IndefiniteMatrix { .. }) => {
                    // Far from a stable state; fall back to more flow.
                    let mut drift = 0.0;
                    let u0 = u.clone();
                    self.gradient_flow(u, &u0, f64::INFINITY, &mut drift)?;
                    residual = self.op.residual_norm(self.potential, u)?;
                    steps += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            }

            let mut s = 1.0;
            let mut accepted = false;
            while s >= 1e-4 {
                let mut trial = u.clone();
                for i in 0..n {
                    trial.values_mut()[i] += s * step[i];
                }
                let r_trial = self.op.residual_norm(self.potential, &trial)?;
                if r_trial < residual * (1.0 - 0.25 * s) {
                    *u = trial;
                    residual = r_trial;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            steps += 1;
            if !accepted {
                return Err(MinimizeError::NewtonBudget { steps, residual, target: tol });
            }
        }
        Ok(steps)
    }

    /// Smallest eigenvalues of `(K + M diag(W''(u))) phi = lambda M phi` by
    /// shifted inverse iteration with deflation of converged vectors.
    pub fn smallest_eigenvalues(
        &self,
        u: &Field,
        count: usize,
    ) -> Result<(Vec<(f64, Field)>, usize), MinimizeError> {
        let n = self.op.n();
        let mass = self.op.mass();
        let mut curvature = vec![0.0; n];
        let mut lambda_lb = f64::INFINITY;
        for i in 0..n {
            let c = self.potential.ddw(u.values()[i]);
            lambda_lb = lambda_lb.min(c);
            curvature[i] = mass[i] * c;
        }
        let jac = self.op.stiffness().plus_scaled_diag(&curvature, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(self.controls.rng_seed ^ 0xe16e);
        let mut converged: Vec<(f64, Field)> = Vec::new();
        let mut total_iters = 0;

        for _ in 0..count {
            let mut phi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            m_orthogonalize(&mut phi, &converged, mass);
            m_normalize(&mut phi, mass);

            // Shift safely below the smallest eigenvalue; Rayleigh updates
            // accelerate once the quotient settles.
            let mut sigma = lambda_lb - 0.01 * (1.0 + lambda_lb.abs());
            let mut rho_prev = f64::INFINITY;
            let mut shifted = jac.plus_scaled_diag(mass, -sigma);
            let mut pc = Preconditioner::ic0(&shifted);
            let mut done = false;

            for it in 0..self.controls.max_eigen_iters {
                total_iters += 1;
                let mut rhs = vec![0.0; n];
                for i in 0..n {
                    rhs[i] = mass[i] * phi[i];
                }
                let mut z = phi.clone();
                match cg(&shifted, &rhs, &mut z, &pc, &CgOptions { rel_tol: 1e-8, max_iters: 60_000 }) {
                    Ok(_) => {}
                    Err(SolveError::IndefiniteMatrix { .. }) => {
                        // Shift crossed the target eigenvalue; back off.
                        sigma -= 0.1 * (1.0 + sigma.abs());
                        shifted = jac.plus_scaled_diag(mass, -sigma);
                        pc = Preconditioner::ic0(&shifted);
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
                m_orthogonalize(&mut z, &converged, mass);
                m_normalize(&mut z, mass);
                phi = z;

                let j_phi = jac.matvec_alloc(&phi);
                let rho: f64 = crate::sparse::dot(&phi, &j_phi);
                // Residual in the M^{-1} norm.
                let mut res2 = 0.0;
                for i in 0..n {
                    let r = j_phi[i] - rho * mass[i] * phi[i];
                    res2 += r * r / mass[i];
                }
                let res = res2.sqrt();
                if res <= self.controls.eigen_tol * (1.0 + rho.abs()) {
                    let field = Field::new(self.mesh, phi.clone())?;
                    converged.push((rho, field));
                    done = true;
                    break;
                }
                // Update the shift conservatively from the Rayleigh quotient.
                if it >= 2 {
                    let gap = (2.0 * (rho - rho_prev).abs()).max(1e-3 * (1.0 + rho.abs()));
                    let candidate = rho - gap;
                    if candidate > sigma {
                        sigma = candidate;
                        shifted = jac.plus_scaled_diag(mass, -sigma);
                        pc = Preconditioner::ic0(&shifted);
                    }
                }
                rho_prev = rho;
            }
            if !done {
                return Err(MinimizeError::EigenStagnation {
                    iters: self.controls.max_eigen_iters,
                    residual: f64::NAN,
                });
            }
        }
        Ok((converged, total_iters))
    }

    /// Full solve from the canonical seed.
    pub fn solve_critical_point(&self, seed: &SeedSpec) -> Result<MinimizerReport, MinimizeError> {
        let start = self.initial_guess(seed);
        self.solve_from(start, seed)
    }

    /// Full solve from an arbitrary start, monitoring the L1 distance to the
    /// canonical seed field.
    pub fn solve_from(&self, start: Field, seed: &SeedSpec) -> Result<MinimizerReport, MinimizeError> {
        let u0 = self.initial_guess(seed);
        let mut u = start;
        let mut max_drift = self.op.l1_mass_distance(&u, &u0);
        let flow_iterations = self.gradient_flow(&mut u, &u0, seed.d, &mut max_drift)?;
        let newton_iterations = self.newton(&mut u)?;
        let drift = self.op.l1_mass_distance(&u, &u0);
        max_drift = max_drift.max(drift);

        let (eigs, eigen_iterations) = self.smallest_eigenvalues(&u, 1)?;
        let lambda_min = eigs[0].0;

        let energy = self.op.energy(self.potential, &u)?;
        let residual = self.op.residual_norm(self.potential, &u)?;
        let eps = self.asm.eps;
        let ball_r = 2.0 * self.asm.m_const * self.asm.delta;
        let report = MinimizerReport {
            energy,
            residual,
            lambda_min,
            lambda0: self.potential.ddw(seed.alpha).min(self.potential.ddw(seed.beta)),
            u_center: fem::probe(self.mesh, &u, [0.0, 0.0])?,
            u_left_port: fem::probe(self.mesh, &u, [-eps, 0.0])?,
            u_right_port: fem::probe(self.mesh, &u, [eps, 0.0])?,
            l1_left: fem::region_l1_distance(self.mesh, &u, Region::LeftBulk, seed.alpha),
            l1_right: fem::region_l1_distance(self.mesh, &u, Region::RightBulk, seed.beta),
            c_eps: fem::local_energy(self.mesh, &u, [eps, 0.0], ball_r)?,
            flow_iterations,
            newton_iterations,
            eigen_iterations,
            constraint_active: max_drift > seed.d,
            max_l1_drift: max_drift,
            field: u,
        };
        Ok(report)
    }

    /// Multi-start basin check: solves from the canonical seed plus
    /// `n_perturb` uniformly perturbed starts and returns the maximum
    /// pairwise mass-weighted L2 distance among the converged outputs.
    pub fn uniqueness_check(
        &self,
        seed: &SeedSpec,
        n_perturb: usize,
        amplitude: f64,
    ) -> Result<(f64, Vec<MinimizerReport>), MinimizeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.controls.rng_seed);
        let mut reports = Vec::with_capacity(n_perturb + 1);
        reports.push(self.solve_critical_point(seed).map_err(|e| MinimizeError::PerturbedRun {
            index: 0,
            source: Box::new(e),
        })?);
        for k in 1..=n_perturb {
            let mut start = self.initial_guess(seed);
            for v in start.values_mut() {
                *v += rng.random_range(-amplitude..=amplitude);
            }
            let rep = self.solve_from(start, seed).map_err(|e| MinimizeError::PerturbedRun {
                index: k,
                source: Box::new(e),
            })?;
            reports.push(rep);
        }
        let mut worst: f64 = 0.0;
        for i in 0..reports.len() {
            for j in i + 1..reports.len() {
                worst = worst.max(self.op.l2_mass_distance(&reports[i].field, &reports[j].field));
            }
        }
        Ok((worst, reports))
    }
}

fn m_normalize(v: &mut [f64], mass: &[f64]) {
    let norm: f64 = v
        .iter()
        .zip(mass)
        .map(|(&x, &m)| m * x * x)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn m_orthogonalize(v: &mut [f64], basis: &[(f64, Field)], mass: &[f64]) {
    for (_, b) in basis {
        let proj: f64 = v
            .iter()
            .zip(b.values())
            .zip(mass)
            .map(|((&x, &y), &m)| m * x * y)
            .sum();
        for (x, &y) in v.iter_mut().zip(b.values()) {
            *x -= proj * y;
        }
    }
}

/// Outcome of stable-state enumeration over all well pairs.
pub struct EnumerationOutcome {
    /// Deduplicated stable states with the seed pair that produced them.
    pub states: Vec<(SeedSpec, MinimizerReport)>,
    pub non_constant_count: usize,
    /// Classification violations (distinct pair seeds collapsing onto one
    /// state), reported rather than raised.
    pub findings: Vec<String>,
}

/// Runs the solver for all ordered well pairs plus all constants,
/// deduplicates by mass-weighted L2 distance, and keeps stable states only.
pub fn enumerate_stable(
    solver: &Solver,
    wells: &WellSet,
    constraint_radius: f64,
) -> Result<EnumerationOutcome, MinimizeError> {
    let locations = wells.locations();
    let mut seeds: Vec<SeedSpec> = Vec::new();
    for &a in &locations {
        for &b in &locations {
            seeds.push(SeedSpec { alpha: a, beta: b, d: constraint_radius });
        }
    }

    let mut states: Vec<(SeedSpec, MinimizerReport)> = Vec::new();
    let mut findings: Vec<String> = Vec::new();
    let dedup_tol = 1e-4;
    let stability_tol = -1e-8;

    for seed in seeds {
        let report = solver.solve_critical_point(&seed)?;
        if report.lambda_min < stability_tol {
            findings.push(format!(
                "seed ({}, {}) converged to an unstable state (lambda_min = {:.3e}); dropped",
                seed.alpha, seed.beta, report.lambda_min
            ));
            continue;
        }
        let duplicate = states
            .iter()
            .find(|(_, r)| solver.op.l2_mass_distance(&r.field, &report.field) <= dedup_tol);
        match duplicate {
            Some((prior, _)) => {
                let both_pairs = prior.alpha != prior.beta && seed.alpha != seed.beta;
                let same_seed = prior.alpha == seed.alpha && prior.beta == seed.beta;
                if both_pairs && !same_seed {
                    findings.push(format!(
                        "classification violation: seeds ({}, {}) and ({}, {}) collapsed onto one state",
                        prior.alpha, prior.beta, seed.alpha, seed.beta
                    ));
                }
            }
            None => states.push((seed, report)),
        }
    }

    let min_gap = min_well_gap(&locations);
    let non_constant_count = states
        .iter()
        .filter(|(_, r)| {
            let span = r.field.max() - r.field.min();
            span > 0.5 * min_gap
        })
        .count();
    Ok(EnumerationOutcome { states, non_constant_count, findings })
}

fn min_well_gap(locations: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..locations.len() {
        for j in i + 1..locations.len() {
            gap = gap.min((locations[i] - locations[j]).abs());
        }
    }
    gap
}
