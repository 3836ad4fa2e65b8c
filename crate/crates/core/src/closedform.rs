//! Exact evaluation of the closed-form asymptotic objects: the neck
//! resistance, the one-dimensional neck problem, per-regime energy constants,
//! the renormalized energy, radial barriers, and test-function energy limits.

use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::geometry::{NeckProfile, Regime};
use crate::quad;

#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("profile sum must stay positive; got {value} at x = {x}")]
    NonPositiveProfile { x: f64, value: f64 },
    #[error("radii must satisfy 0 < rho0 < rho1, got rho0 = {rho0}, rho1 = {rho1}")]
    BadRadii { rho0: f64, rho1: f64 },
    #[error("gamma must lie in (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("m and l must be positive, got m = {m}, l = {l}")]
    BadParameters { m: f64, l: f64 },
}

/// The neck's effective 1D resistance `m = integral of 1/(f1+f2) over [-1,1]`.
pub fn m_f1f2(neck: &NeckProfile) -> Result<f64, ClosedFormError> {
    // Positivity is a profile invariant, but the integrand blows up near a
    // zero, so re-check on the quadrature's own samples.
    for i in 0..=512 {
        let x = -1.0 + 2.0 * i as f64 / 512.0;
        let s = neck.sum(x);
        if s <= 0.0 {
            return Err(ClosedFormError::NonPositiveProfile { x, value: s });
        }
    }
    Ok(quad::integrate(|x| 1.0 / neck.sum(x), -1.0, 1.0, 1e-13))
}

/// The minimizer of the 1D neck functional with prescribed port values:
/// `theta(x) = theta_minus + (theta_plus - theta_minus) T(x) / m` where
/// `T(x)` is the cumulative resistance from -1 to x.
pub struct NeckProfile1d {
    theta_minus: f64,
    theta_plus: f64,
    m: f64,
    grid_x: Vec<f64>,
    grid_t: Vec<f64>,
    energy: f64,
}

impl NeckProfile1d {
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        let idx = match self.grid_x.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
        .min(self.grid_x.len() - 2);
        let (x0, x1) = (self.grid_x[idx], self.grid_x[idx + 1]);
        let (t0, t1) = (self.grid_t[idx], self.grid_t[idx + 1]);
        let t = if x1 > x0 { t0 + (t1 - t0) * (x - x0) / (x1 - x0) } else { t0 };
        self.theta_minus + (self.theta_plus - self.theta_minus) * t / self.m
    }

    /// Minimum of `integral (f1+f2)/2 theta'^2`: `(theta_plus-theta_minus)^2/(2m)`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn boundary_values(&self) -> (f64, f64) {
        (self.theta_minus, self.theta_plus)
    }
}

/// Solves the 1D neck problem with prescribed boundary values.
pub fn neck_1d(
    theta_minus: f64,
    theta_plus: f64,
    neck: &NeckProfile,
) -> Result<NeckProfile1d, ClosedFormError> {
    let m = m_f1f2(neck)?;
    // Cumulative resistance on a fine grid, each cell integrated adaptively;
    // in-cell linear interpolation is then far below the 1e-12 target.
    let n = 4096;
    let mut grid_x = Vec::with_capacity(n + 1);
    let mut grid_t = Vec::with_capacity(n + 1);
    grid_x.push(-1.0);
    grid_t.push(0.0);
    let mut acc = 0.0;
    for i in 1..=n {
        let x0 = -1.0 + 2.0 * (i - 1) as f64 / n as f64;
        let x1 = -1.0 + 2.0 * i as f64 / n as f64;
        acc += quad::integrate(|x| 1.0 / neck.sum(x), x0, x1, 1e-14);
        grid_x.push(x1);
        grid_t.push(acc);
    }
    let span = theta_plus - theta_minus;
    Ok(NeckProfile1d {
        theta_minus,
        theta_plus,
        m,
        grid_x,
        grid_t,
        energy: span * span / (2.0 * m),
    })
}

/// Optimal port values in the critical thin regime:
/// `(alpha+beta)/2 ± pi m (beta-alpha) / (2 (pi m + 2 l))`.
pub fn critical_boundary_values(alpha: f64, beta: f64, m: f64, l: f64) -> (f64, f64) {
    let mid = 0.5 * (alpha + beta);
    let dev = PI * m * (beta - alpha) / (2.0 * (PI * m + 2.0 * l));
    (mid - dev, mid + dev)
}

/// Closed-form limiting constants for one regime and well pair. Entries are
/// present where the regime defines them.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeTarget {
    pub regime: Regime,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    /// Scaled limit of the total excess energy.
    pub total_excess: Option<f64>,
    /// Scaled limit of the neck energy.
    pub neck_energy: Option<f64>,
    /// Scaled limit of the bulk excess energy.
    pub bulk_excess: Option<f64>,
    /// Limit of u(0, 0).
    pub u_center: Option<f64>,
    /// Limits of u(-eps, 0) and u(+eps, 0).
    pub u_left_port: Option<f64>,
    pub u_right_port: Option<f64>,
    /// Optimal transition levels at the neck ends.
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
}

/// Fills the named constants for a regime. Equal wells yield zero excesses.
pub fn regime_targets(regime: Regime, alpha: f64, beta: f64, m: f64) -> RegimeTarget {
    let mid = 0.5 * (alpha + beta);
    let gap2 = (beta - alpha) * (beta - alpha);
    let mut t = RegimeTarget {
        regime,
        alpha,
        beta,
        m,
        total_excess: None,
        neck_energy: None,
        bulk_excess: None,
        u_center: None,
        u_left_port: None,
        u_right_port: None,
        theta_minus: None,
        theta_plus: None,
    };
    match regime {
        Regime::Normal(_) | Regime::Thick => {
            t.total_excess = Some(PI * gap2 / 4.0);
            t.u_center = Some(mid);
        }
        Regime::SupercriticalThin => {
            t.total_excess = Some(PI * gap2 / 4.0);
            t.neck_energy = Some(0.0);
            t.bulk_excess = Some(PI * gap2 / 4.0);
            t.u_center = Some(mid);
            t.u_left_port = Some(mid);
            t.u_right_port = Some(mid);
            t.theta_minus = Some(mid);
            t.theta_plus = Some(mid);
        }
        Regime::CriticalThin(l) => {
            let denom = PI * m + 2.0 * l;
            t.neck_energy = Some(l * PI * PI * m * gap2 / (2.0 * denom * denom));
            t.bulk_excess = Some(gap2 * l * l * PI / (denom * denom));
            t.total_excess = Some(gap2 * PI * l / (2.0 * denom));
            let (tm, tp) = critical_boundary_values(alpha, beta, m, l);
            t.theta_minus = Some(tm);
            t.theta_plus = Some(tp);
            t.u_left_port = Some(tm);
            t.u_right_port = Some(tp);
        }
        Regime::SubcriticalThin => {
            // At the (eps/delta) scale the whole transition sits in the neck.
            t.total_excess = Some(gap2 / (2.0 * m));
            t.neck_energy = Some(gap2 / (2.0 * m));
            t.bulk_excess = Some(0.0);
            t.theta_minus = Some(alpha);
            t.theta_plus = Some(beta);
            t.u_left_port = Some(alpha);
            t.u_right_port = Some(beta);
        }
    }
    t
}

/// The renormalized limiting energy of a transition with port levels
/// `theta1`, `theta2`:
/// `RE = l (theta2-theta1)^2/(2m) + pi (alpha-theta1)^2/2 + pi (beta-theta2)^2/2`.
pub fn renormalized_energy(
    theta1: f64,
    theta2: f64,
    alpha: f64,
    beta: f64,
    m: f64,
    l: f64,
) -> Result<f64, ClosedFormError> {
    if m <= 0.0 || l <= 0.0 {
        return Err(ClosedFormError::BadParameters { m, l });
    }
    let neck = l * (theta2 - theta1) * (theta2 - theta1) / (2.0 * m);
    let left = PI * (alpha - theta1) * (alpha - theta1) / 2.0;
    let right = PI * (beta - theta2) * (beta - theta2) / 2.0;
    Ok(neck + left + right)
}

/// Closed-form argmin and minimum of the renormalized energy: the argmin
/// equals the critical boundary values and the value is
/// `(beta-alpha)^2 pi l / (2 (m pi + 2 l))`.
pub fn renormalized_min(
    alpha: f64,
    beta: f64,
    m: f64,
    l: f64,
) -> Result<(f64, f64, f64), ClosedFormError> {
    if m <= 0.0 || l <= 0.0 {
        return Err(ClosedFormError::BadParameters { m, l });
    }
    let (t1, t2) = critical_boundary_values(alpha, beta, m, l);
    let value = (beta - alpha) * (beta - alpha) * PI * l / (2.0 * (m * PI + 2.0 * l));
    Ok((t1, t2, value))
}

/// Sign of a radial barrier: upper barriers are supersolutions, lower ones
/// subsolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSign {
    Upper,
    Lower,
}

/// Radial comparison function on the half-annulus `rho0 < r < rho1` with
/// endpoint values `a` at `rho0` and `b` at `rho1` exactly.
#[derive(Debug, Clone, Copy)]
pub struct Barrier {
    pub rho0: f64,
    pub rho1: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub sign: BarrierSign,
}

impl Barrier {
    pub fn new(
        rho0: f64,
        rho1: f64,
        a: f64,
        b: f64,
        d: f64,
        sign: BarrierSign,
    ) -> Result<Self, ClosedFormError> {
        if !(0.0 < rho0 && rho0 < rho1) {
            return Err(ClosedFormError::BadRadii { rho0, rho1 });
        }
        Ok(Barrier { rho0, rho1, a, b, d, sign })
    }

    /// `u_pm(r) = -/+ d r^2/4 + [(b-a) +/- d (rho1^2-rho0^2)/4] ln(r/rho0)/ln(rho1/rho0)
    ///  + a +/- d rho0^2/4`.
    pub fn eval(&self, r: f64) -> f64 {
        let s = match self.sign {
            BarrierSign::Upper => 1.0,
            BarrierSign::Lower => -1.0,
        };
        let quad_term = -s * self.d * r * r / 4.0;
        let log_coef =
            (self.b - self.a) + s * self.d / 4.0 * (self.rho1 * self.rho1 - self.rho0 * self.rho0);
        let log_term = log_coef * (r / self.rho0).ln() / (self.rho1 / self.rho0).ln();
        quad_term + log_term + self.a + s * self.d * self.rho0 * self.rho0 / 4.0
    }
}

/// Limiting scaled excess energy of the log-interpolation test field used in
/// the energy upper bound: `(beta-alpha)^2/4 * pi/(1-gamma)`.
pub fn xi_energy_limit(alpha: f64, beta: f64, gamma: f64) -> Result<f64, ClosedFormError> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(ClosedFormError::GammaOutOfRange(gamma));
    }
    Ok((beta - alpha) * (beta - alpha) / 4.0 * PI / (1.0 - gamma))
}

/// Limiting scaled Dirichlet energy of the critical-thin test field:
/// `(beta-alpha)^2 pi l / (2 (m pi + 2 l)^2) * (m pi + 2 l/(1-gamma))`.
pub fn z_energy_limit(
    alpha: f64,
    beta: f64,
    m: f64,
    l: f64,
    gamma: f64,
) -> Result<f64, ClosedFormError> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(ClosedFormError::GammaOutOfRange(gamma));
    }
    if m <= 0.0 || l <= 0.0 {
        return Err(ClosedFormError::BadParameters { m, l });
    }
    let denom = m * PI + 2.0 * l;
    Ok((beta - alpha) * (beta - alpha) * PI * l / (2.0 * denom * denom)
        * (m * PI + 2.0 * l / (1.0 - gamma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileFn;

    fn profile_const(c1: f64, c2: f64) -> NeckProfile {
        NeckProfile::constant(c1, c2).unwrap()
    }

    fn profile_quadratic() -> NeckProfile {
        // f1 + f2 = 1 + x^2
        let f1 = ProfileFn::from_fn(|x| 0.5 + x * x, 65).unwrap();
        let f2 = ProfileFn::constant(0.5);
        NeckProfile::new(f1, f2, None).unwrap()
    }

    #[test]
    fn m_constant_profiles() {
        assert!((m_f1f2(&profile_const(0.5, 0.5)).unwrap() - 2.0).abs() < 1e-13);
        assert!((m_f1f2(&profile_const(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn m_quadratic_profile() {
        // integral of 1/(1+x^2) over [-1,1] = pi/2, by hand.
        let m = m_f1f2(&profile_quadratic()).unwrap();
        assert!((m - PI / 2.0).abs() < 1e-10, "m = {m}");
    }

    #[test]
    fn neck_1d_linear_case() {
        let p = neck_1d(-1.0, 1.0, &profile_const(0.5, 0.5)).unwrap();
        assert!((p.energy() - 1.0).abs() < 1e-12);
        for i in 0..=50 {
            let x = -1.0 + 2.0 * i as f64 / 50.0;
            assert!((p.eval(x) - x).abs() < 1e-10);
        }
    }

    #[test]
    fn neck_1d_constant_case() {
        let p = neck_1d(0.7, 0.7, &profile_const(0.5, 0.5)).unwrap();
        assert!(p.energy().abs() < 1e-15);
        assert!((p.eval(0.3) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn neck_1d_quadratic_energy() {
        // m = pi/2, theta from 0 to 1: energy = 1/(2m) = 1/pi.
        let p = neck_1d(0.0, 1.0, &profile_quadratic()).unwrap();
        assert!((p.energy() - 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn neck_1d_energy_matches_quadrature_of_profile() {
        let neck = profile_quadratic();
        let p = neck_1d(-0.3, 0.9, &neck).unwrap();
        let n = 20000;
        let mut e = 0.0;
        for i in 0..n {
            let x0 = -1.0 + 2.0 * i as f64 / n as f64;
            let x1 = -1.0 + 2.0 * (i + 1) as f64 / n as f64;
            let xm = 0.5 * (x0 + x1);
            let dtheta = (p.eval(x1) - p.eval(x0)) / (x1 - x0);
            e += neck.sum(xm) / 2.0 * dtheta * dtheta * (x1 - x0);
        }
        assert!((e - p.energy()).abs() < 1e-6, "quadrature {e} vs closed {}", p.energy());
    }

    #[test]
    fn critical_boundary_values_hand_case() {
        // alpha=-1, beta=1, m=2, l=pi: dev = 2pi*2/(2*(2pi+2pi)) = 1/2.
        let (tm, tp) = critical_boundary_values(-1.0, 1.0, 2.0, PI);
        assert!((tm + 0.5).abs() < 1e-14);
        assert!((tp - 0.5).abs() < 1e-14);
        // l -> 0 limit approaches (alpha, beta).
        let (tm, tp) = critical_boundary_values(-1.0, 1.0, 2.0, 1e-12);
        assert!((tm + 1.0).abs() < 1e-11);
        assert!((tp - 1.0).abs() < 1e-11);
        // Equal wells give a constant.
        let (tm, tp) = critical_boundary_values(0.4, 0.4, 2.0, 1.0);
        assert_eq!(tm, 0.4);
        assert_eq!(tp, 0.4);
    }

    #[test]
    fn regime_target_constants() {
        // Normal: total excess pi (beta-alpha)^2/4 = pi for (-1, 1).
        let t = regime_targets(Regime::Normal(1.0), -1.0, 1.0, 2.0);
        assert!((t.total_excess.unwrap() - PI).abs() < 1e-14);
        assert!((t.u_center.unwrap()).abs() < 1e-15);

        // Critical thin, hand case m=2, l=pi.
        let t = regime_targets(Regime::CriticalThin(PI), -1.0, 1.0, 2.0);
        assert!((t.neck_energy.unwrap() - PI / 4.0).abs() < 1e-13);
        assert!((t.bulk_excess.unwrap() - PI / 4.0).abs() < 1e-13);
        assert!((t.total_excess.unwrap() - PI / 2.0).abs() < 1e-13);

        // Subcritical: (beta-alpha)^2/(2m) = 1 for m=2.
        let t = regime_targets(Regime::SubcriticalThin, -1.0, 1.0, 2.0);
        assert!((t.total_excess.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(t.theta_minus.unwrap(), -1.0);
        assert_eq!(t.theta_plus.unwrap(), 1.0);
    }

    #[test]
    fn excess_split_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let beta: f64 = rng.random_range(-3.0..3.0);
            let m: f64 = rng.random_range(0.1..10.0);
            let l: f64 = rng.random_range(0.1..10.0);
            let t = regime_targets(Regime::CriticalThin(l), alpha, beta, m);
            let lhs = t.neck_energy.unwrap() + t.bulk_excess.unwrap();
            assert!((lhs - t.total_excess.unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn renormalized_energy_hand_cases() {
        // RE(alpha, beta) with alpha=-1, beta=1, m=2, l=pi: l*4/(2*2) = pi.
        let v = renormalized_energy(-1.0, 1.0, -1.0, 1.0, 2.0, PI).unwrap();
        assert!((v - PI).abs() < 1e-14);
        // RE(mid, mid): 0 + pi/2 + pi/2 = pi.
        let v = renormalized_energy(0.0, 0.0, -1.0, 1.0, 2.0, PI).unwrap();
        assert!((v - PI).abs() < 1e-14);
    }

    #[test]
    fn renormalized_min_matches_boundary_values() {
        use rand::{Rng, SeedableRng};
        let (t1, t2, v) = renormalized_min(-1.0, 1.0, 2.0, PI).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-14);
        assert!((t1 + 0.5).abs() < 1e-14);
        assert!((t2 - 0.5).abs() < 1e-14);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let beta: f64 = rng.random_range(-3.0..3.0);
            let m: f64 = rng.random_range(0.1..10.0);
            let l: f64 = rng.random_range(0.1..10.0);
            let (t1, t2, v) = renormalized_min(alpha, beta, m, l).unwrap();
            let (b1, b2) = critical_boundary_values(alpha, beta, m, l);
            assert!((t1 - b1).abs() <= 1e-12);
            assert!((t2 - b2).abs() <= 1e-12);
            let at_min = renormalized_energy(t1, t2, alpha, beta, m, l).unwrap();
            assert!((at_min - v).abs() <= 1e-12);
            // Strict convexity: perturbed points are strictly larger.
            let d1: f64 = rng.random_range(-1.0..1.0);
            let d2: f64 = rng.random_range(-1.0..1.0);
            if d1.abs() > 1e-6 || d2.abs() > 1e-6 {
                let perturbed = renormalized_energy(t1 + d1, t2 + d2, alpha, beta, m, l).unwrap();
                assert!(perturbed > v);
            }
        }
    }

    #[test]
    fn barrier_cases() {
        // d = 0, a = 0, b = 1, rho0 = 1, rho1 = e: u(r) = ln r.
        let b = Barrier::new(1.0, std::f64::consts::E, 0.0, 1.0, 0.0, BarrierSign::Upper).unwrap();
        for r in [1.0, 1.5, 2.0, std::f64::consts::E] {
            assert!((b.eval(r) - r.ln()).abs() < 1e-14);
        }
        // Endpoint identities for arbitrary parameters, both signs.
        for sign in [BarrierSign::Upper, BarrierSign::Lower] {
            let b = Barrier::new(0.3, 2.7, -0.8, 1.9, 3.4, sign).unwrap();
            assert!((b.eval(0.3) + 0.8).abs() < 1e-13);
            assert!((b.eval(2.7) - 1.9).abs() < 1e-13);
        }
        // Hand evaluation: d=1, a=b=0, rho0=1, rho1=2, upper sign, r=1.5.
        let b = Barrier::new(1.0, 2.0, 0.0, 0.0, 1.0, BarrierSign::Upper).unwrap();
        let expect = -0.5625 + 0.75 * (1.5f64.ln() / 2.0f64.ln()) + 0.25;
        assert!((b.eval(1.5) - expect).abs() < 1e-12);
        assert!((expect - 0.12622).abs() < 1e-5);
        // Radius ordering enforced.
        assert!(Barrier::new(2.0, 1.0, 0.0, 0.0, 0.0, BarrierSign::Upper).is_err());
    }

    #[test]
    fn test_function_energy_limits() {
        // xi with alpha=-1, beta=1, gamma=1/2: (4/4)*pi/(1/2) = 2 pi.
        let v = xi_energy_limit(-1.0, 1.0, 0.5).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-13);
        // gamma -> 0 recovers the normal-regime constant.
        let v = xi_energy_limit(-1.0, 1.0, 1e-9).unwrap();
        assert!((v - PI).abs() < 1e-7);
        // z at gamma -> 0 recovers the critical total excess.
        let t = regime_targets(Regime::CriticalThin(PI), -1.0, 1.0, 2.0);
        let v = z_energy_limit(-1.0, 1.0, 2.0, PI, 1e-9).unwrap();
        assert!((v - t.total_excess.unwrap()).abs() < 1e-7);
        // Monotone increasing in gamma.
        let mut prev = 0.0;
        for i in 1..40 {
            let g = i as f64 / 40.0;
            let v = xi_energy_limit(-1.0, 1.0, g).unwrap();
            assert!(v > prev);
            prev = v;
        }
        // Out-of-range gamma rejected.
        assert!(xi_energy_limit(-1.0, 1.0, 1.0).is_err());
        assert!(z_energy_limit(-1.0, 1.0, 2.0, 1.0, 0.0).is_err());
    }
}
