//! End-to-end solver checks on small dumbbell meshes.

use dumbbell_core::fem::DiscreteOperator;
use dumbbell_core::geometry::{BulkDomain, DumbbellSpec, NeckProfile, Side};
use dumbbell_core::mesh::{mesh_quality, triangulate, MeshParams};
use dumbbell_core::minimize::{SeedSpec, Solver, SolverControls};
use dumbbell_core::potential::Potential;

fn unit_spec() -> DumbbellSpec {
    let left = BulkDomain::rectangle(Side::Left, 1.0, 1.0, 0.2).unwrap();
    let right = BulkDomain::rectangle(Side::Right, 1.0, 1.0, 0.2).unwrap();
    let neck = NeckProfile::constant(0.5, 0.5).unwrap();
    DumbbellSpec::new(left, right, neck, true).unwrap()
}

#[test]
fn constant_seed_solves_to_constant() {
    let spec = unit_spec();
    let asm = spec.assemble(0.05, 0.05).unwrap();
    let mesh = triangulate(&asm, &MeshParams { h_bulk: 0.08, ..Default::default() }).unwrap();
    let op = DiscreteOperator::assemble(&mesh);
    let p = Potential::quartic(-1.0, 1.0);
    let solver = Solver::new(&mesh, &op, &asm, &p, SolverControls::default());
    let seed = SeedSpec { alpha: 1.0, beta: 1.0, d: 0.5 };
    let report = solver.solve_critical_point(&seed).unwrap();
    // u = 1: zero energy, lambda_min = W''(1) = 8 by the constant mode.
    assert!(report.energy.abs() < 1e-12, "energy {}", report.energy);
    assert!(report.residual <= solver.tol_crit());
    assert!(
        (report.lambda_min - 8.0).abs() < 1e-6,
        "lambda_min {}",
        report.lambda_min
    );
    assert!((report.u_center - 1.0).abs() < 1e-9);
    assert!(!report.constraint_active);
}

#[test]
fn wall_seed_solves_to_odd_transition() {
    let spec = unit_spec();
    let asm = spec.assemble(0.05, 0.05).unwrap();
    let mesh = triangulate(&asm, &MeshParams { h_bulk: 0.08, ..Default::default() }).unwrap();
    let q = mesh_quality(&mesh);
    assert!(q.min_angle_deg >= 20.0);
    let op = DiscreteOperator::assemble(&mesh);
    let p = Potential::quartic(-1.0, 1.0);
    let solver = Solver::new(&mesh, &op, &asm, &p, SolverControls::default());
    let seed = SeedSpec { alpha: -1.0, beta: 1.0, d: 0.5 };
    let report = solver.solve_critical_point(&seed).unwrap();

    assert!(report.residual <= solver.tol_crit(), "residual {}", report.residual);
    // Mirror symmetry with odd wells forces u(0,0) = 0.
    assert!(report.u_center.abs() < 1e-6, "u(0,0) = {}", report.u_center);
    // Stability.
    assert!(report.lambda_min > 0.0, "lambda_min = {}", report.lambda_min);
    // Discrete maximum principle surrogate.
    assert!(report.field.min() >= -1.0 - 1e-6);
    assert!(report.field.max() <= 1.0 + 1e-6);
    // Odd symmetry through the mirror map.
    let map = mesh.mirror_map().expect("symmetric mesh");
    let mut worst: f64 = 0.0;
    for (i, &j) in map.iter().enumerate() {
        worst = worst.max((report.field.values()[i] + report.field.values()[j as usize]).abs());
    }
    assert!(worst <= 1e-5, "odd-symmetry defect {worst}");
    // Energy re-evaluation matches the report.
    let re = op.energy(&p, &report.field).unwrap();
    assert!((re - report.energy).abs() <= 1e-12 * (1.0 + re.abs()));
}
