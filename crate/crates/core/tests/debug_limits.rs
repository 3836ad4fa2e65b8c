use dumbbell_core::limits::{build_limit_mesh, LimitDomain, LimitKind, LimitMeshParams};
use dumbbell_core::mesh::mesh_quality;
use dumbbell_core::fem::DiscreteOperator;

#[test]
fn inspect_halfstrip_mesh() {
    let domain = LimitDomain::new(LimitKind::HalfStrip { y_bot: -0.5, y_top: 0.5 }, 15.0, 15.0).unwrap();
    let mesh = build_limit_mesh(&domain, &LimitMeshParams::default()).unwrap();
    let q = mesh_quality(&mesh);
    println!("nodes {} tris {} min_angle {:.3} max_angle {:.3}", q.nodes, q.triangles, q.min_angle_deg, q.max_angle_deg);
    let mut min_area = f64::INFINITY;
    for t in 0..mesh.triangles().len() {
        min_area = min_area.min(mesh.triangle_area(t));
    }
    println!("min area {min_area:.3e}");
    let op = DiscreteOperator::assemble(&mesh);
    println!("symmetry defect {:.3e}", op.stiffness().symmetry_defect());
    let d = op.stiffness().diagonal();
    let dmax = d.iter().cloned().fold(0.0f64, f64::max);
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("diag range [{dmin:.3e}, {dmax:.3e}]");
    // count boundary markers
    let mut arc = 0; let mut strip = 0; let mut phys = 0;
    for be in mesh.boundary() {
        match be.marker {
            dumbbell_core::mesh::BoundaryMarker::ArcRight | dumbbell_core::mesh::BoundaryMarker::ArcLeft => arc += 1,
            dumbbell_core::mesh::BoundaryMarker::StripFace => strip += 1,
            _ => phys += 1,
        }
    }
    println!("boundary: arc {arc} strip {strip} physical {phys}");
}
