//! P1 finite elements over a `TriMesh`: the discrete energy
//! `F(u) = 1/2 u'Ku + sum_i m_i W(u_i)` with lumped potential term, its
//! gradient and Hessian action, point probes, and localized energies.

use thiserror::Error;

use crate::geometry::Region;
use crate::mesh::TriMesh;
use crate::potential::Potential;
use crate::sparse::{Csr, Triplets};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("field belongs to mesh {field} but the operator was assembled on mesh {operator}")]
    MeshMismatch { field: u64, operator: u64 },
    #[error("point ({0}, {1}) lies outside the mesh")]
    OutsideMesh(f64, f64),
    #[error("field length {len} does not match node count {nodes}")]
    BadLength { len: usize, nodes: usize },
    #[error("field contains non-finite values at node {0}")]
    NonFinite(usize),
}

/// Nodal scalar field bound to a specific mesh.
#[derive(Debug, Clone)]
pub struct Field {
    values: Vec<f64>,
    mesh_id: u64,
}

impl Field {
    pub fn new(mesh: &TriMesh, values: Vec<f64>) -> Result<Field, FemError> {
        if values.len() != mesh.nodes().len() {
            return Err(FemError::BadLength { len: values.len(), nodes: mesh.nodes().len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FemError::NonFinite(i));
        }
        Ok(Field { values, mesh_id: mesh.id() })
    }

    pub fn constant(mesh: &TriMesh, c: f64) -> Field {
        Field { values: vec![c; mesh.nodes().len()], mesh_id: mesh.id() }
    }

    /// Samples a function of position at the nodes.
    pub fn from_fn(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field {
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
            mesh_id: mesh.id(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Stiffness matrix (pure-Neumann Laplacian) and lumped mass vector.
pub struct DiscreteOperator {
    stiffness: Csr,
    mass: Vec<f64>,
    mesh_id: u64,
    area: f64,
}

impl DiscreteOperator {
    pub fn assemble(mesh: &TriMesh) -> DiscreteOperator {
        let n = mesh.nodes().len();
        let mut trip = Triplets::new(n);
        let mut mass = vec![0.0; n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let a = mesh.nodes()[tri[0] as usize];
            let b = mesh.nodes()[tri[1] as usize];
            let c = mesh.nodes()[tri[2] as usize];
            let area = mesh.triangle_area(t);
            // Gradients of the barycentric basis functions (times 2*area).
            let g = [
                [b[1] - c[1], c[0] - b[0]],
                [c[1] - a[1], a[0] - c[0]],
                [a[1] - b[1], b[0] - a[0]],
            ];
            let scale = 1.0 / (4.0 * area);
            for i in 0..3 {
                mass[tri[i] as usize] += area / 3.0;
                for j in 0..3 {
                    let k_ij = scale * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    trip.push(tri[i] as usize, tri[j] as usize, k_ij);
                }
            }
        }
        let stiffness = trip.to_csr();
        let area = mass.iter().sum();
        DiscreteOperator { stiffness, mass, mesh_id: mesh.id(), area }
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn domain_area(&self) -> f64 {
        self.area
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    fn check(&self, u: &Field) -> Result<(), FemError> {
        if u.mesh_id != self.mesh_id {
            return Err(FemError::MeshMismatch { field: u.mesh_id, operator: self.mesh_id });
        }
        Ok(())
    }

    /// `F(u) = 1/2 u'Ku + sum_i m_i W(u_i)`.
    pub fn energy(&self, p: &Potential, u: &Field) -> Result<f64, FemError> {
        self.check(u)?;
        let ku = self.stiffness.matvec_alloc(&u.values);
        let dirichlet: f64 = 0.5 * crate::sparse::dot(&u.values, &ku);
        let potential: f64 = self
            .mass
            .iter()
            .zip(&u.values)
            .map(|(&m, &v)| m * p.w(v))
            .sum();
        Ok(dirichlet + potential)
    }

    /// Dirichlet part only: `1/2 u'Ku`.
    pub fn dirichlet_energy(&self, u: &Field) -> Result<f64, FemError> {
        self.check(u)?;
        let ku = self.stiffness.matvec_alloc(&u.values);
        Ok(0.5 * crate::sparse::dot(&u.values, &ku))
    }

    /// `g = Ku + m .* W'(u)`.
    pub fn gradient(&self, p: &Potential, u: &Field) -> Result<Field, FemError> {
        self.check(u)?;
        let mut g = self.stiffness.matvec_alloc(&u.values);
        for i in 0..g.len() {
            g[i] += self.mass[i] * p.dw(u.values[i]);
        }
        Ok(Field { values: g, mesh_id: self.mesh_id })
    }

    /// Mass-weighted dual norm of the gradient, `sqrt(sum g_i^2 / m_i)`;
    /// stable under mesh refinement.
    pub fn residual_norm(&self, p: &Potential, u: &Field) -> Result<f64, FemError> {
        let g = self.gradient(p, u)?;
        Ok(self.dual_norm(&g))
    }

    pub fn dual_norm(&self, g: &Field) -> f64 {
        g.values
            .iter()
            .zip(&self.mass)
            .map(|(&gi, &mi)| gi * gi / mi)
            .sum::<f64>()
            .sqrt()
    }

    /// Action of the second variation: `K phi + m .* (W''(u) .* phi)`.
    pub fn hessian_apply(&self, p: &Potential, u: &Field, phi: &Field) -> Result<Field, FemError> {
        self.check(u)?;
        self.check(phi)?;
        let mut h = self.stiffness.matvec_alloc(&phi.values);
        for i in 0..h.len() {
            h[i] += self.mass[i] * p.ddw(u.values[i]) * phi.values[i];
        }
        Ok(Field { values: h, mesh_id: self.mesh_id })
    }

    /// Mass inner product `sum m_i a_i b_i`.
    pub fn mass_dot(&self, a: &Field, b: &Field) -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .zip(&self.mass)
            .map(|((&x, &y), &m)| m * x * y)
            .sum()
    }

    /// Mass-weighted L2 distance between two fields.
    pub fn l2_mass_distance(&self, a: &Field, b: &Field) -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .zip(&self.mass)
            .map(|((&x, &y), &m)| m * (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Lumped L1 norm of (a - b).
    pub fn l1_mass_distance(&self, a: &Field, b: &Field) -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .zip(&self.mass)
            .map(|((&x, &y), &m)| m * (x - y).abs())
            .sum()
    }
}

/// Barycentric interpolation of the field at a point.
pub fn probe(mesh: &TriMesh, u: &Field, point: [f64; 2]) -> Result<f64, FemError> {
    if u.mesh_id() != mesh.id() {
        return Err(FemError::MeshMismatch { field: u.mesh_id(), operator: mesh.id() });
    }
    let (t, bary) = mesh
        .locate(point)
        .ok_or(FemError::OutsideMesh(point[0], point[1]))?;
    let tri = mesh.triangles()[t];
    Ok(bary[0] * u.values[tri[0] as usize]
        + bary[1] * u.values[tri[1] as usize]
        + bary[2] * u.values[tri[2] as usize])
}

/// Constant gradient of the P1 field on triangle `t`.
pub fn triangle_gradient(mesh: &TriMesh, u: &Field, t: usize) -> [f64; 2] {
    let tri = mesh.triangles()[t];
    let a = mesh.nodes()[tri[0] as usize];
    let b = mesh.nodes()[tri[1] as usize];
    let c = mesh.nodes()[tri[2] as usize];
    let area = mesh.triangle_area(t);
    let (ua, ub, uc) = (
        u.values[tri[0] as usize],
        u.values[tri[1] as usize],
        u.values[tri[2] as usize],
    );
    let gx = (ua * (b[1] - c[1]) + ub * (c[1] - a[1]) + uc * (a[1] - b[1])) / (2.0 * area);
    let gy = (ua * (c[0] - b[0]) + ub * (a[0] - c[0]) + uc * (b[0] - a[0])) / (2.0 * area);
    [gx, gy]
}

/// Dirichlet energy localized to a ball: the sum of `area * |grad u|^2` over
/// triangles whose barycenter lies in the ball (no 1/2 factor; this is the
/// localization quantity c_eps).
pub fn local_energy(mesh: &TriMesh, u: &Field, center: [f64; 2], radius: f64) -> Result<f64, FemError> {
    if u.mesh_id() != mesh.id() {
        return Err(FemError::MeshMismatch { field: u.mesh_id(), operator: mesh.id() });
    }
    let r2 = radius * radius;
    let mut acc = 0.0;
    for t in 0..mesh.triangles().len() {
        let bary = mesh.barycenter(t);
        let d2 = (bary[0] - center[0]).powi(2) + (bary[1] - center[1]).powi(2);
        if d2 <= r2 {
            let g = triangle_gradient(mesh, u, t);
            acc += mesh.triangle_area(t) * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    Ok(acc)
}

/// `sum_{i in region} m_i^region |u_i - constant|` with the region-restricted
/// lumped mass.
pub fn region_l1_distance(mesh: &TriMesh, u: &Field, region: Region, constant: f64) -> f64 {
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if mesh.region()[t] != region {
            continue;
        }
        let area = mesh.triangle_area(t);
        for &v in tri {
            acc += area / 3.0 * (u.values[v as usize] - constant).abs();
        }
    }
    acc
}

/// Energy restricted to one region (Dirichlet + lumped potential, both
/// region-restricted).
pub fn region_energy(
    mesh: &TriMesh,
    p: &Potential,
    u: &Field,
    region: Region,
) -> Result<f64, FemError> {
    if u.mesh_id() != mesh.id() {
        return Err(FemError::MeshMismatch { field: u.mesh_id(), operator: mesh.id() });
    }
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if mesh.region()[t] != region {
            continue;
        }
        let area = mesh.triangle_area(t);
        let g = triangle_gradient(mesh, u, t);
        acc += 0.5 * area * (g[0] * g[0] + g[1] * g[1]);
        for &v in tri {
            acc += area / 3.0 * p.w(u.values[v as usize]);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{sizing::SizeField, triangulate_polygon, BoundaryMarker, MeshParams};
    use crate::potential::Potential;
    use rand::{Rng, SeedableRng};

    fn unit_square(h: f64) -> TriMesh {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        triangulate_polygon(
            &square,
            &SizeField::uniform(h),
            &MeshParams::default(),
            |_| Region::RightBulk,
            |_| BoundaryMarker::Physical,
        )
        .unwrap()
    }

    #[test]
    fn constant_well_field_properties() {
        let mesh = unit_square(0.2);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let u = Field::constant(&mesh, 1.0);
        // Energy W(1)*|O| = 0, residual zero.
        assert!(op.energy(&p, &u).unwrap().abs() < 1e-14);
        assert!(op.residual_norm(&p, &u).unwrap() < 1e-13);
        // K * 1 = 0 (pure Neumann).
        let ones = vec![1.0; op.n()];
        let k1 = op.stiffness().matvec_alloc(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
        // Mass sums to the domain area.
        assert!((op.domain_area() - 1.0).abs() < 1e-12);
        // Stiffness is symmetric by assembly.
        assert!(op.stiffness().symmetry_defect() < 1e-14);
    }

    #[test]
    fn zero_field_energy_is_area() {
        let mesh = unit_square(0.2);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let u = Field::constant(&mesh, 0.0);
        // W(0) = 1, area 1.
        assert!((op.energy(&p, &u).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_field_dirichlet_energy() {
        let mesh = unit_square(0.2);
        let op = DiscreteOperator::assemble(&mesh);
        let u = Field::from_fn(&mesh, |p| p[0]);
        // |grad u|^2 = 1 over area 1, halved.
        assert!((op.dirichlet_energy(&u).unwrap() - 0.5).abs() < 1e-12);
        let p = Potential::zero();
        assert!((op.energy(&p, &u).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_nonwell_residual() {
        let mesh = unit_square(0.2);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let c = 0.3;
        let u = Field::constant(&mesh, c);
        // residual = |W'(c)| * sqrt(sum m) = |W'(c)| * sqrt(|O|).
        let expect = p.dw(c).abs() * op.domain_area().sqrt();
        let got = op.residual_norm(&p, &u).unwrap();
        assert!((got - expect).abs() < 1e-10 * (1.0 + expect));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mesh = unit_square(0.25);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = Field::new(&mesh, (0..op.n()).map(|_| rng.random_range(-1.2..1.2)).collect()).unwrap();
        let phi = Field::new(&mesh, (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let g = op.gradient(&p, &u).unwrap();
        let pairing = crate::sparse::dot(g.values(), phi.values());
        let h = 1e-5;
        let mut up = u.clone();
        let mut um = u.clone();
        for i in 0..op.n() {
            up.values_mut()[i] += h * phi.values()[i];
            um.values_mut()[i] -= h * phi.values()[i];
        }
        let fd = (op.energy(&p, &up).unwrap() - op.energy(&p, &um).unwrap()) / (2.0 * h);
        assert!(
            (fd - pairing).abs() <= 1e-5 * (1.0 + pairing.abs()),
            "fd {fd} vs pairing {pairing}"
        );
    }

    #[test]
    fn hessian_symmetry_and_fd() {
        let mesh = unit_square(0.25);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let u = Field::new(&mesh, (0..op.n()).map(|_| rng.random_range(-1.2..1.2)).collect()).unwrap();
        let phi = Field::new(&mesh, (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let psi = Field::new(&mesh, (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();

        let h_phi = op.hessian_apply(&p, &u, &phi).unwrap();
        let h_psi = op.hessian_apply(&p, &u, &psi).unwrap();
        let s1 = crate::sparse::dot(h_phi.values(), psi.values());
        let s2 = crate::sparse::dot(h_psi.values(), phi.values());
        assert!((s1 - s2).abs() <= 1e-12 * (1.0 + s1.abs()));

        // (gradient(u + h phi) - gradient(u - h phi)) / 2h vs H phi.
        let h = 1e-5;
        let mut up = u.clone();
        let mut um = u.clone();
        for i in 0..op.n() {
            up.values_mut()[i] += h * phi.values()[i];
            um.values_mut()[i] -= h * phi.values()[i];
        }
        let gp = op.gradient(&p, &up).unwrap();
        let gm = op.gradient(&p, &um).unwrap();
        let mut worst = 0.0f64;
        for i in 0..op.n() {
            let fd = (gp.values()[i] - gm.values()[i]) / (2.0 * h);
            worst = worst.max((fd - h_phi.values()[i]).abs());
        }
        let scale = h_phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-5 * (1.0 + scale), "worst {worst} scale {scale}");
    }

    #[test]
    fn hessian_of_constant_well() {
        let mesh = unit_square(0.3);
        let op = DiscreteOperator::assemble(&mesh);
        let p = Potential::quartic(-1.0, 1.0);
        let u = Field::constant(&mesh, 1.0);
        let phi = Field::constant(&mesh, 1.0);
        let h = op.hessian_apply(&p, &u, &phi).unwrap();
        // K phi = 0, so H phi = W''(1) m = 8 m.
        for (hv, m) in h.values().iter().zip(op.mass()) {
            assert!((hv - 8.0 * m).abs() < 1e-12);
        }
    }

    #[test]
    fn null_mode_shift_invariance() {
        let mesh = unit_square(0.25);
        let op = DiscreteOperator::assemble(&mesh);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = u.iter().map(|v| v + 0.37).collect();
        let ku = op.stiffness().matvec_alloc(&u);
        let ks = op.stiffness().matvec_alloc(&shifted);
        for (a, b) in ku.iter().zip(&ks) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn probe_and_local_energy() {
        let mesh = unit_square(0.2);
        let u = Field::constant(&mesh, 3.0);
        assert!((probe(&mesh, &u, [0.4, 0.7]).unwrap() - 3.0).abs() < 1e-14);
        assert!(matches!(
            probe(&mesh, &u, [1.5, 0.5]),
            Err(FemError::OutsideMesh(_, _))
        ));

        // local_energy of u = x over a ball: covered triangle area.
        let u = Field::from_fn(&mesh, |p| p[0]);
        let center = [0.5, 0.5];
        let radius = 0.3;
        let covered: f64 = (0..mesh.triangles().len())
            .filter(|&t| {
                let b = mesh.barycenter(t);
                (b[0] - center[0]).powi(2) + (b[1] - center[1]).powi(2) <= radius * radius
            })
            .map(|t| mesh.triangle_area(t))
            .sum();
        let le = local_energy(&mesh, &u, center, radius).unwrap();
        assert!((le - covered).abs() < 1e-12);
    }

    #[test]
    fn region_l1_of_constant() {
        let mesh = unit_square(0.2);
        let u = Field::constant(&mesh, 0.5);
        assert!(region_l1_distance(&mesh, &u, Region::RightBulk, 0.5).abs() < 1e-15);
        // Against a different constant: |O| * |c1 - c0|.
        let d = region_l1_distance(&mesh, &u, Region::RightBulk, 0.2);
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mesh_mismatch_detected() {
        let mesh1 = unit_square(0.3);
        let mesh2 = unit_square(0.3);
        let op = DiscreteOperator::assemble(&mesh1);
        let u = Field::constant(&mesh2, 1.0);
        let p = Potential::quartic(-1.0, 1.0);
        assert!(matches!(op.energy(&p, &u), Err(FemError::MeshMismatch { .. })));
    }
}
