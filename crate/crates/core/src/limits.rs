//! Truncated versions of the unbounded limit problems: harmonic solves with
//! homogeneous Neumann walls and logarithmic Dirichlet data on far
//! truncation arcs, plus the slope/flux extraction used for profile
//! comparison.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fem::{self, DiscreteOperator, Field};
use crate::geometry::{NeckProfile, Region};
use crate::mesh::{
    self, mirror_parts, sizing::{SizeField, SizeSource}, BoundaryMarker, MeshError, MeshParams,
    StitchBuilder, TriMesh,
};
use crate::sparse::{cg, CgOptions, Preconditioner, SolveError, Triplets};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("truncation radius must be at least 10, got {0}")]
    RadiusTooSmall(f64),
    #[error("strip truncation length {len} must be at least 10 strip widths ({width})")]
    StripTooShort { len: f64, width: f64 },
    #[error("slit ordinates must be positive, got y1 = {y1}, y2 = {y2}")]
    BadSlit { y1: f64, y2: f64 },
    #[error("sample window lies outside the domain or yields {found} points; need at least {need}")]
    InsufficientSamples { found: usize, need: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// The three truncated limit geometries.
#[derive(Debug, Clone)]
pub enum LimitKind {
    /// Two half-planes {|x| > 1} joined by the neck strip of height
    /// ell * (f1 + f2) on [-1, 1].
    Normal { profile: NeckProfile, ell: f64 },
    /// Plane minus the vertical rays {x = 0, y >= y1} and {x = 0, y <= -y2}.
    Thick { y1: f64, y2: f64 },
    /// Half-plane {x > 0} plus the semi-infinite strip
    /// {x <= 0, y_bot < y < y_top}.
    HalfStrip { y_bot: f64, y_top: f64 },
}

#[derive(Debug, Clone)]
pub struct LimitDomain {
    pub kind: LimitKind,
    /// Radius of the circular truncation arcs.
    pub radius: f64,
    /// Length of the strip truncation (half-strip only).
    pub strip_len: f64,
}

impl LimitDomain {
    pub fn new(kind: LimitKind, radius: f64, strip_len: f64) -> Result<LimitDomain, LimitError> {
        if radius < 10.0 {
            return Err(LimitError::RadiusTooSmall(radius));
        }
        if let LimitKind::HalfStrip { y_bot, y_top } = &kind {
            let width = y_top - y_bot;
            if strip_len < 10.0 * width {
                return Err(LimitError::StripTooShort { len: strip_len, width });
            }
        }
        if let LimitKind::Thick { y1, y2 } = &kind {
            if *y1 <= 0.0 || *y2 <= 0.0 {
                return Err(LimitError::BadSlit { y1: *y1, y2: *y2 });
            }
        }
        Ok(LimitDomain { kind, radius, strip_len })
    }

    pub fn strip_width(&self) -> Option<f64> {
        match &self.kind {
            LimitKind::HalfStrip { y_bot, y_top } => Some(y_top - y_bot),
            _ => None,
        }
    }
}

/// Mesh resolution knobs for the limit solves.
#[derive(Debug, Clone)]
pub struct LimitMeshParams {
    /// Size near the origin / strip.
    pub h0: f64,
    /// Linear growth rate of the size with distance.
    pub growth: f64,
    pub node_budget: usize,
}

impl Default for LimitMeshParams {
    fn default() -> Self {
        LimitMeshParams { h0: 0.1, growth: 0.15, node_budget: 400_000 }
    }
}

pub struct LimitSolution {
    pub mesh: TriMesh,
    pub field: Field,
    /// Dual norm of K v restricted to non-Dirichlet nodes.
    pub harmonic_residual: f64,
    /// Integrated |flux| through the physical (Neumann) boundary.
    pub neumann_flux_residual: f64,
}

/// Samples the arc from `start` to `end` and snaps the endpoints exactly to
/// the given points so adjoining chains share vertices bit-for-bit.
fn arc_points(
    radius: f64,
    theta0: f64,
    theta1: f64,
    max_step: f64,
    start: [f64; 2],
    end: [f64; 2],
) -> Vec<[f64; 2]> {
    let arc_len = (theta1 - theta0).abs() * radius;
    let n = ((arc_len / max_step).ceil() as usize).max(8);
    let mut pts: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let t = theta0 + (theta1 - theta0) * i as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    pts[0] = start;
    pts[n] = end;
    pts
}

/// Edge marker for limit domains: arc edges have both endpoints on the
/// truncation circle.
fn arc_marker(r: f64) -> impl Fn([f64; 2], [f64; 2]) -> BoundaryMarker {
    move |a: [f64; 2], b: [f64; 2]| {
        let on_circle = |p: [f64; 2]| {
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            (rho - r).abs() <= 1e-9 * r
        };
        if on_circle(a) && on_circle(b) {
            if a[0] + b[0] >= 0.0 {
                BoundaryMarker::ArcRight
            } else {
                BoundaryMarker::ArcLeft
            }
        } else {
            BoundaryMarker::Physical
        }
    }
}

/// Builds the truncated mesh for a limit domain. Arc edges carry
/// ArcRight/ArcLeft markers by the sign of x; the strip truncation face
/// carries StripFace.
pub fn build_limit_mesh(domain: &LimitDomain, params: &LimitMeshParams) -> Result<TriMesh, LimitError> {
    let r = domain.radius;
    let mesh_params = MeshParams {
        h_bulk: params.h0 + params.growth * r,
        node_budget: params.node_budget,
        ..Default::default()
    };

    match &domain.kind {
        LimitKind::HalfStrip { y_bot, y_top } => {
            build_halfstrip_mesh(*y_bot, *y_top, r, domain.strip_len, params, &mesh_params)
        }
        LimitKind::Normal { profile, ell } => {
            build_normal_limit_mesh(profile, *ell, r, params, &mesh_params)
        }
        LimitKind::Thick { y1, y2 } => {
            let w = 0.5 * params.h0;
            let arc_step = 0.45 * (params.h0 + params.growth * r);
            let ty = (r * r - w * w).sqrt();
            let theta_right_top = (ty).atan2(w);
            let theta_right_bot = (-ty).atan2(w);
            let mut boundary: Vec<[f64; 2]> = Vec::new();
            // Top slit: right wall down to its base, across, and up again.
            boundary.push([w, ty]);
            boundary.push([w, *y1]);
            boundary.push([-w, *y1]);
            boundary.push([-w, ty]);
            // Left arc from the top slit to the bottom slit (through x < 0).
            boundary.extend(
                arc_points(
                    r,
                    PI - theta_right_top,
                    PI + theta_right_top,
                    arc_step,
                    [-w, ty],
                    [-w, -ty],
                )
                .into_iter()
                .skip(1),
            );
            // Bottom slit: left wall, base, right wall.
            boundary.push([-w, -*y2]);
            boundary.push([w, -*y2]);
            boundary.push([w, -ty]);
            // Right arc from the bottom slit back to the top slit.
            let mut right_arc = arc_points(
                r,
                theta_right_bot,
                theta_right_top,
                arc_step,
                [w, -ty],
                [w, ty],
            );
            right_arc.pop(); // the first boundary vertex closes the cycle
            boundary.extend(right_arc.into_iter().skip(1));
            let size = SizeField {
                h_max: params.h0 + params.growth * r,
                growth: params.growth,
                sources: vec![SizeSource::Segment {
                    a: [0.0, -*y2],
                    b: [0.0, *y1],
                    h0: params.h0,
                    r_flat: 0.5 * (y1 + y2),
                }],
            };
            let region = |p: [f64; 2]| if p[0] < 0.0 { Region::LeftBulk } else { Region::RightBulk };
            Ok(mesh::triangulate_polygon(&boundary, &size, &mesh_params, region, arc_marker(r))?)
        }
    }
}

/// Right half of the normal limit domain, mirrored and stitched when the
/// profile is even; meshed in two conforming halves otherwise.
fn build_normal_limit_mesh(
    profile: &NeckProfile,
    ell: f64,
    r: f64,
    params: &LimitMeshParams,
    mesh_params: &MeshParams,
) -> Result<TriMesh, LimitError> {
    use crate::mesh::polygon::{InputSegment, PolygonMesher};

    let arc_step = 0.45 * (params.h0 + params.growth * r);
    let n_knots = profile.f1.n_knots().max(65);
    let samples_right: Vec<(f64, f64, f64)> = (0..n_knots)
        .map(|i| {
            let xi = i as f64 / (n_knots - 1) as f64;
            (xi, -ell * profile.f2.eval(xi), ell * profile.f1.eval(xi))
        })
        .collect();

    // Shared port discretization at x = 0.
    let (y_bot0, y_top0) = (samples_right[0].1, samples_right[0].2);
    let n_port = (((y_top0 - y_bot0) / params.h0).ceil() as usize).max(4);
    let port: Vec<[f64; 2]> = (0..=n_port)
        .map(|j| [0.0, y_bot0 + (y_top0 - y_bot0) * j as f64 / n_port as f64])
        .collect();

    let ty = (r * r - 1.0).sqrt();
    let theta_hi = ty.atan2(1.0);
    let theta_lo = (-ty).atan2(1.0);

    let mut segments: Vec<InputSegment> = Vec::new();
    let push_chain = |pts: &[[f64; 2]], protected: bool, segments: &mut Vec<InputSegment>| {
        for w in pts.windows(2) {
            segments.push(InputSegment {
                a: w[0],
                b: w[1],
                protected,
                marker: BoundaryMarker::Physical,
            });
        }
    };
    // Neck bottom left to right, wall down, arc, wall up, neck top right to
    // left, then the protected port pieces downward.
    let bottom: Vec<[f64; 2]> = samples_right.iter().map(|s| [s.0, s.1]).collect();
    push_chain(&bottom, false, &mut segments);
    push_chain(&[[1.0, samples_right[n_knots - 1].1], [1.0, -ty]], false, &mut segments);
    let arc = arc_points(r, theta_lo, theta_hi, arc_step, [1.0, -ty], [1.0, ty]);
    push_chain(&arc, false, &mut segments);
    push_chain(&[[1.0, ty], [1.0, samples_right[n_knots - 1].2]], false, &mut segments);
    let top: Vec<[f64; 2]> = samples_right.iter().rev().map(|s| [s.0, s.2]).collect();
    push_chain(&top, false, &mut segments);
    let mut port_down = port.clone();
    port_down.reverse();
    push_chain(&port_down, true, &mut segments);

    let size = SizeField {
        h_max: params.h0 + params.growth * r,
        growth: params.growth,
        sources: vec![SizeSource::Segment {
            a: [0.0, 0.0],
            b: [1.0, 0.0],
            h0: params.h0,
            r_flat: ell * profile.m_const(),
        }],
    };
    let raw = PolygonMesher::new(&segments, &size, mesh_params.min_angle_deg, mesh_params.node_budget)?
        .run()?;

    let (left_nodes, left_tris) = mirror_parts(&raw.nodes, &raw.triangles);
    let tag = |nodes: &[[f64; 2]], t: &[u32; 3]| {
        let x = (nodes[t[0] as usize][0] + nodes[t[1] as usize][0] + nodes[t[2] as usize][0]) / 3.0;
        if x > 1.0 {
            Region::RightBulk
        } else if x < -1.0 {
            Region::LeftBulk
        } else {
            Region::Neck
        }
    };
    let mut builder = StitchBuilder::new();
    builder.add(&raw.nodes, &raw.triangles, Region::RightBulk);
    builder.add(&left_nodes, &left_tris, Region::LeftBulk);
    let (nodes, triangles, _) = builder.finish();
    let region: Vec<Region> = triangles.iter().map(|t| tag(&nodes, t)).collect();
    Ok(TriMesh::from_parts(nodes, triangles, region, arc_marker(r))?)
}

/// Solves the harmonic limit problem: Dirichlet data
/// `±log_coef * ln|(x,y)|` on the truncation arcs (sign by side), natural
/// Neumann on physical walls, and on the strip face the influx matching the
/// far-strip linear profile. The solution is shifted so v(0,0) = 0.
pub fn solve_limit(
    domain: &LimitDomain,
    log_coef: f64,
    params: &LimitMeshParams,
) -> Result<LimitSolution, LimitError> {
    let mesh = build_limit_mesh(domain, params)?;
    let op = DiscreteOperator::assemble(&mesh);
    let n = op.n();

    // Dirichlet values on arc nodes.
    let mut dirichlet: Vec<Option<f64>> = vec![None; n];
    for be in mesh.boundary() {
        let sign = match be.marker {
            BoundaryMarker::ArcRight => 1.0,
            BoundaryMarker::ArcLeft => -1.0,
            _ => continue,
        };
        for idx in [be.a, be.b] {
            let p = mesh.nodes()[idx as usize];
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            dirichlet[idx as usize] = Some(sign * log_coef * rho.ln());
        }
    }

    // Strip-face influx: total flux pi * log_coef spread uniformly.
    let mut load = vec![0.0; n];
    if let Some(width) = domain.strip_width() {
        let slope = PI * log_coef / width;
        for be in mesh.boundary() {
            if be.marker != BoundaryMarker::StripFace {
                continue;
            }
            let a = mesh.nodes()[be.a as usize];
            let b = mesh.nodes()[be.b as usize];
            let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            // Outward normal points toward -x; g = dv/dnu = -slope.
            load[be.a as usize] += -slope * len / 2.0;
            load[be.b as usize] += -slope * len / 2.0;
        }
    }

    // Reduced SPD system on the free nodes.
    let free: Vec<usize> = (0..n).filter(|&i| dirichlet[i].is_none()).collect();
    let mut free_index = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        free_index[i] = k;
    }
    let k_full = op.stiffness();
    let mut trip = Triplets::new(free.len());
    let mut rhs = vec![0.0; free.len()];
    for (k, &i) in free.iter().enumerate() {
        rhs[k] = load[i];
    }
    for (k, &i) in free.iter().enumerate() {
        for (j, v) in k_full.row(i) {
            match dirichlet[j] {
                None => trip.push(k, free_index[j], v),
                Some(val) => rhs[k] -= v * val,
            }
        }
    }
    let a = trip.to_csr();
    let pc = Preconditioner::ic0(&a);
    let mut x = vec![0.0; free.len()];
    cg(&a, &rhs, &mut x, &pc, &CgOptions { rel_tol: 1e-11, max_iters: 200_000 })?;

    let mut values = vec![0.0; n];
    for (k, &i) in free.iter().enumerate() {
        values[i] = x[k];
    }
    for i in 0..n {
        if let Some(v) = dirichlet[i] {
            values[i] = v;
        }
    }
    let mut field = Field::new(&mesh, values)?;
    let shift = fem::probe(&mesh, &field, [0.0, 0.0])?;
    for v in field.values_mut() {
        *v -= shift;
    }

    // Diagnostics: dual-norm residual on free nodes minus boundary loads,
    // and the integrated physical-wall flux.
    let kv = op.stiffness().matvec_alloc(field.values());
    let mut res2 = 0.0;
    for &i in &free {
        let r = kv[i] - load[i];
        res2 += r * r / op.mass()[i];
    }
    let mut wall_flux = 0.0;
    for be in mesh.boundary() {
        if be.marker != BoundaryMarker::Physical {
            continue;
        }
        wall_flux += edge_flux(&mesh, &field, be.a, be.b).abs();
    }
    Ok(LimitSolution {
        field,
        harmonic_residual: res2.sqrt(),
        neumann_flux_residual: wall_flux,
        mesh,
    })
}

/// Flux of grad(v) through the edge (a, b) using the adjacent triangle's
/// constant gradient.
fn edge_flux(mesh: &TriMesh, v: &Field, a: u32, b: u32) -> f64 {
    let pa = mesh.nodes()[a as usize];
    let pb = mesh.nodes()[b as usize];
    let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
    let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
    // Pull the midpoint slightly inward along the edge normal.
    let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
    let inner = [mid[0] - 1e-9 * normal[0] - 1e-12, mid[1] - 1e-9 * normal[1]];
    match mesh.locate(inner) {
        Some((t, _)) => {
            let g = fem::triangle_gradient(mesh, v, t);
            (g[0] * normal[0] + g[1] * normal[1]) * len
        }
        None => 0.0,
    }
}

/// Annular sector for log-slope sampling.
#[derive(Debug, Clone, Copy)]
pub struct RaySector {
    pub center: [f64; 2],
    pub theta_min: f64,
    pub theta_max: f64,
}

/// Least-squares fit of v against ln r over points sampled in the sector;
/// returns the slope b of v ~ a + b ln r.
pub fn log_slope_fit(
    mesh: &TriMesh,
    v: &Field,
    sector: RaySector,
    r_range: (f64, f64),
) -> Result<f64, LimitError> {
    let (r0, r1) = r_range;
    let n_r = 32;
    let n_t = 9;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n_r {
        let r = r0 * (r1 / r0).powf((i as f64 + 0.5) / n_r as f64);
        for j in 0..n_t {
            let theta = sector.theta_min
                + (sector.theta_max - sector.theta_min) * (j as f64 + 0.5) / n_t as f64;
            let p = [
                sector.center[0] + r * theta.cos(),
                sector.center[1] + r * theta.sin(),
            ];
            if let Ok(val) = fem::probe(mesh, v, p) {
                xs.push(r.ln());
                ys.push(val);
            }
        }
    }
    fit_line(&xs, &ys).map(|(_, b)| b)
}

/// Least-squares fit of v against x over a rectangle of sample points;
/// returns the slope of v ~ a + s x.
pub fn linear_slope_fit(
    mesh: &TriMesh,
    v: &Field,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<f64, LimitError> {
    let n_x = 48;
    let n_y = 7;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n_x {
        let x = x_range.0 + (x_range.1 - x_range.0) * (i as f64 + 0.5) / n_x as f64;
        for j in 0..n_y {
            let y = y_range.0 + (y_range.1 - y_range.0) * (j as f64 + 0.5) / n_y as f64;
            if let Ok(val) = fem::probe(mesh, v, [x, y]) {
                xs.push(x);
                ys.push(val);
            }
        }
    }
    fit_line(&xs, &ys).map(|(_, b)| b)
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), LimitError> {
    let n = xs.len();
    if n < 8 {
        return Err(LimitError::InsufficientSamples { found: n, need: 8 });
    }
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n as f64 * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(LimitError::InsufficientSamples { found: n, need: 8 });
    }
    let b = (n as f64 * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n as f64;
    Ok((a, b))
}

/// Exact flux of grad(v) through the vertical section at `x0`: sums the
/// per-triangle constant dv/dx times the clipped y-extent.
pub fn flux_through_section(mesh: &TriMesh, v: &Field, x0: f64) -> f64 {
    let mut total = 0.0;
    for ti in mesh.locator().candidates_near_vertical(x0) {
        let t = ti as usize;
        let tri = mesh.triangles()[t];
        let ps = [
            mesh.nodes()[tri[0] as usize],
            mesh.nodes()[tri[1] as usize],
            mesh.nodes()[tri[2] as usize],
        ];
        let mut ys: Vec<f64> = Vec::with_capacity(3);
        for k in 0..3 {
            let (a, b) = (ps[k], ps[(k + 1) % 3]);
            let (xa, xb) = (a[0], b[0]);
            if (xa - x0) * (xb - x0) < 0.0 {
                let t = (x0 - xa) / (xb - xa);
                ys.push(a[1] + t * (b[1] - a[1]));
            } else if xa == x0 {
                ys.push(a[1]);
            }
        }
        if ys.len() < 2 {
            continue;
        }
        let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if y_max > y_min {
            let g = fem::triangle_gradient(mesh, v, t);
            total += g[0] * (y_max - y_min);
        }
    }
    total
}

/// Flux of grad(v) through the circular arc of the given radius over
/// `theta_range`, restricted to points inside the mesh, by midpoint
/// quadrature.
pub fn flux_through_circle(
    mesh: &TriMesh,
    v: &Field,
    center: [f64; 2],
    radius: f64,
    theta_range: (f64, f64),
) -> f64 {
    let n = 2048;
    let (t0, t1) = theta_range;
    let mut total = 0.0;
    for i in 0..n {
        let theta = t0 + (t1 - t0) * (i as f64 + 0.5) / n as f64;
        let dir = [theta.cos(), theta.sin()];
        let p = [center[0] + radius * dir[0], center[1] + radius * dir[1]];
        if let Some((t, _)) = mesh.locate(p) {
            let g = fem::triangle_gradient(mesh, v, t);
            total += (g[0] * dir[0] + g[1] * dir[1]) * radius * ((t1 - t0) / n as f64);
        }
    }
    total
}
