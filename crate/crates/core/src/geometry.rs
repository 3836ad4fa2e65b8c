//! Dumbbell domain construction: bulk polygons joined by a thin neck, and
//! classification of the neck scaling regime.

use serde::Serialize;
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("profile must be strictly positive; f(x) = {value} at x = {x}")]
    NonPositiveProfile { x: f64, value: f64 },
    #[error("flat_ends declared with eta0 = {eta0} but f'({x}) = {deriv}")]
    FlatEndsViolation { eta0: f64, x: f64, deriv: f64 },
    #[error("profile needs at least 5 knots, got {0}")]
    TooFewKnots(usize),
    #[error("eta0 must lie in (0, 1], got {0}")]
    BadEta(f64),
    #[error("polygon needs at least 3 vertices")]
    DegeneratePolygon,
    #[error("polygon is not simple: segment {i} ({a0:?} -> {a1:?}) intersects segment {j} ({b0:?} -> {b1:?})")]
    SelfIntersection { i: usize, j: usize, a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2] },
    #[error("origin does not lie on the polygon boundary (closest distance {dist})")]
    OriginNotOnBoundary { dist: f64 },
    #[error("bulk polygon extends into the wrong half-plane (side {side:?}, offending x = {x})")]
    WrongHalfPlane { side: Side, x: f64 },
    #[error("boundary within distance {radius} of the origin is not the vertical segment x = 0: {reason}")]
    FlatSegmentViolation { radius: f64, reason: String },
    #[error("bulk polygon is not convex at vertex {index} but convex_bulks was requested")]
    NotConvex { index: usize },
    #[error("flat radius r0 must be positive, got {0}")]
    BadFlatRadius(f64),
    #[error("left/right bulk assigned to the wrong side")]
    SideMismatch,
    #[error("delta = {delta} too large: requires delta * {m} < r0 = {r0}")]
    DeltaTooLarge { delta: f64, m: f64, r0: f64 },
    #[error("epsilon and delta must be positive, got eps = {eps}, delta = {delta}")]
    NonPositiveScales { eps: f64, delta: f64 },
    #[error("scaling family coefficient must be positive, got {0}")]
    BadScalingCoefficient(f64),
    #[error("power-law exponent must be positive for delta -> 0, got {0}")]
    BadScalingExponent(f64),
    #[error("port segment [{lo}, {hi}] not contained in the flat edge span [{span_lo}, {span_hi}]")]
    PortOutsideFlatEdge { lo: f64, hi: f64, span_lo: f64, span_hi: f64 },
}

/// Which half-plane a bulk occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Region tag for points and triangles of the assembled domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    LeftBulk,
    Neck,
    RightBulk,
}

// ---------------------------------------------------------------------------
// Neck profiles
// ---------------------------------------------------------------------------

/// A scalar C^1 piecewise-cubic Hermite interpolant on a uniform knot grid
/// over [-1, 1]. Knot derivatives come from central differences (one-sided
/// 3-point at the ends), which reproduces constants and quadratics exactly.
#[derive(Debug, Clone)]
pub struct ProfileFn {
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl ProfileFn {
    pub fn from_fn(f: impl Fn(f64) -> f64, n_knots: usize) -> Result<Self, GeometryError> {
        if n_knots < 5 {
            return Err(GeometryError::TooFewKnots(n_knots));
        }
        let h = 2.0 / (n_knots - 1) as f64;
        let values: Vec<f64> = (0..n_knots).map(|i| f(-1.0 + i as f64 * h)).collect();
        let n = n_knots - 1;
        let mut derivs = vec![0.0; n_knots];
        derivs[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        derivs[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h);
        for i in 1..n {
            derivs[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        Ok(ProfileFn { values, derivs })
    }

    pub fn constant(c: f64) -> Self {
        ProfileFn { values: vec![c; 5], derivs: vec![0.0; 5] }
    }

    pub fn n_knots(&self) -> usize {
        self.values.len()
    }

    pub fn knot_x(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.hermite(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.hermite(x).1
    }

    fn hermite(&self, x: f64) -> (f64, f64) {
        let n = self.values.len() - 1;
        let h = 2.0 / n as f64;
        let s = ((x + 1.0) / h).floor();
        let i = (s.max(0.0) as usize).min(n - 1);
        let t = (x - (-1.0 + i as f64 * h)) / h;
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = v0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + v1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2);
        let dvalue = v0 * (6.0 * t2 - 6.0 * t)
            + m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + v1 * (-6.0 * t2 + 6.0 * t)
            + m1 * (3.0 * t2 - 2.0 * t);
        (value, dvalue / h)
    }

    /// Supremum norm from the knot values.
    pub fn sup_from_knots(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Top and bottom profiles of the rescaled neck.
#[derive(Debug, Clone)]
pub struct NeckProfile {
    pub f1: ProfileFn,
    pub f2: ProfileFn,
    /// When set, asserts f_i' = 0 on (1 - eta0, 1) and (-1, -1 + eta0).
    pub flat_ends: Option<f64>,
}

impl NeckProfile {
    pub fn new(f1: ProfileFn, f2: ProfileFn, flat_ends: Option<f64>) -> Result<Self, GeometryError> {
        let p = NeckProfile { f1, f2, flat_ends };
        p.validate()?;
        Ok(p)
    }

    /// Constant profiles are flat everywhere.
    pub fn constant(c1: f64, c2: f64) -> Result<Self, GeometryError> {
        NeckProfile::new(ProfileFn::constant(c1), ProfileFn::constant(c2), Some(1.0))
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let n = 4096;
        for i in 0..=n {
            let x = -1.0 + 2.0 * i as f64 / n as f64;
            for f in [&self.f1, &self.f2] {
                let v = f.eval(x);
                if v <= 0.0 {
                    return Err(GeometryError::NonPositiveProfile { x, value: v });
                }
            }
        }
        if let Some(eta0) = self.flat_ends {
            if eta0 <= 0.0 || eta0 > 1.0 {
                return Err(GeometryError::BadEta(eta0));
            }
            for i in 0..=512 {
                let s = 1.0 - eta0 + eta0 * i as f64 / 512.0;
                for x in [s, -s] {
                    for f in [&self.f1, &self.f2] {
                        let d = f.deriv(x);
                        if d.abs() > 1e-10 {
                            return Err(GeometryError::FlatEndsViolation { eta0, x, deriv: d });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sum(&self, x: f64) -> f64 {
        self.f1.eval(x) + self.f2.eval(x)
    }

    /// `max(||f1||_inf, ||f2||_inf) + 1`, from knot values.
    pub fn m_const(&self) -> f64 {
        self.f1.sup_from_knots().max(self.f2.sup_from_knots()) + 1.0
    }

    /// Integral of f1 + f2 over [-1, 1] by adaptive quadrature.
    pub fn sum_integral(&self) -> f64 {
        quad::integrate(|x| self.sum(x), -1.0, 1.0, 1e-13)
    }
}

// ---------------------------------------------------------------------------
// Bulk polygons
// ---------------------------------------------------------------------------

/// A bulk region: a simple positively oriented polygon with a flat vertical
/// boundary segment through the origin.
#[derive(Debug, Clone)]
pub struct BulkDomain {
    polygon: Vec<[f64; 2]>,
    side: Side,
    flat_radius: f64,
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

fn seg_intersect(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> bool {
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| {
        (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
    };
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| {
        cross(o, p, q).abs() < 1e-14
            && q[0] >= o[0].min(p[0]) - 1e-14
            && q[0] <= o[0].max(p[0]) + 1e-14
            && q[1] >= o[1].min(p[1]) - 1e-14
            && q[1] <= o[1].max(p[1]) + 1e-14
    };
    (d1.abs() < 1e-14 && on(b0, b1, a0))
        || (d2.abs() < 1e-14 && on(b0, b1, a1))
        || (d3.abs() < 1e-14 && on(a0, a1, b0))
        || (d4.abs() < 1e-14 && on(a0, a1, b1))
}

/// Checks that no two non-adjacent segments of the closed polyline intersect.
fn check_simple(poly: &[[f64; 2]]) -> Result<(), GeometryError> {
    let n = poly.len();
    for i in 0..n {
        let (a0, a1) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b0, b1) = (poly[j], poly[(j + 1) % n]);
            if seg_intersect(a0, a1, b0, b1) {
                return Err(GeometryError::SelfIntersection { i, j, a0, a1, b0, b1 });
            }
        }
    }
    Ok(())
}

fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

impl BulkDomain {
    /// Builds a bulk domain, normalizing orientation to counterclockwise.
    pub fn new(polygon: Vec<[f64; 2]>, side: Side, flat_radius: f64) -> Result<Self, GeometryError> {
        if polygon.len() < 3 {
            return Err(GeometryError::DegeneratePolygon);
        }
        if flat_radius <= 0.0 {
            return Err(GeometryError::BadFlatRadius(flat_radius));
        }
        let mut polygon = polygon;
        if shoelace(&polygon) < 0.0 {
            polygon.reverse();
        }
        check_simple(&polygon)?;

        // Half-plane containment (O2): boundary may touch x = 0.
        for v in &polygon {
            let bad = match side {
                Side::Right => v[0] < -1e-12,
                Side::Left => v[0] > 1e-12,
            };
            if bad {
                return Err(GeometryError::WrongHalfPlane { side, x: v[0] });
            }
        }

        // Origin on the boundary (O1).
        let n = polygon.len();
        let dist = (0..n)
            .map(|i| dist_point_segment([0.0, 0.0], polygon[i], polygon[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        if dist > 1e-12 {
            return Err(GeometryError::OriginNotOnBoundary { dist });
        }

        let bulk = BulkDomain { polygon, side, flat_radius };
        bulk.check_flat_segment()?;
        Ok(bulk)
    }

    /// (O3): within distance 2 r0 of the origin the boundary is exactly the
    /// vertical segment x = 0.
    fn check_flat_segment(&self) -> Result<(), GeometryError> {
        let r = 2.0 * self.flat_radius;
        let (lo, hi) = self.flat_edge_span();
        if lo > -r + 1e-12 || hi < r - 1e-12 {
            return Err(GeometryError::FlatSegmentViolation {
                radius: r,
                reason: format!("x = 0 edges span [{lo}, {hi}], need [-{r}, {r}]"),
            });
        }
        let n = self.polygon.len();
        for i in 0..n {
            let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
            if a[0].abs() < 1e-12 && b[0].abs() < 1e-12 {
                continue; // part of the flat chain
            }
            let d = dist_point_segment([0.0, 0.0], a, b);
            if d < r * (1.0 - 1e-9) {
                return Err(GeometryError::FlatSegmentViolation {
                    radius: r,
                    reason: format!("edge {:?} -> {:?} at distance {d} from origin", a, b),
                });
            }
        }
        Ok(())
    }

    /// The y-span of the maximal chain of boundary edges lying on x = 0.
    fn flat_edge_span(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let n = self.polygon.len();
        for i in 0..n {
            let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
            if a[0].abs() < 1e-12 && b[0].abs() < 1e-12 {
                lo = lo.min(a[1].min(b[1]));
                hi = hi.max(a[1].max(b[1]));
            }
        }
        (lo, hi)
    }

    pub fn check_convex(&self) -> Result<(), GeometryError> {
        let n = self.polygon.len();
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let c = self.polygon[(i + 2) % n];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross < -1e-12 {
                return Err(GeometryError::NotConvex { index: (i + 1) % n });
            }
        }
        Ok(())
    }

    pub fn polygon(&self) -> &[[f64; 2]] {
        &self.polygon
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn flat_radius(&self) -> f64 {
        self.flat_radius
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.polygon)
    }

    /// Axis-aligned rectangle bulk helper. The rectangle's vertical edge on
    /// x = 0 is centered at the origin.
    pub fn rectangle(side: Side, width: f64, height: f64, flat_radius: f64) -> Result<Self, GeometryError> {
        let h = height / 2.0;
        let poly = match side {
            Side::Right => vec![[0.0, -h], [width, -h], [width, h], [0.0, h]],
            Side::Left => vec![[0.0, -h], [0.0, h], [-width, h], [-width, -h]],
        };
        BulkDomain::new(poly, side, flat_radius)
    }
}

// ---------------------------------------------------------------------------
// Dumbbell spec and assembly
// ---------------------------------------------------------------------------

/// Parametric description of the dumbbell: two bulks and a neck profile.
#[derive(Debug, Clone)]
pub struct DumbbellSpec {
    pub left: BulkDomain,
    pub right: BulkDomain,
    pub neck: NeckProfile,
    pub convex_bulks: bool,
    /// max(||f1||, ||f2||) + 1, used by localization probes.
    m_const: f64,
}

impl DumbbellSpec {
    pub fn new(
        left: BulkDomain,
        right: BulkDomain,
        neck: NeckProfile,
        convex_bulks: bool,
    ) -> Result<Self, GeometryError> {
        if left.side() != Side::Left || right.side() != Side::Right {
            return Err(GeometryError::SideMismatch);
        }
        if convex_bulks {
            left.check_convex()?;
            right.check_convex()?;
        }
        let m_const = neck.m_const();
        Ok(DumbbellSpec { left, right, neck, convex_bulks, m_const })
    }

    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    /// True when the left bulk is the mirror image of the right bulk and the
    /// profiles are even; symmetric specs get mirror-symmetric meshes.
    pub fn is_mirror_symmetric(&self) -> bool {
        let r = self.right.polygon();
        let l = self.left.polygon();
        if r.len() != l.len() {
            return false;
        }
        // Mirrored CCW polygon: x -> -x reverses orientation, so compare
        // against the reversed left polygon at some cyclic offset.
        let mirrored: Vec<[f64; 2]> = r.iter().map(|v| [-v[0], v[1]]).collect();
        let mut rev = l.to_vec();
        rev.reverse();
        let n = rev.len();
        let matches_at = |off: usize| {
            (0..n).all(|i| {
                let a = mirrored[i];
                let b = rev[(i + off) % n];
                (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14
            })
        };
        let poly_sym = (0..n).any(matches_at);
        if !poly_sym {
            return false;
        }
        let n_check = 257;
        for f in [&self.neck.f1, &self.neck.f2] {
            for i in 0..=n_check {
                let x = -1.0 + 2.0 * i as f64 / n_check as f64;
                if (f.eval(x) - f.eval(-x)).abs() > 1e-13 {
                    return false;
                }
            }
        }
        true
    }

    pub fn assemble(&self, eps: f64, delta: f64) -> Result<AssembledDumbbell, GeometryError> {
        assemble_dumbbell(self, eps, delta)
    }
}

/// The assembled epsilon-domain: closed boundary polyline, region polygons,
/// and the port interfaces between neck and bulks.
#[derive(Debug, Clone)]
pub struct AssembledDumbbell {
    pub eps: f64,
    pub delta: f64,
    /// Closed simple CCW polyline tracing the whole boundary (first vertex
    /// not repeated).
    pub boundary: Vec<[f64; 2]>,
    /// Left bulk polygon, shifted by (-eps, 0), with port corners inserted.
    pub left_polygon: Vec<[f64; 2]>,
    /// Right bulk polygon, shifted by (+eps, 0), with port corners inserted.
    pub right_polygon: Vec<[f64; 2]>,
    /// Neck region polygon (CCW), sampled at the profile knots.
    pub neck_polygon: Vec<[f64; 2]>,
    /// Port segments at x = -eps and x = +eps, bottom to top.
    pub port_left: [[f64; 2]; 2],
    pub port_right: [[f64; 2]; 2],
    /// Knot samples (x, y_bottom, y_top) of the neck boundary, left to right.
    pub neck_samples: Vec<(f64, f64, f64)>,
    pub m_const: f64,
    mirror_symmetric: bool,
}

impl AssembledDumbbell {
    pub fn region_of(&self, p: [f64; 2]) -> Region {
        if p[0] < -self.eps {
            Region::LeftBulk
        } else if p[0] > self.eps {
            Region::RightBulk
        } else {
            Region::Neck
        }
    }

    pub fn left_area(&self) -> f64 {
        shoelace(&self.left_polygon)
    }

    pub fn right_area(&self) -> f64 {
        shoelace(&self.right_polygon)
    }

    /// Area of the sampled neck polygon.
    pub fn neck_area(&self) -> f64 {
        shoelace(&self.neck_polygon)
    }

    pub fn total_area(&self) -> f64 {
        shoelace(&self.boundary)
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        self.mirror_symmetric
    }
}

/// Walks the polygon CCW along its boundary from `(x0, y_from)` to
/// `(x0, y_to)`, both on the flat vertical chain at `x = x0`, taking the long
/// way around (never crossing the open port segment between them).
fn arc_between(
    poly: &[[f64; 2]],
    x0: f64,
    y_from: f64,
    y_to: f64,
) -> Result<Vec<[f64; 2]>, GeometryError> {
    let n = poly.len();
    let err = || GeometryError::PortOutsideFlatEdge {
        lo: y_from.min(y_to),
        hi: y_from.max(y_to),
        span_lo: f64::NAN,
        span_hi: f64::NAN,
    };
    let on_chain = |p: [f64; 2]| (p[0] - x0).abs() < 1e-12;
    // Walk direction must point away from the port, so the start edge is the
    // chain edge containing y_from with its head strictly beyond y_from.
    let start_edge = (0..n)
        .find(|&i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            on_chain(a)
                && on_chain(b)
                && y_from >= a[1].min(b[1]) - 1e-12
                && y_from <= a[1].max(b[1]) + 1e-12
                && (b[1] - y_from).abs() > 1e-12
        })
        .ok_or_else(err)?;

    let mut path = vec![[x0, y_from]];
    let mut edge = start_edge;
    for step in 0..=n + 1 {
        let cur = *path.last().unwrap();
        let head = poly[(edge + 1) % n];
        if on_chain(cur) && on_chain(head) {
            // The target terminates the walk when it lies ahead on this edge.
            // On the first step the other port corner sits behind the walk
            // direction, so the port segment is never crossed.
            let ahead = if head[1] > cur[1] {
                y_to > cur[1] - 1e-12 && y_to <= head[1] + 1e-12
            } else {
                y_to < cur[1] + 1e-12 && y_to >= head[1] - 1e-12
            };
            if ahead && (step > 0 || (y_to - y_from) * (head[1] - cur[1]) > 0.0) {
                path.push([x0, y_to]);
                return Ok(dedupe(path));
            }
        }
        path.push(head);
        edge = (edge + 1) % n;
    }
    Err(err())
}

fn dedupe(path: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(path.len());
    for p in path {
        if let Some(last) = out.last() {
            if (last[0] - p[0]).abs() < 1e-15 && (last[1] - p[1]).abs() < 1e-15 {
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// Builds the boundary polyline and region map of the epsilon-domain.
pub fn assemble_dumbbell(
    spec: &DumbbellSpec,
    eps: f64,
    delta: f64,
) -> Result<AssembledDumbbell, GeometryError> {
    if eps <= 0.0 || delta <= 0.0 {
        return Err(GeometryError::NonPositiveScales { eps, delta });
    }
    let m = spec.m_const();
    let r0 = spec.left.flat_radius().min(spec.right.flat_radius());
    if delta * m >= r0 {
        return Err(GeometryError::DeltaTooLarge { delta, m, r0 });
    }

    let f1 = &spec.neck.f1;
    let f2 = &spec.neck.f2;
    let n_knots = f1.n_knots().max(f2.n_knots());

    // Knot sampling of the neck boundary; x symmetric around 0 so that even
    // profiles produce mirror-symmetric geometry bit-for-bit.
    let mut neck_samples: Vec<(f64, f64, f64)> = Vec::with_capacity(n_knots);
    for i in 0..n_knots {
        let xi = -1.0 + 2.0 * i as f64 / (n_knots - 1) as f64;
        let xi = if xi.abs() < 1e-15 { 0.0 } else { xi };
        let x = eps * xi;
        let top = delta * f1.eval(xi);
        let bot = -delta * f2.eval(xi);
        neck_samples.push((x, bot, top));
    }

    let (y_bot_l, y_top_l) = (neck_samples[0].1, neck_samples[0].2);
    let last = *neck_samples.last().unwrap();
    let (y_bot_r, y_top_r) = (last.1, last.2);

    // Shifted bulk polygons.
    let shift = |poly: &[[f64; 2]], dx: f64| -> Vec<[f64; 2]> {
        poly.iter().map(|v| [v[0] + dx, v[1]]).collect()
    };
    let left_shifted = shift(spec.left.polygon(), -eps);
    let right_shifted = shift(spec.right.polygon(), eps);

    // Port corners must lie strictly inside the flat edges.
    for (bulk, lo, hi) in [(&spec.left, y_bot_l, y_top_l), (&spec.right, y_bot_r, y_top_r)] {
        let (span_lo, span_hi) = bulk.flat_edge_span();
        if lo <= span_lo + 1e-14 || hi >= span_hi - 1e-14 {
            return Err(GeometryError::PortOutsideFlatEdge { lo, hi, span_lo, span_hi });
        }
    }

    // CCW walk of the combined boundary:
    //   right bulk from bottom port corner around to top port corner,
    //   neck top right-to-left, left bulk from top corner around to bottom,
    //   neck bottom left-to-right.
    let right_arc = arc_between(&right_shifted, eps, y_bot_r, y_top_r)?;
    let left_arc = arc_between(&left_shifted, -eps, y_top_l, y_bot_l)?;

    let mut boundary: Vec<[f64; 2]> = Vec::new();
    boundary.extend(right_arc.iter().copied());
    // Neck top, right to left; skip the shared port corners.
    for s in neck_samples.iter().rev().skip(1) {
        boundary.push([s.0, s.2]);
    }
    boundary.extend(left_arc.iter().skip(1).copied());
    for s in neck_samples.iter().skip(1) {
        boundary.push([s.0, s.1]);
    }
    boundary.pop(); // last point equals the first (bottom-right port corner)
    let boundary = dedupe(boundary);
    check_simple(&boundary)?;

    // Region polygons. The arcs run between the port corners; the implicit
    // closing edge of each cycle is exactly the port segment.
    let left_polygon = dedupe_cycle(left_arc.clone());
    let right_polygon = dedupe_cycle(right_arc.clone());
    let neck_polygon = {
        let mut p: Vec<[f64; 2]> = Vec::new();
        for s in neck_samples.iter() {
            p.push([s.0, s.1]);
        }
        for s in neck_samples.iter().rev() {
            p.push([s.0, s.2]);
        }
        dedupe_cycle(p)
    };

    Ok(AssembledDumbbell {
        eps,
        delta,
        boundary,
        left_polygon,
        right_polygon,
        neck_polygon,
        port_left: [[-eps, y_bot_l], [-eps, y_top_l]],
        port_right: [[eps, y_bot_r], [eps, y_top_r]],
        neck_samples,
        m_const: m,
        mirror_symmetric: spec.is_mirror_symmetric(),
    })
}

fn dedupe_cycle(path: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut p = dedupe(path);
    if p.len() > 1 {
        let first = p[0];
        let last = *p.last().unwrap();
        if (first[0] - last[0]).abs() < 1e-15 && (first[1] - last[1]).abs() < 1e-15 {
            p.pop();
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Scaling families and regimes
// ---------------------------------------------------------------------------

/// Parametric neck-height laws delta(eps). Restricted to two forms whose
/// regime limits are certifiable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScalingFamily {
    /// delta = c * eps^p, p > 0.
    Power { c: f64, p: f64 },
    /// delta = c * eps * |ln eps|^(-q).
    LogPower { c: f64, q: f64 },
}

impl ScalingFamily {
    pub fn power(c: f64, p: f64) -> Result<Self, GeometryError> {
        if c <= 0.0 {
            return Err(GeometryError::BadScalingCoefficient(c));
        }
        if p <= 0.0 {
            return Err(GeometryError::BadScalingExponent(p));
        }
        Ok(ScalingFamily::Power { c, p })
    }

    pub fn log_power(c: f64, q: f64) -> Result<Self, GeometryError> {
        if c <= 0.0 {
            return Err(GeometryError::BadScalingCoefficient(c));
        }
        Ok(ScalingFamily::LogPower { c, q })
    }

    pub fn delta(&self, eps: f64) -> f64 {
        match *self {
            ScalingFamily::Power { c, p } => c * eps.powf(p),
            ScalingFamily::LogPower { c, q } => c * eps * eps.ln().abs().powf(-q),
        }
    }
}

/// Asymptotic class of delta(eps), determined by the limits of delta/eps and
/// delta |ln delta| / eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Regime {
    Thick,
    Normal(f64),
    CriticalThin(f64),
    SubcriticalThin,
    SupercriticalThin,
}

impl Regime {
    pub fn limit(&self) -> Option<f64> {
        match *self {
            Regime::Normal(l) | Regime::CriticalThin(l) => Some(l),
            _ => None,
        }
    }
}

/// Determines the regime of a scaling family.
///
/// Power p: delta/eps = c eps^(p-1), so p < 1 is thick, p = 1 normal with
/// limit c, p > 1 subcritical thin (delta |ln delta| / eps ~ eps^(p-1) ln).
/// LogPower q: delta/eps = c |ln eps|^(-q) and delta |ln delta| / eps
/// ~ c |ln eps|^(1-q), splitting at q = 0 and q = 1.
pub fn classify_regime(family: ScalingFamily) -> Regime {
    match family {
        ScalingFamily::Power { c, p } => {
            if p < 1.0 {
                Regime::Thick
            } else if p == 1.0 {
                Regime::Normal(c)
            } else {
                Regime::SubcriticalThin
            }
        }
        ScalingFamily::LogPower { c, q } => {
            if q < 0.0 {
                Regime::Thick
            } else if q == 0.0 {
                Regime::Normal(c)
            } else if q < 1.0 {
                Regime::SupercriticalThin
            } else if q == 1.0 {
                Regime::CriticalThin(c)
            } else {
                Regime::SubcriticalThin
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bulks() -> (BulkDomain, BulkDomain) {
        let left = BulkDomain::rectangle(Side::Left, 1.0, 1.0, 0.2).unwrap();
        let right = BulkDomain::rectangle(Side::Right, 1.0, 1.0, 0.2).unwrap();
        (left, right)
    }

    #[test]
    fn constant_profile_neck_is_rectangle() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        let asm = spec.assemble(0.1, 0.05).unwrap();
        for (_, bot, top) in &asm.neck_samples {
            assert!((top - 0.025).abs() < 1e-15);
            assert!((bot + 0.025).abs() < 1e-15);
        }
        assert!((asm.neck_samples[0].0 + 0.1).abs() < 1e-15);
        assert!((asm.neck_samples.last().unwrap().0 - 0.1).abs() < 1e-15);
        // |N| = eps*delta*integral(f1+f2) = 0.1*0.05*2 = 0.01... times? The
        // rectangle is [-0.1,0.1]x[-0.025,0.025], area 0.2*0.05 = 0.01.
        assert!((asm.neck_area() - 0.01).abs() < 1e-14);
    }

    #[test]
    fn unit_square_bulk_translation() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        let asm = spec.assemble(0.05, 0.02).unwrap();
        // Left bulk occupies [-1.05, -0.05] x [-0.5, 0.5].
        let xs: Vec<f64> = asm.left_polygon.iter().map(|v| v[0]).collect();
        let min_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((min_x + 1.05).abs() < 1e-15);
        assert!((max_x + 0.05).abs() < 1e-15);
        assert!((asm.left_area() - 1.0).abs() < 1e-12);
        assert!((asm.right_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_profile_heights() {
        // f1(x) = (1+x^2)/2, f2 = 1/2, eps = 0.1, delta = 0.01:
        // top boundary through (0, 0.005) and (+-0.1, 0.01).
        let (l, r) = unit_bulks();
        let f1 = ProfileFn::from_fn(|x| 0.5 * (1.0 + x * x), 65).unwrap();
        let f2 = ProfileFn::constant(0.5);
        let neck = NeckProfile::new(f1, f2, None).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        let asm = spec.assemble(0.1, 0.01).unwrap();
        let mid = &asm.neck_samples[32];
        assert!((mid.0).abs() < 1e-15);
        assert!((mid.2 - 0.005).abs() < 1e-15);
        assert!((asm.neck_samples[0].2 - 0.01).abs() < 1e-14);
        assert!((asm.neck_samples[64].2 - 0.01).abs() < 1e-14);
    }

    #[test]
    fn boundary_is_closed_simple_positive() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        for (eps, delta) in [(0.1, 0.05), (0.05, 0.05 * 0.05), (0.2, 0.01)] {
            let asm = spec.assemble(eps, delta).unwrap();
            assert!(shoelace(&asm.boundary) > 0.0);
            check_simple(&asm.boundary).unwrap();
            // Area additivity.
            let total = asm.total_area();
            let sum = asm.left_area() + asm.right_area() + asm.neck_area();
            assert!((total - sum).abs() < 1e-12, "area mismatch: {total} vs {sum}");
        }
    }

    #[test]
    fn neck_area_matches_profile_integral() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        let asm = spec.assemble(0.1, 0.05).unwrap();
        let analytic = 0.1 * 0.05 * spec.neck.sum_integral();
        assert!((asm.neck_area() - analytic).abs() < 1e-10);
    }

    #[test]
    fn delta_too_large_rejected() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        // M = 1.5, r0 = 0.2: delta must be below 0.1333.
        match spec.assemble(0.1, 0.15) {
            Err(GeometryError::DeltaTooLarge { .. }) => {}
            other => panic!("expected DeltaTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn regime_classification() {
        use Regime::*;
        let cases = [
            (ScalingFamily::power(0.5, 1.0).unwrap(), Normal(0.5)),
            (ScalingFamily::power(1.0, 0.5).unwrap(), Thick),
            (ScalingFamily::log_power(2.0, 1.0).unwrap(), CriticalThin(2.0)),
            (ScalingFamily::power(1.0, 2.0).unwrap(), SubcriticalThin),
            (ScalingFamily::log_power(1.0, 0.5).unwrap(), SupercriticalThin),
        ];
        for (family, expect) in cases {
            assert_eq!(classify_regime(family), expect);
        }
        // Rescaling invariance for the subcritical power family.
        assert_eq!(
            classify_regime(ScalingFamily::power(2.0, 2.0).unwrap()),
            SubcriticalThin
        );
    }

    #[test]
    fn mirror_symmetry_detection() {
        let (l, r) = unit_bulks();
        let neck = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec = DumbbellSpec::new(l, r, neck, true).unwrap();
        assert!(spec.is_mirror_symmetric());

        let l2 = BulkDomain::rectangle(Side::Left, 1.3, 1.0, 0.2).unwrap();
        let r2 = BulkDomain::rectangle(Side::Right, 1.0, 1.0, 0.2).unwrap();
        let neck2 = NeckProfile::constant(0.5, 0.5).unwrap();
        let spec2 = DumbbellSpec::new(l2, r2, neck2, true).unwrap();
        assert!(!spec2.is_mirror_symmetric());
    }

    #[test]
    fn profile_interpolation_exact_for_quadratics() {
        let f = ProfileFn::from_fn(|x| 0.5 * (1.0 + x * x), 65).unwrap();
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            assert!((f.eval(x) - 0.5 * (1.0 + x * x)).abs() < 1e-13);
            assert!((f.deriv(x) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_profile_rejected() {
        let f1 = ProfileFn::from_fn(|x| x * x - 0.1, 65).unwrap();
        match NeckProfile::new(f1, ProfileFn::constant(0.5), None) {
            Err(GeometryError::NonPositiveProfile { .. }) => {}
            other => panic!("expected NonPositiveProfile, got {other:?}"),
        }
    }
}
