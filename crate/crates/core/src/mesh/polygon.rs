//! Graded unstructured triangulation of a simple polygon: boundary
//! subdivision to the sizing field, a quadtree interior lattice, constrained
//! Delaunay triangulation, Lloyd smoothing, and size/angle repair passes.

use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::locate::SegmentGrid;
use super::sizing::SizeField;
use super::{BoundaryMarker, MeshError};

#[derive(Debug, Clone)]
pub struct InputSegment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Protected segments are never subdivided (shared interfaces).
    pub protected: bool,
    pub marker: BoundaryMarker,
}

/// Raw mesher output, before region tagging and stitching.
pub struct RawMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    /// Boundary edges as node index pairs, with markers.
    pub boundary: Vec<(u32, u32, BoundaryMarker)>,
}

struct LatticePoint {
    pos: [f64; 2],
}

#[derive(Clone, Copy)]
struct VertexData {
    idx: u32,
}

impl HasPosition for PointWithIndex {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        Point2::new(self.pos[0], self.pos[1])
    }
}

#[derive(Clone, Copy)]
struct PointWithIndex {
    pos: [f64; 2],
    data: VertexData,
}

type Cdt = ConstrainedDelaunayTriangulation<PointWithIndex>;

pub struct PolygonMesher<'a> {
    size: &'a SizeField,
    min_angle_deg: f64,
    node_budget: usize,
    /// Boundary vertices (fixed) followed by interior points.
    boundary_pts: Vec<[f64; 2]>,
    /// Constraint edges as (i, j, marker, protected) into boundary_pts.
    edges: Vec<(u32, u32, BoundaryMarker, bool)>,
    interior: Vec<LatticePoint>,
    grid: SegmentGrid,
}

impl<'a> PolygonMesher<'a> {
    pub fn new(
        segments: &[InputSegment],
        size: &'a SizeField,
        min_angle_deg: f64,
        node_budget: usize,
    ) -> Result<PolygonMesher<'a>, MeshError> {
        // Subdivide unprotected segments recursively to the sizing field.
        let mut pieces: Vec<([f64; 2], [f64; 2], BoundaryMarker, bool)> = Vec::new();
        for seg in segments {
            if seg.protected {
                pieces.push((seg.a, seg.b, seg.marker, true));
            } else {
                subdivide(seg.a, seg.b, seg.marker, size, &mut pieces, 0);
            }
        }

        // Dedupe endpoints into a vertex list (exact bit equality).
        let mut boundary_pts: Vec<[f64; 2]> = Vec::new();
        let mut index: std::collections::HashMap<(u64, u64), u32> = std::collections::HashMap::new();
        let mut edges = Vec::with_capacity(pieces.len());
        for (a, b, marker, protected) in &pieces {
            let ia = intern(&mut boundary_pts, &mut index, *a);
            let ib = intern(&mut boundary_pts, &mut index, *b);
            if ia != ib {
                edges.push((ia, ib, *marker, *protected));
            }
        }

        let grid = SegmentGrid::new(pieces.iter().map(|p| (p.0, p.1)).collect());
        Ok(PolygonMesher {
            size,
            min_angle_deg,
            node_budget,
            boundary_pts,
            edges,
            interior: Vec::new(),
            grid,
        })
    }

    pub fn run(mut self) -> Result<RawMesh, MeshError> {
        let bbox = self.bbox();
        let estimate = self.size.estimate_nodes(|p| self.grid.contains(p), bbox)
            + self.boundary_pts.len();
        if estimate > self.node_budget {
            return Err(MeshError::Budget { estimate, budget: self.node_budget });
        }

        self.seed_lattice(bbox);
        let mut cdt = self.build_cdt()?;

        // Lloyd smoothing: average one-ring positions for interior points,
        // clamped away from the boundary.
        for _ in 0..3 {
            let moved = self.lloyd_positions(&cdt);
            self.interior = moved;
            cdt = self.build_cdt()?;
        }

        // Size and angle repair.
        let mut rounds = 0;
        loop {
            let bad = self.collect_steiner(&cdt);
            if bad.is_empty() || rounds >= 15 {
                break;
            }
            let total = self.boundary_pts.len() + self.interior.len() + bad.len();
            if total > self.node_budget {
                return Err(MeshError::Budget { estimate: total, budget: self.node_budget });
            }
            for p in bad {
                self.interior.push(LatticePoint { pos: p });
            }
            cdt = self.build_cdt()?;
            if rounds % 3 == 2 {
                let moved = self.lloyd_positions(&cdt);
                self.interior = moved;
                cdt = self.build_cdt()?;
            }
            rounds += 1;
        }

        let mesh = self.extract(&cdt);
        let worst = worst_angle_deg(&mesh);
        if worst < self.min_angle_deg {
            return Err(MeshError::Quality { min_angle: worst, target: self.min_angle_deg });
        }
        Ok(mesh)
    }

    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.boundary_pts {
            lo[0] = lo[0].min(p[0]);
            lo[1] = lo[1].min(p[1]);
            hi[0] = hi[0].max(p[0]);
            hi[1] = hi[1].max(p[1]);
        }
        (lo, hi)
    }

    /// Quadtree lattice: cells split until their size is at or below the
    /// local target; kept leaf centers become interior points.
    fn seed_lattice(&mut self, bbox: ([f64; 2], [f64; 2])) {
        let (lo, hi) = bbox;
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let mut stack = vec![(lo, extent, 0u32)];
        while let Some((corner, s, depth)) = stack.pop() {
            let center = [corner[0] + 0.5 * s, corner[1] + 0.5 * s];
            let target = self.size.eval(center);
            if s > 1.15 * target && depth < 40 {
                let h = 0.5 * s;
                // Skip cells entirely outside the domain and far from it.
                let r_cell = 0.75 * s;
                if !self.grid.contains(center) && self.grid.distance(center) > r_cell {
                    continue;
                }
                stack.push(([corner[0], corner[1]], h, depth + 1));
                stack.push(([corner[0] + h, corner[1]], h, depth + 1));
                stack.push(([corner[0], corner[1] + h], h, depth + 1));
                stack.push(([corner[0] + h, corner[1] + h], h, depth + 1));
            } else {
                if self.grid.contains(center) && self.grid.distance(center) >= 0.6 * target {
                    self.interior.push(LatticePoint { pos: center });
                }
            }
        }
        // Deterministic order independent of stack traversal.
        self.interior.sort_by(|a, b| {
            (a.pos[0], a.pos[1]).partial_cmp(&(b.pos[0], b.pos[1])).unwrap()
        });
    }

    fn build_cdt(&self) -> Result<Cdt, MeshError> {
        let mut vertices = Vec::with_capacity(self.boundary_pts.len() + self.interior.len());
        for (i, p) in self.boundary_pts.iter().enumerate() {
            vertices.push(PointWithIndex { pos: *p, data: VertexData { idx: i as u32 } });
        }
        for (k, p) in self.interior.iter().enumerate() {
            vertices.push(PointWithIndex {
                pos: p.pos,
                data: VertexData { idx: (self.boundary_pts.len() + k) as u32 },
            });
        }
        let edges: Vec<[usize; 2]> =
            self.edges.iter().map(|e| [e.0 as usize, e.1 as usize]).collect();
        Cdt::bulk_load_cdt(vertices, edges)
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))
    }

    /// Faces outside the domain: flood fill from the outer face across
    /// non-constraint edges, over a precomputed adjacency table.
    fn outside_faces(&self, cdt: &Cdt) -> Vec<bool> {
        const OUTER: usize = usize::MAX;
        let n = cdt.num_all_faces();
        let mut adj: Vec<[(usize, bool); 3]> = vec![[(OUTER, false); 3]; n];
        let mut outside = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for face in cdt.inner_faces() {
            let i = face.index();
            for (k, edge) in face.adjacent_edges().iter().enumerate() {
                let nb = edge.rev().face();
                let j = if nb.is_outer() { OUTER } else { nb.index() };
                let constrained = edge.is_constraint_edge();
                adj[i][k] = (j, constrained);
                if j == OUTER && !constrained && !outside[i] {
                    outside[i] = true;
                    stack.push(i);
                }
            }
        }
        while let Some(i) = stack.pop() {
            for &(j, constrained) in &adj[i] {
                if j != OUTER && !constrained && !outside[j] {
                    outside[j] = true;
                    stack.push(j);
                }
            }
        }
        outside
    }

    fn lloyd_positions(&self, cdt: &Cdt) -> Vec<LatticePoint> {
        let n_boundary = self.boundary_pts.len();
        let mut new_pts: Vec<LatticePoint> = Vec::with_capacity(self.interior.len());
        let mut by_index: Vec<[f64; 2]> = vec![[0.0, 0.0]; self.interior.len()];
        for p in self.interior.iter().enumerate() {
            by_index[p.0] = p.1.pos;
        }
        for v in cdt.vertices() {
            let idx = v.data().data.idx as usize;
            if idx < n_boundary {
                continue;
            }
            let old = v.data().pos;
            let mut acc = [0.0, 0.0];
            let mut w_acc = 0.0;
            for e in v.out_edges() {
                let q = e.to().data().pos;
                let w = 1.0 / self.size.eval(q);
                acc[0] += w * q[0];
                acc[1] += w * q[1];
                w_acc += w;
            }
            let candidate = if w_acc > 0.0 { [acc[0] / w_acc, acc[1] / w_acc] } else { old };
            let target = self.size.eval(candidate);
            let ok = self.grid.contains(candidate)
                && self.grid.distance(candidate) >= 0.5 * target;
            by_index[idx - n_boundary] = if ok { candidate } else { old };
        }
        for p in by_index {
            new_pts.push(LatticePoint { pos: p });
        }
        new_pts
    }

    /// Steiner points for faces violating size or angle targets.
    fn collect_steiner(&self, cdt: &Cdt) -> Vec<[f64; 2]> {
        let outside = self.outside_faces(cdt);
        let mut out: Vec<[f64; 2]> = Vec::new();
        for face in cdt.inner_faces() {
            if outside[face.index()] {
                continue;
            }
            let pos = face.positions();
            let (a, b, c) = (
                [pos[0].x, pos[0].y],
                [pos[1].x, pos[1].y],
                [pos[2].x, pos[2].y],
            );
            let bary = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            let target = self.size.eval(bary);
            let (cc, r_c) = circumcircle(a, b, c);
            let angle = min_angle_deg(a, b, c);
            let size_bad = r_c > 1.05 * target;
            let angle_bad = angle < self.min_angle_deg + 2.0;
            if !(size_bad || angle_bad) {
                continue;
            }
            let cc_ok = self.grid.contains(cc) && self.grid.distance(cc) >= 0.45 * self.size.eval(cc);
            if cc_ok {
                out.push(cc);
                continue;
            }
            let bary_ok =
                self.grid.contains(bary) && self.grid.distance(bary) >= 0.3 * target;
            if bary_ok && (size_bad || angle < self.min_angle_deg) {
                out.push(bary);
            }
        }
        // Thin out clustered candidates: keep points no closer than half the
        // local size to previously accepted ones (linear scan is fine at the
        // per-round counts involved).
        let mut accepted: Vec<[f64; 2]> = Vec::new();
        'outer: for p in out {
            let h = self.size.eval(p);
            for q in &accepted {
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d2 < (0.5 * h) * (0.5 * h) {
                    continue 'outer;
                }
            }
            accepted.push(p);
        }
        accepted
    }

    fn extract(&self, cdt: &Cdt) -> RawMesh {
        let outside = self.outside_faces(cdt);
        let n_vertices = cdt.num_vertices();
        let mut nodes = vec![[0.0, 0.0]; n_vertices];
        for v in cdt.vertices() {
            nodes[v.data().data.idx as usize] = v.data().pos;
        }
        let mut triangles = Vec::new();
        for face in cdt.inner_faces() {
            if outside[face.index()] {
                continue;
            }
            let vs = face.vertices();
            let mut tri = [
                vs[0].data().data.idx,
                vs[1].data().data.idx,
                vs[2].data().data.idx,
            ];
            let (a, b, c) = (
                nodes[tri[0] as usize],
                nodes[tri[1] as usize],
                nodes[tri[2] as usize],
            );
            if signed_area(a, b, c) < 0.0 {
                tri.swap(1, 2);
            }
            triangles.push(tri);
        }
        let boundary = self
            .edges
            .iter()
            .map(|&(i, j, marker, _)| (i, j, marker))
            .collect();
        RawMesh { nodes, triangles, boundary }
    }
}

fn subdivide(
    a: [f64; 2],
    b: [f64; 2],
    marker: BoundaryMarker,
    size: &SizeField,
    out: &mut Vec<([f64; 2], [f64; 2], BoundaryMarker, bool)>,
    depth: u32,
) {
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if len > 0.95 * size.eval(mid) && depth < 40 {
        subdivide(a, mid, marker, size, out, depth + 1);
        subdivide(mid, b, marker, size, out, depth + 1);
    } else {
        out.push((a, b, marker, false));
    }
}

fn intern(
    pts: &mut Vec<[f64; 2]>,
    index: &mut std::collections::HashMap<(u64, u64), u32>,
    p: [f64; 2],
) -> u32 {
    let key = (p[0].to_bits(), p[1].to_bits());
    *index.entry(key).or_insert_with(|| {
        pts.push(p);
        (pts.len() - 1) as u32
    })
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> ([f64; 2], f64) {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d == 0.0 {
        return ([f64::INFINITY, f64::INFINITY], f64::INFINITY);
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let r = ((a[0] - ux).powi(2) + (a[1] - uy).powi(2)).sqrt();
    ([ux, uy], r)
}

pub fn min_angle_deg(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let la = dist(b, c);
    let lb = dist(a, c);
    let lc = dist(a, b);
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cosv = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        cosv.acos()
    };
    let a1 = angle(la, lb, lc);
    let a2 = angle(lb, la, lc);
    let a3 = std::f64::consts::PI - a1 - a2;
    a1.min(a2).min(a3).to_degrees()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn worst_angle_deg(mesh: &RawMesh) -> f64 {
    let mut worst = f64::INFINITY;
    for t in &mesh.triangles {
        let a = mesh.nodes[t[0] as usize];
        let b = mesh.nodes[t[1] as usize];
        let c = mesh.nodes[t[2] as usize];
        worst = worst.min(min_angle_deg(a, b, c));
    }
    worst
}
