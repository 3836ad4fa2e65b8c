//! Triangulation of dumbbell domains and generic polygons, with grading
//! fine enough to resolve the neck and the logarithmic layers near the
//! neck mouths.

pub mod locate;
pub mod polygon;
pub mod sizing;
pub mod structured;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{AssembledDumbbell, Region};
use locate::TriangleLocator;
use polygon::{min_angle_deg, InputSegment, PolygonMesher};
use sizing::{SizeField, SizeSource};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("sizing field needs an estimated {estimate} nodes, over the budget of {budget}")]
    Budget { estimate: usize, budget: usize },
    #[error("refinement stalled at minimum angle {min_angle:.2} deg (target {target} deg)")]
    Quality { min_angle: f64, target: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("mesh parameters invalid: {0}")]
    BadParams(String),
    #[error("mesh is not conforming: {0}")]
    NotConforming(String),
    #[error("mesh file malformed: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary condition marker carried by boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryMarker {
    /// Physical boundary (homogeneous Neumann).
    Physical,
    /// Far-field truncation arc on the right/left.
    ArcRight,
    ArcLeft,
    /// Truncation face of a semi-infinite strip.
    StripFace,
}

#[derive(Debug, Clone)]
pub struct MeshParams {
    /// Minimum cell layers across the neck height.
    pub n_across: usize,
    /// Radial grading ratio near the neck mouths, in (1, 2].
    pub layer_ratio: f64,
    /// Target size away from the neck.
    pub h_bulk: f64,
    /// Outer radius of the graded layer; defaults to sqrt(delta).
    pub r_layer: Option<f64>,
    pub node_budget: usize,
    pub min_angle_deg: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            n_across: 8,
            layer_ratio: 1.5,
            h_bulk: 0.05,
            r_layer: None,
            node_budget: 400_000,
            min_angle_deg: 20.0,
        }
    }
}

impl MeshParams {
    fn validate(&self) -> Result<(), MeshError> {
        if self.n_across < 4 {
            return Err(MeshError::BadParams(format!("n_across must be >= 4, got {}", self.n_across)));
        }
        if !(self.layer_ratio > 1.0 && self.layer_ratio <= 2.0) {
            return Err(MeshError::BadParams(format!(
                "layer_ratio must lie in (1, 2], got {}",
                self.layer_ratio
            )));
        }
        if self.h_bulk <= 0.0 {
            return Err(MeshError::BadParams(format!("h_bulk must be positive, got {}", self.h_bulk)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub a: u32,
    pub b: u32,
    pub outward_normal: [f64; 2],
    pub marker: BoundaryMarker,
}

static MESH_ID: AtomicU64 = AtomicU64::new(1);

/// P1 triangulation with region tags, boundary edges, and a point locator.
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[u32; 3]>,
    region: Vec<Region>,
    boundary: Vec<BoundaryEdge>,
    pub h_neck: f64,
    pub h_layer: f64,
    pub h_bulk: f64,
    id: u64,
    locator: TriangleLocator,
}

impl TriMesh {
    /// Builds a mesh from parts, recomputing boundary edges and validating
    /// orientation and conformity. Markers are assigned from the closure on
    /// edge endpoint positions.
    pub fn from_parts(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[u32; 3]>,
        region: Vec<Region>,
        marker_fn: impl Fn([f64; 2], [f64; 2]) -> BoundaryMarker,
    ) -> Result<TriMesh, MeshError> {
        if region.len() != triangles.len() {
            return Err(MeshError::NotConforming("region tags do not match triangle count".into()));
        }
        let mut referenced = vec![false; nodes.len()];
        for t in &triangles {
            let (a, b, c) = (
                nodes[t[0] as usize],
                nodes[t[1] as usize],
                nodes[t[2] as usize],
            );
            if polygon::signed_area(a, b, c) <= 0.0 {
                return Err(MeshError::NotConforming(format!(
                    "triangle {t:?} is degenerate or negatively oriented"
                )));
            }
            for &v in t {
                referenced[v as usize] = true;
            }
        }
        if referenced.iter().any(|r| !r) {
            return Err(MeshError::NotConforming("mesh has unreferenced nodes".into()));
        }

        // Edge incidence: boundary edges appear in exactly one triangle.
        let mut incidence: HashMap<(u32, u32), (u32, i32)> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                let entry = incidence.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 = if i < j { 1 } else { -1 };
            }
        }
        let mut boundary = Vec::new();
        for t in &triangles {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                let (count, _) = incidence[&key];
                if count > 2 {
                    return Err(MeshError::NotConforming(format!(
                        "edge ({i}, {j}) belongs to {count} triangles"
                    )));
                }
                if count == 1 {
                    let pa = nodes[i as usize];
                    let pb = nodes[j as usize];
                    let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                    let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
                    boundary.push(BoundaryEdge {
                        a: i,
                        b: j,
                        outward_normal: normal,
                        marker: marker_fn(pa, pb),
                    });
                }
            }
        }

        // Boundary must form closed loops: every boundary node has even
        // boundary degree (2 for manifold meshes).
        let mut degree: HashMap<u32, u32> = HashMap::new();
        for e in &boundary {
            *degree.entry(e.a).or_insert(0) += 1;
            *degree.entry(e.b).or_insert(0) += 1;
        }
        if degree.values().any(|&d| d != 2) {
            return Err(MeshError::NotConforming("boundary edges do not form closed loops".into()));
        }

        let locator = TriangleLocator::new(&nodes, &triangles);
        Ok(TriMesh {
            nodes,
            triangles,
            region,
            boundary,
            h_neck: 0.0,
            h_layer: 0.0,
            h_bulk: 0.0,
            id: MESH_ID.fetch_add(1, Ordering::Relaxed),
            locator,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn region(&self) -> &[Region] {
        &self.region
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        polygon::signed_area(
            self.nodes[tri[0] as usize],
            self.nodes[tri[1] as usize],
            self.nodes[tri[2] as usize],
        )
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.region[t] == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn barycenter(&self, t: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let (a, b, c) = (
            self.nodes[tri[0] as usize],
            self.nodes[tri[1] as usize],
            self.nodes[tri[2] as usize],
        );
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Triangle index and barycentric coordinates of the containing triangle.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(&self.nodes, &self.triangles, p)
    }

    pub fn locator(&self) -> &TriangleLocator {
        &self.locator
    }

    /// Node index map under x-mirroring, when the node set is symmetric.
    pub fn mirror_map(&self) -> Option<Vec<u32>> {
        let mut index: HashMap<(u64, u64), u32> = HashMap::with_capacity(self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            index.insert((p[0].to_bits(), p[1].to_bits()), i as u32);
        }
        let mut map = vec![0u32; self.nodes.len()];
        for (i, p) in self.nodes.iter().enumerate() {
            // Guard against -0.0: x = 0 nodes are their own mirrors.
            let mx = if p[0] == 0.0 { 0.0 } else { -p[0] };
            let key = (mx.to_bits(), p[1].to_bits());
            match index.get(&key) {
                Some(&j) => map[i] = j,
                None => return None,
            }
        }
        Some(map)
    }
}

/// Quality statistics per region.
#[derive(Debug, Clone, Serialize)]
pub struct RegionQuality {
    pub region: Region,
    pub triangles: usize,
    pub area: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub nodes: usize,
    pub triangles: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub regions: Vec<RegionQuality>,
}

/// Min/max angle, per-region size histogram, and counts.
pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_angle: f64 = 0.0;
    let mut per_region: HashMap<Region, RegionQuality> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (a, b, c) = (
            mesh.nodes[tri[0] as usize],
            mesh.nodes[tri[1] as usize],
            mesh.nodes[tri[2] as usize],
        );
        let small = min_angle_deg(a, b, c);
        min_angle = min_angle.min(small);
        // Largest angle = 180 - sum of two smallest; recompute directly.
        let angles = triangle_angles_deg(a, b, c);
        max_angle = max_angle.max(angles[0].max(angles[1]).max(angles[2]));
        let edges = [dist(a, b), dist(b, c), dist(c, a)];
        let entry = per_region.entry(mesh.region[t]).or_insert(RegionQuality {
            region: mesh.region[t],
            triangles: 0,
            area: 0.0,
            min_edge: f64::INFINITY,
            max_edge: 0.0,
        });
        entry.triangles += 1;
        entry.area += mesh.triangle_area(t);
        for e in edges {
            entry.min_edge = entry.min_edge.min(e);
            entry.max_edge = entry.max_edge.max(e);
        }
    }
    let mut regions: Vec<RegionQuality> = per_region.into_values().collect();
    regions.sort_by_key(|r| match r.region {
        Region::LeftBulk => 0,
        Region::Neck => 1,
        Region::RightBulk => 2,
    });
    QualityReport {
        nodes: mesh.nodes.len(),
        triangles: mesh.triangles.len(),
        min_angle_deg: min_angle,
        max_angle_deg: max_angle,
        regions,
    }
}

fn triangle_angles_deg(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 3] {
    let la = dist(b, c);
    let lb = dist(a, c);
    let lc = dist(a, b);
    let ang = |opp: f64, s1: f64, s2: f64| {
        (((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0)).acos().to_degrees()
    };
    [ang(la, lb, lc), ang(lb, la, lc), ang(lc, la, lb)]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Triangulates the assembled dumbbell: a structured neck grid plus graded
/// unstructured bulks, stitched conformingly at the ports. Mirror-symmetric
/// inputs produce exactly mirror-symmetric meshes.
pub fn triangulate(asm: &AssembledDumbbell, params: &MeshParams) -> Result<TriMesh, MeshError> {
    params.validate()?;
    let neck = structured::neck_grid(asm, params.n_across);
    let stride = neck.n_layers + 1;

    let h_neck = asm.delta / params.n_across as f64;
    let port_height_r = asm.port_right[1][1] - asm.port_right[0][1];
    let h_port = port_height_r / neck.n_layers as f64;
    let r_layer = params
        .r_layer
        .unwrap_or_else(|| asm.delta.sqrt())
        .max(4.0 * asm.m_const * asm.delta);
    let r_flat = (2.5 * asm.m_const * asm.delta).min(0.5 * r_layer);
    let growth = {
        let by_radius = (params.h_bulk - h_port) / (r_layer - r_flat).max(1e-12);
        (params.layer_ratio - 1.0).min(by_radius.max(0.05))
    };

    // Right bulk: arc polyline + protected port pieces (top to bottom).
    let right_port_coords: Vec<[f64; 2]> =
        neck.right_port.iter().map(|&i| neck.nodes[i as usize]).collect();
    let right_segments = bulk_segments(&asm.right_polygon, &right_port_coords);
    let size_r = SizeField {
        h_max: params.h_bulk,
        growth,
        sources: vec![SizeSource::Point {
            center: [asm.eps, 0.0],
            h0: h_port,
            r_flat,
        }],
    };
    let right_raw =
        PolygonMesher::new(&right_segments, &size_r, params.min_angle_deg, params.node_budget)?
            .run()?;

    // Left bulk: mirrored copy for symmetric specs, independent mesh
    // otherwise.
    let (left_nodes, left_tris) = if asm.is_mirror_symmetric() {
        mirror_parts(&right_raw.nodes, &right_raw.triangles)
    } else {
        let left_port_coords: Vec<[f64; 2]> =
            neck.left_port.iter().map(|&i| neck.nodes[i as usize]).collect();
        let left_segments = bulk_segments(&asm.left_polygon, &left_port_coords);
        let h_port_l = (asm.port_left[1][1] - asm.port_left[0][1]) / neck.n_layers as f64;
        let size_l = SizeField {
            h_max: params.h_bulk,
            growth,
            sources: vec![SizeSource::Point {
                center: [-asm.eps, 0.0],
                h0: h_port_l,
                r_flat,
            }],
        };
        let raw =
            PolygonMesher::new(&left_segments, &size_l, params.min_angle_deg, params.node_budget)?
                .run()?;
        (raw.nodes, raw.triangles)
    };

    // Stitch: neck + right + left, deduplicating shared port nodes.
    let mut builder = StitchBuilder::new();
    builder.add(&neck.nodes, &neck.triangles, Region::Neck);
    builder.add(&right_raw.nodes, &right_raw.triangles, Region::RightBulk);
    builder.add(&left_nodes, &left_tris, Region::LeftBulk);
    let (nodes, triangles, region) = builder.finish();
    let total = nodes.len();
    if total > params.node_budget {
        return Err(MeshError::Budget { estimate: total, budget: params.node_budget });
    }

    let mut mesh = TriMesh::from_parts(nodes, triangles, region, |_, _| BoundaryMarker::Physical)?;
    mesh.h_neck = h_neck;
    mesh.h_layer = h_port;
    mesh.h_bulk = params.h_bulk;
    let _ = stride;
    Ok(mesh)
}

/// Boundary segments of a bulk region polygon whose implicit closing edge is
/// the port: the polygon edges stay free, the port pieces are protected.
fn bulk_segments(polygon: &[[f64; 2]], port_coords: &[[f64; 2]]) -> Vec<InputSegment> {
    let mut segments: Vec<InputSegment> = Vec::new();
    for w in polygon.windows(2) {
        segments.push(InputSegment {
            a: w[0],
            b: w[1],
            protected: false,
            marker: BoundaryMarker::Physical,
        });
    }
    // The closing edge runs from the polygon's last vertex to its first;
    // replace it with the port pieces. The port coordinate list runs bottom
    // to top; orient it to match the closing edge.
    let last = *polygon.last().unwrap();
    let first = polygon[0];
    let asc = last[1] < first[1];
    let n = port_coords.len();
    for k in 0..n - 1 {
        let (a, b) = if asc {
            (port_coords[k], port_coords[k + 1])
        } else {
            (port_coords[n - 1 - k], port_coords[n - 2 - k])
        };
        segments.push(InputSegment { a, b, protected: true, marker: BoundaryMarker::Physical });
    }
    segments
}

/// Mirrors nodes across x = 0 and flips triangle orientation back to CCW.
pub fn mirror_parts(nodes: &[[f64; 2]], triangles: &[[u32; 3]]) -> (Vec<[f64; 2]>, Vec<[u32; 3]>) {
    let m_nodes: Vec<[f64; 2]> = nodes.iter().map(|p| [-p[0], p[1]]).collect();
    let m_tris: Vec<[u32; 3]> = triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
    (m_nodes, m_tris)
}

/// Accumulates mesh parts, deduplicating nodes by exact coordinates.
pub struct StitchBuilder {
    nodes: Vec<[f64; 2]>,
    index: HashMap<(u64, u64), u32>,
    triangles: Vec<[u32; 3]>,
    region: Vec<Region>,
}

impl StitchBuilder {
    pub fn new() -> StitchBuilder {
        StitchBuilder {
            nodes: Vec::new(),
            index: HashMap::new(),
            triangles: Vec::new(),
            region: Vec::new(),
        }
    }

    pub fn add(&mut self, nodes: &[[f64; 2]], triangles: &[[u32; 3]], region: Region) {
        let mut remap = Vec::with_capacity(nodes.len());
        for p in nodes {
            let key = (p[0].to_bits(), p[1].to_bits());
            let idx = *self.index.entry(key).or_insert_with(|| {
                self.nodes.push(*p);
                (self.nodes.len() - 1) as u32
            });
            remap.push(idx);
        }
        for t in triangles {
            self.triangles.push([
                remap[t[0] as usize],
                remap[t[1] as usize],
                remap[t[2] as usize],
            ]);
            self.region.push(region);
        }
    }

    pub fn finish(self) -> (Vec<[f64; 2]>, Vec<[u32; 3]>, Vec<Region>) {
        (self.nodes, self.triangles, self.region)
    }
}

/// Triangulates a plain polygon with a sizing field; region tags come from
/// the classifier.
pub fn triangulate_polygon(
    boundary: &[[f64; 2]],
    size: &SizeField,
    params: &MeshParams,
    region_fn: impl Fn([f64; 2]) -> Region,
    marker_fn: impl Fn([f64; 2], [f64; 2]) -> BoundaryMarker,
) -> Result<TriMesh, MeshError> {
    params.validate()?;
    let n = boundary.len();
    let segments: Vec<InputSegment> = (0..n)
        .map(|i| InputSegment {
            a: boundary[i],
            b: boundary[(i + 1) % n],
            protected: false,
            marker: BoundaryMarker::Physical,
        })
        .collect();
    let raw = PolygonMesher::new(&segments, size, params.min_angle_deg, params.node_budget)?.run()?;
    let region: Vec<Region> = raw
        .triangles
        .iter()
        .map(|t| {
            let bary = [
                (raw.nodes[t[0] as usize][0] + raw.nodes[t[1] as usize][0] + raw.nodes[t[2] as usize][0]) / 3.0,
                (raw.nodes[t[0] as usize][1] + raw.nodes[t[1] as usize][1] + raw.nodes[t[2] as usize][1]) / 3.0,
            ];
            region_fn(bary)
        })
        .collect();
    let mut mesh = TriMesh::from_parts(raw.nodes, raw.triangles, region, marker_fn)?;
    mesh.h_bulk = size.h_max;
    mesh.h_neck = size.h_max;
    mesh.h_layer = size.h_max;
    Ok(mesh)
}

/// Writes the documented plain-text format: a header line with node and
/// triangle counts, node lines "x y", then triangle lines "i j k tag" with
/// tag 0 = left bulk, 1 = neck, 2 = right bulk.
pub fn write_mesh(mesh: &TriMesh, w: &mut impl Write) -> Result<(), MeshError> {
    writeln!(w, "{} {}", mesh.nodes.len(), mesh.triangles.len())?;
    for p in &mesh.nodes {
        writeln!(w, "{:?} {:?}", p[0], p[1])?;
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let tag = match mesh.region[t] {
            Region::LeftBulk => 0,
            Region::Neck => 1,
            Region::RightBulk => 2,
        };
        writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], tag)?;
    }
    Ok(())
}

/// Reads the plain-text mesh format; boundary markers are reset to Physical.
pub fn read_mesh(r: &mut impl BufRead) -> Result<TriMesh, MeshError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| MeshError::BadFile("missing header".into()))??;
    let mut it = header.split_whitespace();
    let n_nodes: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MeshError::BadFile("bad node count".into()))?;
    let n_tris: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MeshError::BadFile("bad triangle count".into()))?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let line = lines
            .next()
            .ok_or_else(|| MeshError::BadFile("truncated node list".into()))??;
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::BadFile(format!("bad node line: {line}")))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::BadFile(format!("bad node line: {line}")))?;
        nodes.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(n_tris);
    let mut region = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let line = lines
            .next()
            .ok_or_else(|| MeshError::BadFile("truncated triangle list".into()))??;
        let mut it = line.split_whitespace();
        let mut tri = [0u32; 3];
        for v in &mut tri {
            *v = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| MeshError::BadFile(format!("bad triangle line: {line}")))?;
        }
        let tag: u32 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::BadFile(format!("bad triangle line: {line}")))?;
        triangles.push(tri);
        region.push(match tag {
            0 => Region::LeftBulk,
            1 => Region::Neck,
            2 => Region::RightBulk,
            other => return Err(MeshError::BadFile(format!("unknown region tag {other}"))),
        });
    }
    TriMesh::from_parts(nodes, triangles, region, |_, _| BoundaryMarker::Physical)
}
