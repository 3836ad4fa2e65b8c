//! Spatial acceleration: segment grids for distance/containment queries and
//! a triangle bucket grid for point location.

/// Uniform bucket grid over a set of segments.
pub struct SegmentGrid {
    min: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    segments: Vec<([f64; 2], [f64; 2])>,
}

impl SegmentGrid {
    pub fn new(segments: Vec<([f64; 2], [f64; 2])>) -> SegmentGrid {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for (a, b) in &segments {
            for p in [a, b] {
                min[0] = min[0].min(p[0]);
                min[1] = min[1].min(p[1]);
                max[0] = max[0].max(p[0]);
                max[1] = max[1].max(p[1]);
            }
        }
        let extent = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        let target_cells = (segments.len().max(16) as f64).sqrt().ceil() as usize;
        let cell = extent / target_cells as f64;
        let nx = ((max[0] - min[0]) / cell).ceil() as usize + 1;
        let ny = ((max[1] - min[1]) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (si, (a, b)) in segments.iter().enumerate() {
            let lo_x = (((a[0].min(b[0]) - min[0]) / cell).floor() as isize).max(0) as usize;
            let hi_x = ((((a[0].max(b[0]) - min[0]) / cell).floor() as isize).max(0) as usize).min(nx - 1);
            let lo_y = (((a[1].min(b[1]) - min[1]) / cell).floor() as isize).max(0) as usize;
            let hi_y = ((((a[1].max(b[1]) - min[1]) / cell).floor() as isize).max(0) as usize).min(ny - 1);
            for gy in lo_y..=hi_y {
                for gx in lo_x.min(nx - 1)..=hi_x {
                    buckets[gy * nx + gx].push(si as u32);
                }
            }
        }
        SegmentGrid { min, cell, nx, ny, buckets, segments }
    }

    pub fn segments(&self) -> &[([f64; 2], [f64; 2])] {
        &self.segments
    }

    /// Distance from `p` to the nearest segment.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let gx = (((p[0] - self.min[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let gy = (((p[1] - self.min[1]) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        let mut best = f64::INFINITY;
        // Expand rings until the closed ring distance exceeds the best found.
        for ring in 0..self.nx.max(self.ny) + 1 {
            let r = ring as isize;
            let mut any_cell = false;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue; // ring boundary only
                    }
                    let cx = gx + dx;
                    let cy = gy + dy;
                    if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
                        continue;
                    }
                    any_cell = true;
                    for &si in &self.buckets[cy as usize * self.nx + cx as usize] {
                        let (a, b) = self.segments[si as usize];
                        best = best.min(dist_point_segment(p, a, b));
                    }
                }
            }
            if best <= (ring as f64) * self.cell {
                break;
            }
            if !any_cell && ring > self.nx.max(self.ny) {
                break;
            }
        }
        best
    }

    /// Parity point-in-polygon via ray casting along +x. The segments must
    /// form closed loops.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let mut crossings = 0u32;
        // Walk all buckets in the row band; segments can be long, so simply
        // test every segment whose y-range straddles p.y in the row cells to
        // the right plus own cell. For robustness just test all segments
        // whose bounding box y-range contains p.y.
        for (a, b) in &self.segments {
            let (ay, by) = (a[1], b[1]);
            if (ay > p[1]) == (by > p[1]) {
                continue;
            }
            let t = (p[1] - ay) / (by - ay);
            let x = a[0] + t * (b[0] - a[0]);
            if x > p[0] {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }
}

pub fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Uniform bucket grid over triangles for point location.
pub struct TriangleLocator {
    min: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl TriangleLocator {
    pub fn new(nodes: &[[f64; 2]], triangles: &[[u32; 3]]) -> TriangleLocator {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in nodes {
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
            max[0] = max[0].max(p[0]);
            max[1] = max[1].max(p[1]);
        }
        let extent_x = (max[0] - min[0]).max(1e-12);
        let extent_y = (max[1] - min[1]).max(1e-12);
        // Aim for O(1) triangles per bucket.
        let n_cells = (triangles.len() as f64).max(16.0);
        let cell = ((extent_x * extent_y / n_cells).sqrt()).max(1e-12);
        let nx = (extent_x / cell).ceil() as usize + 1;
        let ny = (extent_y / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (ti, t) in triangles.iter().enumerate() {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in t {
                let p = nodes[v as usize];
                lo[0] = lo[0].min(p[0]);
                lo[1] = lo[1].min(p[1]);
                hi[0] = hi[0].max(p[0]);
                hi[1] = hi[1].max(p[1]);
            }
            let lo_x = (((lo[0] - min[0]) / cell).floor() as isize).max(0) as usize;
            let hi_x = ((((hi[0] - min[0]) / cell).floor() as isize).max(0) as usize).min(nx - 1);
            let lo_y = (((lo[1] - min[1]) / cell).floor() as isize).max(0) as usize;
            let hi_y = ((((hi[1] - min[1]) / cell).floor() as isize).max(0) as usize).min(ny - 1);
            for gy in lo_y..=hi_y {
                for gx in lo_x.min(nx - 1)..=hi_x {
                    buckets[gy * nx + gx].push(ti as u32);
                }
            }
        }
        TriangleLocator { min, cell, nx, ny, buckets }
    }

    /// Returns the index of a triangle containing `p` along with its
    /// barycentric coordinates, or None.
    pub fn locate(
        &self,
        nodes: &[[f64; 2]],
        triangles: &[[u32; 3]],
        p: [f64; 2],
    ) -> Option<(usize, [f64; 3])> {
        let gx = (((p[0] - self.min[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let gy = (((p[1] - self.min[1]) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        // Points on cell borders may sit in a neighboring bucket's triangle.
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)] {
            let cx = gx + dx;
            let cy = gy + dy;
            if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
                continue;
            }
            for &ti in &self.buckets[cy as usize * self.nx + cx as usize] {
                let t = triangles[ti as usize];
                let bary = barycentric(nodes[t[0] as usize], nodes[t[1] as usize], nodes[t[2] as usize], p);
                let worst = bary[0].min(bary[1]).min(bary[2]);
                if worst >= -1e-12 {
                    return Some((ti as usize, bary));
                }
                match best {
                    Some((_, _, b)) if b >= worst => {}
                    _ => best = Some((ti as usize, bary, worst)),
                }
            }
        }
        // Accept slightly-outside queries (boundary rounding).
        match best {
            Some((ti, bary, worst)) if worst >= -1e-9 => Some((ti, bary)),
            _ => None,
        }
    }

    /// All triangle candidates whose bounding box might intersect the
    /// vertical line x = x0 within the grid row range.
    pub fn candidates_near_vertical(&self, x0: f64) -> Vec<u32> {
        let gx = (((x0 - self.min[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let mut out = Vec::new();
        for gy in 0..self.ny {
            for dx in [-1_isize, 0, 1] {
                let cx = gx + dx;
                if cx < 0 || cx >= self.nx as isize {
                    continue;
                }
                out.extend_from_slice(&self.buckets[gy * self.nx + cx as usize]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn barycentric(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> [f64; 3] {
    let v0 = [b[0] - a[0], b[1] - a[1]];
    let v1 = [c[0] - a[0], c[1] - a[1]];
    let v2 = [p[0] - a[0], p[1] - a[1]];
    let den = v0[0] * v1[1] - v1[0] * v0[1];
    if den == 0.0 {
        return [-1.0, -1.0, -1.0];
    }
    let w1 = (v2[0] * v1[1] - v1[0] * v2[1]) / den;
    let w2 = (v0[0] * v2[1] - v2[0] * v0[1]) / den;
    [1.0 - w1 - w2, w1, w2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_grid_distance() {
        let square = vec![
            ([0.0, 0.0], [1.0, 0.0]),
            ([1.0, 0.0], [1.0, 1.0]),
            ([1.0, 1.0], [0.0, 1.0]),
            ([0.0, 1.0], [0.0, 0.0]),
        ];
        let grid = SegmentGrid::new(square);
        assert!((grid.distance([0.5, 0.5]) - 0.5).abs() < 1e-14);
        assert!((grid.distance([0.5, 0.2]) - 0.2).abs() < 1e-14);
        assert!((grid.distance([2.0, 0.5]) - 1.0).abs() < 1e-14);
        assert!(grid.contains([0.5, 0.5]));
        assert!(!grid.contains([1.5, 0.5]));
    }

    #[test]
    fn locator_finds_triangles() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let tris = vec![[0u32, 1, 2], [1, 3, 2]];
        let loc = TriangleLocator::new(&nodes, &tris);
        let (ti, bary) = loc.locate(&nodes, &tris, [0.2, 0.2]).unwrap();
        assert_eq!(ti, 0);
        assert!((bary[0] - 0.6).abs() < 1e-14);
        let (ti, _) = loc.locate(&nodes, &tris, [0.9, 0.9]).unwrap();
        assert_eq!(ti, 1);
        assert!(loc.locate(&nodes, &tris, [1.5, 0.5]).is_none());
    }
}
