//! Graded sizing fields: a cap size plus point/segment sources whose size
//! grows linearly with distance (a linear size ramp is a geometric ring
//! progression with ratio 1 + growth).

#[derive(Debug, Clone)]
pub enum SizeSource {
    Point { center: [f64; 2], h0: f64, r_flat: f64 },
    Segment { a: [f64; 2], b: [f64; 2], h0: f64, r_flat: f64 },
}

#[derive(Debug, Clone)]
pub struct SizeField {
    pub h_max: f64,
    /// Size increase per unit distance from a source (= layer_ratio - 1).
    pub growth: f64,
    pub sources: Vec<SizeSource>,
}

impl SizeField {
    pub fn uniform(h: f64) -> SizeField {
        SizeField { h_max: h, growth: 1.0, sources: Vec::new() }
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let mut h = self.h_max;
        for s in &self.sources {
            let (d, h0, r_flat) = match s {
                SizeSource::Point { center, h0, r_flat } => {
                    let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                    (d, *h0, *r_flat)
                }
                SizeSource::Segment { a, b, h0, r_flat } => {
                    (super::locate::dist_point_segment(p, *a, *b), *h0, *r_flat)
                }
            };
            let local = h0 + self.growth * (d - r_flat).max(0.0);
            h = h.min(local);
        }
        h
    }

    /// Coarse node-count estimate: integral of 1/size^2 over the bounding
    /// box intersected with the polygon, sampled on a modest grid.
    pub fn estimate_nodes(&self, contains: impl Fn([f64; 2]) -> bool, bbox: ([f64; 2], [f64; 2])) -> usize {
        let (lo, hi) = bbox;
        let n = 96;
        let dx = (hi[0] - lo[0]) / n as f64;
        let dy = (hi[1] - lo[1]) / n as f64;
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                let p = [lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy];
                if contains(p) {
                    let h = self.eval(p);
                    acc += dx * dy / (h * h);
                }
            }
        }
        // Equilateral packing density factor.
        (acc * 2.0 / 3.0_f64.sqrt()) as usize
    }
}
