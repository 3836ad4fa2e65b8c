//! Structured mapped grid for the neck region: columns along x with a fixed
//! number of node layers across the height. Column heights interpolate the
//! knot-sampled boundary polyline linearly, so the meshed neck matches the
//! assembled polyline domain exactly.

use crate::geometry::AssembledDumbbell;

pub struct NeckGrid {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    /// Node indices of the first column (x = -eps), bottom to top.
    pub left_port: Vec<u32>,
    /// Node indices of the last column (x = +eps), bottom to top.
    pub right_port: Vec<u32>,
    pub n_layers: usize,
}

struct Column {
    x: f64,
    bot: f64,
    top: f64,
}

/// Builds the neck grid with at least `n_across` cell layers across the
/// height everywhere and near-isotropic cells.
pub fn neck_grid(asm: &AssembledDumbbell, n_across: usize) -> NeckGrid {
    let samples = &asm.neck_samples;
    let max_height = samples
        .iter()
        .map(|s| s.2 - s.1)
        .fold(0.0f64, f64::max);
    let min_height = samples
        .iter()
        .map(|s| s.2 - s.1)
        .fold(f64::INFINITY, f64::min);
    // Layer count so the thinnest target h = delta/n_across is met at the
    // tallest cross-section.
    let h_target = asm.delta / n_across as f64;
    let n_y = ((max_height / h_target).ceil() as usize).max(n_across);

    // Column positions: knot samples refined to keep cells near-isotropic
    // (and at least two cells along the neck).
    let aspect = 1.3;
    let columns = if asm.is_mirror_symmetric() {
        let mut right = build_columns(samples, n_y, aspect, Some(0.0));
        // Mirror the x >= 0 columns; heights reused bit-for-bit.
        let mut cols: Vec<Column> = right
            .iter()
            .skip(1)
            .map(|c| Column { x: -c.x, bot: c.bot, top: c.top })
            .rev()
            .collect();
        cols.append(&mut right);
        cols
    } else {
        build_columns(samples, n_y, aspect, None)
    };

    let min_len = columns.len().min(2);
    debug_assert!(min_len == 2, "neck must have at least two columns");
    let _ = min_height;

    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity(columns.len() * (n_y + 1));
    for c in &columns {
        for j in 0..=n_y {
            let t = j as f64 / n_y as f64;
            nodes.push([c.x, c.bot + (c.top - c.bot) * t]);
        }
    }
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let stride = (n_y + 1) as u32;
    for ci in 0..columns.len() - 1 {
        let base0 = ci as u32 * stride;
        let base1 = (ci + 1) as u32 * stride;
        let mid_x = 0.5 * (columns[ci].x + columns[ci + 1].x);
        for j in 0..n_y as u32 {
            let (a, b, c, d) = (base0 + j, base1 + j, base1 + j + 1, base0 + j + 1);
            if mid_x >= 0.0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                // Mirrored diagonal to keep symmetric meshes symmetric.
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    let left_port: Vec<u32> = (0..stride).collect();
    let last_base = (columns.len() as u32 - 1) * stride;
    let right_port: Vec<u32> = (last_base..last_base + stride).collect();
    NeckGrid { nodes, triangles, left_port, right_port, n_layers: n_y }
}

/// Columns over the sample range, starting at `from_x` when given (the
/// symmetric case builds only x >= 0).
fn build_columns(
    samples: &[(f64, f64, f64)],
    n_y: usize,
    aspect: f64,
    from_x: Option<f64>,
) -> Vec<Column> {
    let mut columns: Vec<Column> = Vec::new();
    let eps = samples.last().unwrap().0;
    for w in samples.windows(2) {
        let (x0, b0, t0) = w[0];
        let (x1, b1, t1) = w[1];
        if let Some(start) = from_x {
            if x1 <= start {
                continue;
            }
        }
        let seg_lo = match from_x {
            Some(start) if x0 < start => start,
            _ => x0,
        };
        if columns.is_empty() {
            let (bot, top) = interp(x0, b0, t0, x1, b1, t1, seg_lo);
            columns.push(Column { x: seg_lo, bot, top });
        }
        // Local target column width: near-isotropic cells plus a cap so the
        // neck always has a few columns along its length.
        let h_here = ((t0 - b0).min(t1 - b1)) / n_y as f64;
        let target = (aspect * h_here).min(eps.max(1e-300));
        let len = x1 - seg_lo;
        let n_sub = ((len / target).ceil() as usize).max(1);
        for k in 1..=n_sub {
            let x = if k == n_sub {
                x1
            } else {
                seg_lo + len * k as f64 / n_sub as f64
            };
            let (bot, top) = interp(x0, b0, t0, x1, b1, t1, x);
            columns.push(Column { x, bot, top });
        }
    }
    columns
}

fn interp(x0: f64, b0: f64, t0: f64, x1: f64, b1: f64, t1: f64, x: f64) -> (f64, f64) {
    if x <= x0 {
        return (b0, t0);
    }
    if x >= x1 {
        return (b1, t1);
    }
    let t = (x - x0) / (x1 - x0);
    (b0 + (b1 - b0) * t, t0 + (t1 - t0) * t)
}
