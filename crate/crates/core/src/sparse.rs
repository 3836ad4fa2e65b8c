//! Sparse symmetric matrices in CSR form and preconditioned conjugate
//! gradients.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("conjugate gradients did not reach tolerance {tol} within {iters} iterations (residual {residual})")]
    NoConvergence { tol: f64, iters: usize, residual: f64 },
    #[error("matrix is not positive definite along the search direction (p'Ap = {curvature})")]
    IndefiniteMatrix { curvature: f64 },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    DimensionMismatch { n: usize, len: usize },
}

/// Triplet accumulator for assembly.
#[derive(Debug, Clone)]
pub struct Triplets {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    /// Sums duplicates into CSR with sorted column indices per row.
    pub fn to_csr(&self) -> Csr {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in &self.entries {
            counts[i as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0u32; self.entries.len()];
        let mut vals = vec![0.0; self.entries.len()];
        let mut next = counts.clone();
        for &(i, j, v) in &self.entries {
            let slot = next[i as usize];
            cols[slot] = j;
            vals[slot] = v;
            next[i as usize] += 1;
        }
        // Sort each row by column and merge duplicates.
        let mut row_ptr = vec![0usize; n + 1];
        let mut out_cols: Vec<u32> = Vec::with_capacity(self.entries.len());
        let mut out_vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            for k in counts[i]..counts[i + 1] {
                scratch.push((cols[k], vals[k]));
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut v = scratch[k].1;
                k += 1;
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                out_cols.push(c);
                out_vals.push(v);
            }
            row_ptr[i + 1] = out_cols.len();
        }
        Csr { n, row_ptr, cols: out_cols, vals: out_vals }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] as usize == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    /// Symmetry defect `max |A_ij - A_ji|` (test support).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                let a_ij = self.vals[k];
                let a_ji = self.get(j, i);
                worst = worst.max((a_ij - a_ji).abs());
            }
        }
        worst
    }

    /// Iterates the (column, value) entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k] as usize, self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.cols[k] as usize == j {
                return self.vals[k];
            }
        }
        0.0
    }

    /// Returns A + s * diag(d) without changing the sparsity pattern
    /// (the diagonal must already be present, which holds for FEM matrices).
    pub fn plus_scaled_diag(&self, d: &[f64], s: f64) -> Csr {
        let mut out = self.clone();
        for i in 0..out.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] as usize == i {
                    out.vals[k] += s * d[i];
                }
            }
        }
        out
    }
}

/// Preconditioners for CG.
pub enum Preconditioner {
    Identity,
    /// Diagonal (Jacobi) scaling: z = r / diag.
    Jacobi(Vec<f64>),
    /// Zero fill-in incomplete Cholesky factor, stored lower-triangular CSR.
    Ic0(IcFactor),
}

impl Preconditioner {
    pub fn jacobi(a: &Csr) -> Preconditioner {
        let d = a
            .diagonal()
            .into_iter()
            .map(|v| if v.abs() > 0.0 { v } else { 1.0 })
            .collect();
        Preconditioner::Jacobi(d)
    }

    /// IC(0) with diagonal-shift retries; falls back to Jacobi if the
    /// factorization keeps breaking down.
    pub fn ic0(a: &Csr) -> Preconditioner {
        let mut shift = 0.0;
        for _ in 0..6 {
            if let Some(f) = IcFactor::try_new(a, shift) {
                return Preconditioner::Ic0(f);
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 10.0 };
        }
        Preconditioner::jacobi(a)
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Identity => z.copy_from_slice(r),
            Preconditioner::Jacobi(d) => {
                for i in 0..r.len() {
                    z[i] = r[i] / d[i];
                }
            }
            Preconditioner::Ic0(f) => f.solve(r, z),
        }
    }
}

/// Lower-triangular incomplete Cholesky factor on the pattern of A.
pub struct IcFactor {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag_idx: Vec<usize>,
}

impl IcFactor {
    fn try_new(a: &Csr, shift: f64) -> Option<IcFactor> {
        let n = a.n;
        // Lower-triangular pattern (including diagonal).
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut diag_idx = vec![0usize; n];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.cols[k] as usize;
                if j <= i {
                    if j == i {
                        diag_idx[i] = cols.len();
                    }
                    cols.push(j as u32);
                    let mut v = a.vals[k];
                    if j == i {
                        v += shift * v.abs().max(1e-300);
                    }
                    vals.push(v);
                }
            }
            row_ptr[i + 1] = cols.len();
        }

        // Up-looking factorization restricted to the pattern.
        for i in 0..n {
            // L_ij for j < i: (a_ij - sum_k L_ik L_jk) / L_jj
            for k in row_ptr[i]..diag_idx[i] {
                let j = cols[k] as usize;
                let mut sum = vals[k];
                // Sparse dot of rows i and j over columns < j.
                let (mut ki, mut kj) = (row_ptr[i], row_ptr[j]);
                while ki < k && kj < diag_idx[j] {
                    let ci = cols[ki] as usize;
                    let cj = cols[kj] as usize;
                    if ci == cj {
                        sum -= vals[ki] * vals[kj];
                        ki += 1;
                        kj += 1;
                    } else if ci < cj {
                        ki += 1;
                    } else {
                        kj += 1;
                    }
                }
                vals[k] = sum / vals[diag_idx[j]];
            }
            // Diagonal.
            let mut sum = vals[diag_idx[i]];
            for k in row_ptr[i]..diag_idx[i] {
                sum -= vals[k] * vals[k];
            }
            if sum <= 0.0 || !sum.is_finite() {
                return None;
            }
            vals[diag_idx[i]] = sum.sqrt();
        }
        Some(IcFactor { n, row_ptr, cols, vals, diag_idx })
    }

    /// Solves L L^T z = r.
    fn solve(&self, r: &[f64], z: &mut [f64]) {
        // Forward solve L y = r.
        for i in 0..self.n {
            let mut acc = r[i];
            for k in self.row_ptr[i]..self.diag_idx[i] {
                acc -= self.vals[k] * z[self.cols[k] as usize];
            }
            z[i] = acc / self.vals[self.diag_idx[i]];
        }
        // Backward solve L^T z = y.
        for i in (0..self.n).rev() {
            let zi = z[i] / self.vals[self.diag_idx[i]];
            z[i] = zi;
            for k in self.row_ptr[i]..self.diag_idx[i] {
                z[self.cols[k] as usize] -= self.vals[k] * zi;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Options for the CG solve.
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-10, max_iters: 50_000 }
    }
}

/// Preconditioned conjugate gradients for SPD systems; `x` holds the initial
/// guess on entry and the solution on success.
pub fn cg(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    pc: &Preconditioner,
    opts: &CgOptions,
) -> Result<usize, SolveError> {
    let n = a.n();
    if b.len() != n || x.len() != n {
        return Err(SolveError::DimensionMismatch { n, len: b.len().max(x.len()) });
    }
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        x.fill(0.0);
        return Ok(0);
    }
    let tol = opts.rel_tol * norm_b;

    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..opts.max_iters {
        if norm2(&r) <= tol {
            return Ok(it);
        }
        a.matvec(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if p_ap <= 0.0 {
            return Err(SolveError::IndefiniteMatrix { curvature: p_ap });
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm2(&r) <= tol {
        Ok(opts.max_iters)
    } else {
        Err(SolveError::NoConvergence {
            tol: opts.rel_tol,
            iters: opts.max_iters,
            residual: norm2(&r) / norm_b,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian tridiagonal matrix: known SPD test case.
    fn laplace_1d(n: usize) -> Csr {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn csr_assembly_merges_duplicates() {
        let mut t = Triplets::new(3);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 2, 5.0);
        t.push(2, 1, 5.0);
        t.push(1, 1, 1.0);
        t.push(2, 2, 1.0);
        let a = t.to_csr();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 2), 5.0);
        assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn cg_solves_laplace() {
        for pc_kind in 0..3 {
            let n = 200;
            let a = laplace_1d(n);
            let x_true: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
            let b = a.matvec_alloc(&x_true);
            let pc = match pc_kind {
                0 => Preconditioner::Identity,
                1 => Preconditioner::jacobi(&a),
                _ => Preconditioner::ic0(&a),
            };
            let mut x = vec![0.0; n];
            cg(&a, &b, &mut x, &pc, &CgOptions { rel_tol: 1e-12, max_iters: 10_000 }).unwrap();
            let err: f64 = x
                .iter()
                .zip(&x_true)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-8, "pc {pc_kind}: err = {err}");
        }
    }

    #[test]
    fn ic0_beats_jacobi_on_iterations() {
        let n = 400;
        let a = laplace_1d(n);
        let b = vec![1.0; n];
        let mut x1 = vec![0.0; n];
        let it_jacobi =
            cg(&a, &b, &mut x1, &Preconditioner::jacobi(&a), &CgOptions::default()).unwrap();
        let mut x2 = vec![0.0; n];
        let it_ic = cg(&a, &b, &mut x2, &Preconditioner::ic0(&a), &CgOptions::default()).unwrap();
        assert!(it_ic < it_jacobi, "ic {it_ic} vs jacobi {it_jacobi}");
        // Tridiagonal IC(0) is complete Cholesky: direct-solve accuracy.
        assert!(it_ic <= 3, "it_ic = {it_ic}");
    }

    #[test]
    fn indefinite_detected() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = t.to_csr();
        let b = vec![0.0, 1.0];
        let mut x = vec![0.0; 2];
        match cg(&a, &b, &mut x, &Preconditioner::Identity, &CgOptions::default()) {
            Err(SolveError::IndefiniteMatrix { .. }) => {}
            other => panic!("expected indefinite error, got {other:?}"),
        }
    }
}
