//! Dense row-major matrices and the handful of kernels the pipeline needs.
//!
//! The data matrices here are short and very wide (hundreds to tens of
//! thousands of windows, `elemsize^2` columns), so every kernel streams the
//! rows of the big matrix once and keeps the small operand in cache. All
//! reductions run in a fixed order, so results never depend on scheduling.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Plain triple-loop product; meant for the small matrices only.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (p, &a) in self.row(i).iter().enumerate() {
                axpy(a, other.row(p), dst);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(dot(&self.data, &self.data))
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, x) in mean.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        let inv = 1.0 / self.rows as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }

    /// `M^T M` for a tall matrix with few columns.
    pub fn gram_cols(&self) -> Matrix {
        let k = self.cols;
        let mut g = Matrix::zeros(k, k);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..k {
                for b in 0..k {
                    g.data[a * k + b] += r[a] * r[b];
                }
            }
        }
        g
    }

    /// `M M^T` for a wide matrix with few rows.
    pub fn gram_rows(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.rows, |a, b| dot(self.row(a), self.row(b)))
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

const COL_BLOCK: usize = 1024;

/// `Y = (X - 1 mu^T) P^T` where `P` holds `l` basis vectors as rows.
/// Returns an `n x l` matrix.
pub fn project_rows(x: &Matrix, center: Option<&[f64]>, basis: &Matrix) -> Matrix {
    assert_eq!(x.cols, basis.cols);
    let (n, d, l) = (x.rows, x.cols, basis.rows);
    let mut y = Matrix::zeros(n, l);
    let mut buf = vec![0.0; COL_BLOCK.min(d)];
    for c0 in (0..d).step_by(COL_BLOCK) {
        let c1 = (c0 + COL_BLOCK).min(d);
        let w = c1 - c0;
        for i in 0..n {
            let xr = centered_block(x.row(i), center, c0, c1, &mut buf[..w]);
            let yr = y.row_mut(i);
            for (j, yj) in yr.iter_mut().enumerate() {
                *yj += dot(xr, &basis.row(j)[c0..c1]);
            }
        }
    }
    y
}

/// `Z = C^T (X - 1 mu^T)` for coefficients `C` (`n x l`). Returns `l x d`.
pub fn accumulate_rows(x: &Matrix, center: Option<&[f64]>, coeff: &Matrix) -> Matrix {
    assert_eq!(x.rows, coeff.rows);
    let (n, d, l) = (x.rows, x.cols, coeff.cols);
    let mut z = Matrix::zeros(l, d);
    let mut buf = vec![0.0; COL_BLOCK.min(d)];
    for c0 in (0..d).step_by(COL_BLOCK) {
        let c1 = (c0 + COL_BLOCK).min(d);
        let w = c1 - c0;
        for i in 0..n {
            let xr = centered_block(x.row(i), center, c0, c1, &mut buf[..w]);
            for (j, &a) in coeff.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, xr, &mut z.row_mut(j)[c0..c1]);
                }
            }
        }
    }
    z
}

#[inline]
fn centered_block<'a>(row: &'a [f64], center: Option<&[f64]>, c0: usize, c1: usize, buf: &'a mut [f64]) -> &'a [f64] {
    match center {
        None => &row[c0..c1],
        Some(mu) => {
            for ((b, x), m) in buf.iter_mut().zip(&row[c0..c1]).zip(&mu[c0..c1]) {
                *b = x - m;
            }
            buf
        }
    }
}

/// Orthonormalizes the rows of `m` in place by Gram-Schmidt with one full
/// re-orthogonalization pass. Rows that are numerically dependent on the
/// preceding ones are set to zero. Returns the number of nonzero rows.
pub fn orthonormalize_rows(m: &mut Matrix) -> usize {
    let cols = m.cols;
    let mut rank = 0;
    for i in 0..m.rows {
        let (done, rest) = m.data.split_at_mut(i * cols);
        let v = &mut rest[..cols];
        let original = norm(v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for j in 0..i {
                let q = &done[j * cols..(j + 1) * cols];
                let c = dot(q, v);
                if c != 0.0 {
                    axpy(-c, q, v);
                }
            }
        }
        let nv = norm(v);
        if nv <= 1e-12 * original {
            v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            let inv = 1.0 / nv;
            v.iter_mut().for_each(|x| *x *= inv);
            rank += 1;
        }
    }
    rank
}

/// Thin SVD of a matrix with few rows, by one-sided Jacobi rotations of its
/// rows.
///
/// Returns `(sigma, rot, right)` with `sigma` descending, `right` holding the
/// unit right singular vectors as rows and `rot` the orthogonal row rotation
/// such that `rot[j] . m = sigma[j] * right[j]`. Zero singular values are
/// kept (with zero right vectors) so the output has `m.rows()` entries.
pub fn jacobi_svd_rows(m: &Matrix) -> (Vec<f64>, Matrix, Matrix) {
    let l = m.rows;
    let mut b = m.clone();
    let mut rot = Matrix::from_fn(l, l, |i, j| if i == j { 1.0 } else { 0.0 });
    const TOL: f64 = 1e-14;
    const MAX_SWEEPS: usize = 60;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        let mut norms: Vec<f64> = (0..l).map(|i| dot(b.row(i), b.row(i))).collect();
        for p in 0..l {
            for q in p + 1..l {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(b.row(p), b.row(q));
                if libm::fabs(gamma) <= TOL * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut b, p, q, c, s);
                rotate_rows(&mut rot, p, q, c, s);
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..l).map(|i| norm(b.row(i))).collect();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let mut right = Matrix::zeros(l, m.cols);
    let mut rot_sorted = Matrix::zeros(l, l);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        if s > 0.0 {
            for (o, v) in right.row_mut(dst).iter_mut().zip(b.row(src)) {
                *o = v / s;
            }
        }
        rot_sorted.row_mut(dst).copy_from_slice(rot.row(src));
    }
    sigma = order.iter().map(|&i| sigma[i]).collect();
    (sigma, rot_sorted, right)
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    let (head, tail) = m.data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (a, b) in rp.iter_mut().zip(rq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// SplitMix64; a tiny deterministic generator for sketch matrices.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_signed(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    }
}

/// Tuning for [`truncated_svd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iters: 6,
            seed: 0x5EED_0F_5EC7_2A11,
        }
    }
}

/// Leading singular triplets of `X - 1 mu^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// Descending, strictly positive.
    pub sigma: Vec<f64>,
    /// Left singular vectors as rows (`k x n`).
    pub left: Matrix,
    /// Right singular vectors as rows (`k x d`).
    pub right: Matrix,
}

impl TruncatedSvd {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_RTOL: f64 = 1e-7;

/// Randomized subspace iteration for the `k` leading singular triplets of the
/// (optionally column-centered) matrix `x`.
///
/// The sketch is seeded deterministically. When the sketch width reaches
/// `min(n, d)` the captured subspace is the whole range and the result is
/// exact up to rounding; in that case no power iterations are run.
pub fn truncated_svd(x: &Matrix, center: Option<&[f64]>, k: usize, opts: &SvdOptions) -> TruncatedSvd {
    let (n, d) = (x.rows, x.cols);
    let full = n.min(d);
    let l = (k + opts.oversample).min(full);
    let exact = l == full;

    let mut rng = SplitMix64::new(opts.seed);
    let sketch = Matrix::from_fn(l, d, |_, _| rng.next_signed());
    let mut qt = project_rows(x, center, &sketch).transpose();
    orthonormalize_rows(&mut qt);
    if !exact {
        for _ in 0..opts.power_iters {
            let mut zt = accumulate_rows(x, center, &qt.transpose());
            orthonormalize_rows(&mut zt);
            qt = project_rows(x, center, &zt).transpose();
            orthonormalize_rows(&mut qt);
        }
    }
    // B = Q^T Xc, then Xc ~= Q B = (Q R^T) (R B)
    let b = accumulate_rows(x, center, &qt.transpose());
    let (sigma, rot, right) = jacobi_svd_rows(&b);
    let left_all = rot.matmul(&qt);

    let smax = sigma.first().copied().unwrap_or(0.0);
    let keep = sigma
        .iter()
        .take(k)
        .take_while(|&&s| s > 0.0 && s > RANK_RTOL * smax)
        .count();
    let mut left = Matrix::zeros(keep, n);
    let mut right_k = Matrix::zeros(keep, d);
    for j in 0..keep {
        left.row_mut(j).copy_from_slice(left_all.row(j));
        right_k.row_mut(j).copy_from_slice(right.row(j));
    }
    TruncatedSvd {
        sigma: sigma[..keep].to_vec(),
        left,
        right: right_k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = SplitMix64::new(seed);
        Matrix::from_fn(rows, cols, |_, _| r.next_signed())
    }

    #[test]
    fn kernels_match_dense_products() {
        let x = random(7, 2100, 1);
        let p = random(3, 2100, 2);
        let mu = x.column_means();
        let xc = Matrix::from_fn(7, 2100, |i, j| x.get(i, j) - mu[j]);
        let y = project_rows(&x, Some(&mu), &p);
        let y_ref = xc.matmul(&p.transpose());
        for (a, b) in y.as_slice().iter().zip(y_ref.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        let c = random(7, 3, 3);
        let z = accumulate_rows(&x, Some(&mu), &c);
        let z_ref = c.transpose().matmul(&xc);
        for (a, b) in z.as_slice().iter().zip(z_ref.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn orthonormalize_handles_dependent_rows() {
        let mut m = Matrix::from_vec(3, 3, vec![1.0, 1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(orthonormalize_rows(&mut m), 2);
        assert!(m.row(1).iter().all(|&v| v == 0.0));
        assert!((dot(m.row(0), m.row(2))).abs() < 1e-15);
        assert!((norm(m.row(2)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = random(5, 12, 9);
        let (s, rot, right) = jacobi_svd_rows(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        // m = rot^T diag(s) right
        let mut sr = right.clone();
        for j in 0..5 {
            sr.row_mut(j).iter_mut().for_each(|v| *v *= s[j]);
        }
        let rec = rot.transpose().matmul(&sr);
        for (a, b) in rec.as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = right.gram_rows();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_svd_exact_for_small() {
        let x = random(6, 9, 4);
        let t = truncated_svd(&x, None, 6, &SvdOptions::default());
        assert_eq!(t.len(), 6);
        let mut rec = Matrix::zeros(6, 9);
        for j in 0..6 {
            for i in 0..6 {
                for c in 0..9 {
                    let v = rec.get(i, c) + t.sigma[j] * t.left.get(j, i) * t.right.get(j, c);
                    rec.set(i, c, v);
                }
            }
        }
        for (a, b) in rec.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_svd_finds_dominant_directions_with_sketch() {
        // rank-3 signal with fast-decaying noise tail
        let (n, d) = (80, 300);
        let a = random(n, 3, 11);
        let b = random(3, d, 12);
        let mut x = a.matmul(&b);
        let noise = random(n, d, 13);
        for (v, e) in x.as_mut_slice().iter_mut().zip(noise.as_slice()) {
            *v += 1e-6 * e;
        }
        let t = truncated_svd(&x, None, 3, &SvdOptions::default());
        let exact = truncated_svd(&x, None, 80, &SvdOptions { oversample: 80, ..Default::default() });
        for j in 0..3 {
            assert!((t.sigma[j] - exact.sigma[j]).abs() < 1e-9 * exact.sigma[0]);
        }
    }
}
