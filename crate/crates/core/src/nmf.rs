//! Non-negative matrix factorization `X ~= W H` under the Frobenius norm.
//!
//! Initialization is NNDSVDa; iterations are Lee-Seung multiplicative
//! updates. One iteration streams `X` exactly once: the pass that forms
//! `X H^T` for the `W` update also evaluates the exact residual and
//! accumulates `W^T X` for the next `H` update. With the `parallel`
//! feature the rows are split over the rayon pool; the split does not
//! depend on the thread count, so results are identical either way.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, truncated_svd, Matrix, SvdOptions};
use crate::window::WindowGrid;

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Denominator guard of the multiplicative updates.
pub const EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfOptions {
    pub max_iter: usize,
    /// Relative objective change that ends the iteration.
    pub tol: f64,
    pub epsilon: f64,
    pub svd: SvdOptions,
}

impl Default for NmfOptions {
    fn default() -> Self {
        NmfOptions {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            epsilon: EPSILON,
            svd: SvdOptions::default(),
        }
    }
}

/// Loadings `W` (windows x k) and factors `H` (k x bins).
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub w: Matrix,
    pub h: Matrix,
    /// `0.5 * ||X - W H||_F^2`, starting with the initial guess.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl Decomposition {
    pub fn k(&self) -> usize {
        self.h.rows()
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// `W H`, for tests and small problems.
    pub fn reconstruct(&self) -> Matrix {
        self.w.matmul(&self.h)
    }
}

fn check_input(x: &Matrix, k: usize) -> Result<()> {
    let bound = x.rows().min(x.cols());
    if k == 0 || k > bound {
        return Err(Error::param(
            "k",
            format!("must lie in 1..={bound} for a {}x{} matrix, got {k}", x.rows(), x.cols()),
        ));
    }
    if let Some(i) = x.as_slice().iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::param(
            "X",
            format!("entries must be finite and non-negative (index {i})"),
        ));
    }
    Ok(())
}

/// NNDSVDa initial guess: non-negative parts of the leading singular
/// triplets, with every zero entry replaced by the mean of `X`.
pub fn nndsvd_init(x: &Matrix, k: usize, svd_opts: &SvdOptions) -> Result<(Matrix, Matrix)> {
    check_input(x, k)?;
    let (n, d) = (x.rows(), x.cols());
    let svd = truncated_svd(x, None, k, svd_opts);
    let mut w = Matrix::zeros(n, k);
    let mut h = Matrix::zeros(k, d);

    for j in 0..svd.len() {
        let s = svd.sigma[j];
        let u = svd.left.row(j);
        let v = svd.right.row(j);
        let (scale, uu, vv) = if j == 0 {
            let ua: Vec<f64> = u.iter().map(|a| libm::fabs(*a)).collect();
            let va: Vec<f64> = v.iter().map(|a| libm::fabs(*a)).collect();
            (libm::sqrt(s), ua, va)
        } else {
            let (up, un) = split_signs(u);
            let (vp, vn) = split_signs(v);
            let (nup, nun, nvp, nvn) = (norm(&up), norm(&un), norm(&vp), norm(&vn));
            let (mp, mn) = (nup * nvp, nun * nvn);
            let (a, b, na, nb, m) = if mp > mn {
                (up, vp, nup, nvp, mp)
            } else {
                (un, vn, nun, nvn, mn)
            };
            let scale = libm::sqrt(s * m);
            (scale, unit(a, na), unit(b, nb))
        };
        for i in 0..n {
            w.set(i, j, scale * uu[i]);
        }
        for (dst, val) in h.row_mut(j).iter_mut().zip(&vv) {
            *dst = scale * val;
        }
    }

    let mean = x.as_slice().iter().sum::<f64>() / (n * d) as f64;
    for v in w.as_mut_slice().iter_mut().chain(h.as_mut_slice()) {
        if *v == 0.0 {
            *v = mean;
        }
    }
    Ok((w, h))
}

fn split_signs(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().map(|&a| if a > 0.0 { a } else { 0.0 }).collect(),
        v.iter().map(|&a| if a < 0.0 { -a } else { 0.0 }).collect(),
    )
}

fn unit(mut v: Vec<f64>, n: f64) -> Vec<f64> {
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    v
}

/// Factorizes `x` into `k` components starting from [`nndsvd_init`].
pub fn nmf_fit(x: &Matrix, k: usize, opts: &NmfOptions) -> Result<Decomposition> {
    let (w, h) = nndsvd_init(x, k, &opts.svd)?;
    nmf_from(x, w, h, opts)
}

/// Multiplicative updates from a given non-negative starting point.
pub fn nmf_from(x: &Matrix, mut w: Matrix, mut h: Matrix, opts: &NmfOptions) -> Result<Decomposition> {
    let k = h.rows();
    check_input(x, k)?;
    assert_eq!(w.rows(), x.rows());
    assert_eq!(w.cols(), k);
    assert_eq!(h.cols(), x.cols());
    let eps = opts.epsilon;
    let d = x.cols();

    let mut wtx = Matrix::zeros(k, d);
    let mut f = row_pass(x, &mut w, &h, None, eps, &mut wtx);
    check_finite(f, &w, &h, 0)?;
    let mut trace = vec![f];
    let mut converged = f == 0.0;
    let mut iterations_run = 0;

    while !converged && iterations_run < opts.max_iter {
        let it = iterations_run + 1;

        // H <- H * (W^T X) / (W^T W H + eps)
        let wtw = w.gram_cols();
        let den = wtw.matmul(&h);
        for ((hv, num), dv) in h
            .as_mut_slice()
            .iter_mut()
            .zip(wtx.as_slice())
            .zip(den.as_slice())
        {
            *hv *= num / (dv + eps);
        }

        // W <- W * (X H^T) / (W H H^T + eps), fused with the residual and
        // the next W^T X
        let hht = h.gram_rows();
        f = row_pass(x, &mut w, &h, Some(&hht), eps, &mut wtx);
        iterations_run = it;
        check_finite(f, &w, &h, it)?;
        debug_assert!(w.as_slice().iter().chain(h.as_slice()).all(|v| *v >= 0.0));

        let prev = *trace.last().unwrap();
        trace.push(f);
        if f == 0.0 || libm::fabs(prev - f) <= opts.tol * prev {
            converged = true;
        }
    }

    Ok(Decomposition {
        w,
        h,
        objective_trace: trace,
        iterations_run,
        converged,
    })
}

/// Columns handled together so the touched parts of `H` and `W^T X` stay
/// in cache.
const COL_BLOCK: usize = 512;
/// Rows are split into at most this many chunks, independent of the
/// thread count, so sums are formed in the same order everywhere.
const MAX_CHUNKS: usize = 32;
const MIN_CHUNK_ROWS: usize = 16;

/// Streams `X` once. With `hht` the rows of `w` get the multiplicative
/// update first. Returns `0.5 * ||X - W H||^2` for the resulting `w` and
/// overwrites `wtx` with `W^T X`.
fn row_pass(x: &Matrix, w: &mut Matrix, h: &Matrix, hht: Option<&Matrix>, eps: f64, wtx: &mut Matrix) -> f64 {
    let (n, k, d) = (x.rows(), h.rows(), x.cols());
    let rows_per = n.div_ceil(MAX_CHUNKS).max(MIN_CHUNK_ROWS);
    let chunk = |c: usize, wc: &mut [f64]| -> (f64, Matrix) {
        let mut part = Matrix::zeros(k, d);
        let mut scratch = RowScratch::new(k, d);
        let mut obj = 0.0;
        for (r, wr) in wc.chunks_exact_mut(k).enumerate() {
            let xr = x.row(c * rows_per + r);
            obj += scratch.row(xr, wr, h, hht, eps, &mut part);
        }
        (obj, part)
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, Matrix)> = {
        use rayon::prelude::*;
        w.as_mut_slice()
            .par_chunks_mut(rows_per * k)
            .enumerate()
            .map(|(c, wc)| chunk(c, wc))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, Matrix)> = w
        .as_mut_slice()
        .chunks_mut(rows_per * k)
        .enumerate()
        .map(|(c, wc)| chunk(c, wc))
        .collect();

    let mut parts = parts.into_iter();
    let (mut obj, first) = parts.next().expect("at least one row");
    *wtx = first;
    for (o, p) in parts {
        obj += o;
        for (a, b) in wtx.as_mut_slice().iter_mut().zip(p.as_slice()) {
            *a += b;
        }
    }
    0.5 * obj
}

struct RowScratch {
    xht: Vec<f64>,
    whh: Vec<f64>,
    resid: Vec<f64>,
}

impl RowScratch {
    fn new(k: usize, d: usize) -> Self {
        RowScratch {
            xht: vec![0.0; k],
            whh: vec![0.0; k],
            resid: vec![0.0; COL_BLOCK.min(d)],
        }
    }

    fn row(&mut self, xr: &[f64], wr: &mut [f64], h: &Matrix, hht: Option<&Matrix>, eps: f64, wtx: &mut Matrix) -> f64 {
        let (k, d) = (h.rows(), h.cols());
        if let Some(hht) = hht {
            self.xht.iter_mut().for_each(|v| *v = 0.0);
            for c0 in (0..d).step_by(COL_BLOCK) {
                let c1 = (c0 + COL_BLOCK).min(d);
                let xb = &xr[c0..c1];
                for (j, p) in self.xht.iter_mut().enumerate() {
                    *p += dot(xb, &h.row(j)[c0..c1]);
                }
            }
            for (j, q) in self.whh.iter_mut().enumerate() {
                *q = (0..k).map(|m| wr[m] * hht.get(m, j)).sum();
            }
            for j in 0..k {
                wr[j] *= self.xht[j] / (self.whh[j] + eps);
            }
        }
        let mut obj = 0.0;
        for c0 in (0..d).step_by(COL_BLOCK) {
            let c1 = (c0 + COL_BLOCK).min(d);
            let xb = &xr[c0..c1];
            let rb = &mut self.resid[..c1 - c0];
            rb.copy_from_slice(xb);
            for (j, &wj) in wr.iter().enumerate() {
                axpy(-wj, &h.row(j)[c0..c1], rb);
                axpy(wj, xb, &mut wtx.row_mut(j)[c0..c1]);
            }
            obj += dot(rb, rb);
        }
        obj
    }
}

fn check_finite(f: f64, w: &Matrix, h: &Matrix, iteration: usize) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::Numerical {
            iteration,
            reason: format!("objective became {f}"),
        });
    }
    if w.as_slice().iter().chain(h.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            iteration,
            reason: "non-finite entry in W or H".into(),
        });
    }
    Ok(())
}

/// Per-component energy `||W[:, j]||^2 * ||H[j, :]||^2`.
pub fn component_energies(dec: &Decomposition) -> Vec<f64> {
    (0..dec.k())
        .map(|j| {
            let wc: f64 = (0..dec.w.rows()).map(|i| dec.w.get(i, j) * dec.w.get(i, j)).sum();
            wc * dot(dec.h.row(j), dec.h.row(j))
        })
        .collect()
}

/// Sorts components by descending energy. Ties keep their order.
pub fn order_components(dec: Decomposition) -> Decomposition {
    let energy = component_energies(&dec);
    let mut order: Vec<usize> = (0..dec.k()).collect();
    order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]));
    let w = Matrix::from_fn(dec.w.rows(), dec.k(), |i, j| dec.w.get(i, order[j]));
    let mut h = Matrix::zeros(dec.k(), dec.h.cols());
    for (dst, &src) in order.iter().enumerate() {
        h.row_mut(dst).copy_from_slice(dec.h.row(src));
    }
    Decomposition { w, h, ..dec }
}

/// Loading maps (`ny x nx`) and factor spectra (`elemsize x elemsize`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentImages {
    pub maps: Vec<Matrix>,
    pub factors: Vec<Matrix>,
}

pub fn reshape_outputs(dec: &Decomposition, grid: &WindowGrid) -> Result<ComponentImages> {
    if dec.w.rows() != grid.n_windows() || dec.h.cols() != grid.dim() {
        return Err(Error::Geometry(format!(
            "decomposition is {}x{} / {}x{} but grid has {} windows of {} bins",
            dec.w.rows(),
            dec.w.cols(),
            dec.h.rows(),
            dec.h.cols(),
            grid.n_windows(),
            grid.dim()
        )));
    }
    let (nx, ny, e) = (grid.nx(), grid.ny(), grid.elemsize);
    let maps = (0..dec.k())
        .map(|j| Matrix::from_fn(ny, nx, |gy, gx| dec.w.get(gy * nx + gx, j)))
        .collect();
    let factors = (0..dec.k())
        .map(|j| Matrix::from_vec(e, e, dec.h.row(j).to_vec()))
        .collect();
    Ok(ComponentImages { maps, factors })
}

/// Inverse of [`reshape_outputs`].
pub fn flatten_outputs(images: &ComponentImages) -> (Matrix, Matrix) {
    let k = images.maps.len();
    let n = images.maps.first().map_or(0, |m| m.rows() * m.cols());
    let d = images.factors.first().map_or(0, |m| m.rows() * m.cols());
    let w = Matrix::from_fn(n, k, |i, j| images.maps[j].as_slice()[i]);
    let mut h = Matrix::zeros(k, d);
    for j in 0..k {
        h.row_mut(j).copy_from_slice(images.factors[j].as_slice());
    }
    (w, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::plan_grid;

    fn outer(a: &[f64], b: &[f64]) -> Matrix {
        Matrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        let mut diff = a.clone();
        for (x, y) in diff.as_mut_slice().iter_mut().zip(b.as_slice()) {
            *x -= y;
        }
        diff.frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn nndsvd_rank_one_is_exact() {
        let x = outer(&[1.0, 2.0, 0.5, 3.0], &[0.2, 1.0, 4.0, 0.7, 2.2]);
        let (w, h) = nndsvd_init(&x, 1, &SvdOptions::default()).unwrap();
        assert!(rel_err(&w.matmul(&h), &x) < 1e-8);
    }

    #[test]
    fn nndsvd_is_strictly_positive() {
        let x = Matrix::from_fn(6, 7, |i, j| ((i * 3 + j * 5) % 4) as f64);
        let (w, h) = nndsvd_init(&x, 3, &SvdOptions::default()).unwrap();
        assert!(w.as_slice().iter().chain(h.as_slice()).all(|v| *v > 0.0));
    }

    #[test]
    fn rejects_bad_k_and_negative_input() {
        let x = Matrix::from_fn(3, 4, |_, _| 1.0);
        assert!(nndsvd_init(&x, 0, &SvdOptions::default()).is_err());
        assert!(nndsvd_init(&x, 4, &SvdOptions::default()).is_err());
        let mut y = x.clone();
        y.set(0, 0, -1.0);
        assert!(nmf_fit(&y, 1, &NmfOptions::default()).is_err());
    }

    #[test]
    fn fit_rank_one_exact() {
        let x = outer(&[1.0, 2.0, 0.5, 3.0, 1.1], &[0.2, 1.0, 4.0, 0.7]);
        let dec = nmf_fit(&x, 1, &NmfOptions::default()).unwrap();
        assert!(rel_err(&dec.reconstruct(), &x) < 1e-6);
    }

    #[test]
    fn fit_exact_nonnegative_rank_two() {
        let w = Matrix::from_fn(20, 2, |i, j| if (i < 10) == (j == 0) { 1.0 + i as f64 * 0.1 } else { 0.05 });
        let h = Matrix::from_fn(2, 30, |j, c| if (c % 2 == 0) == (j == 0) { 2.0 } else { 0.1 * c as f64 / 30.0 });
        let x = w.matmul(&h);
        let opts = NmfOptions {
            max_iter: 2000,
            tol: 1e-10,
            ..Default::default()
        };
        let dec = nmf_fit(&x, 2, &opts).unwrap();
        assert!(rel_err(&dec.reconstruct(), &x) <= 1e-3);
    }

    #[test]
    fn objective_is_monotone() {
        let x = Matrix::from_fn(15, 25, |i, j| (((i * 7 + j * 13) % 17) as f64).sqrt());
        let dec = nmf_fit(&x, 3, &NmfOptions { tol: 0.0, max_iter: 100, ..Default::default() }).unwrap();
        assert_eq!(dec.iterations_run, 100);
        for p in dec.objective_trace.windows(2) {
            assert!(p[1] <= p[0] * (1.0 + 1e-10));
        }
    }

    #[test]
    fn ordering_by_energy() {
        let w = Matrix::from_vec(2, 2, vec![1.0, 1.0, 0.0, 2.0]);
        let h = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        // energies: col0 -> 1 * 1 = 1, col1 -> 5 * 1 = 5
        let dec = Decomposition {
            w: w.clone(),
            h: h.clone(),
            objective_trace: vec![0.0],
            iterations_run: 0,
            converged: true,
        };
        let before = dec.reconstruct();
        let sorted = order_components(dec);
        assert_eq!(sorted.w.column(0), vec![1.0, 2.0]);
        assert_eq!(sorted.h.row(0), &[0.0, 1.0]);
        assert_eq!(sorted.reconstruct(), before);
    }

    #[test]
    fn reshape_roundtrip() {
        let g = plan_grid(32, 32, 16, 16, 16).unwrap();
        let w = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let h = Matrix::from_fn(1, 256, |_, c| c as f64);
        let dec = Decomposition {
            w,
            h,
            objective_trace: vec![],
            iterations_run: 0,
            converged: false,
        };
        let out = reshape_outputs(&dec, &g).unwrap();
        assert_eq!(out.maps[0].as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((out.maps[0].rows(), out.maps[0].cols()), (2, 2));
        let (w2, h2) = flatten_outputs(&out);
        assert_eq!(w2, dec.w);
        assert_eq!(h2, dec.h);
        let bad = plan_grid(48, 32, 16, 16, 16).unwrap();
        assert!(reshape_outputs(&dec, &bad).is_err());
    }
}
