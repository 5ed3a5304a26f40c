#![allow(dead_code)]

use nalgebra::DMatrix;
use texmap_core::linalg::SplitMix64;
use texmap_core::Matrix;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64, nonneg: bool) -> Matrix {
    let mut rng = SplitMix64::new(seed);
    Matrix::from_fn(rows, cols, |_, _| {
        let v = rng.next_signed();
        if nonneg {
            0.5 * (v + 1.0)
        } else {
            v
        }
    })
}

/// Direct O(n^4) center-shifted power spectrum of a Hann-tapered square ROI.
pub fn naive_power_spectrum(roi: &[f64], side: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let hann: Vec<f64> = (0..side)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (side - 1) as f64).cos())
        .collect();
    let mut out = vec![0.0; side * side];
    let half = side / 2;
    for ky in 0..side {
        for kx in 0..side {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..side {
                for x in 0..side {
                    let v = roi[y * side + x] * hann[y] * hann[x];
                    let ph = -2.0 * PI * ((kx * x) as f64 / side as f64 + (ky * y) as f64 / side as f64);
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
            }
            let sy = (ky + half) % side;
            let sx = (kx + half) % side;
            out[sy * side + sx] = re * re + im * im;
        }
    }
    out
}

/// Plain matrix-form multiplicative updates.
pub fn naive_mu(x: &DMatrix<f64>, mut w: DMatrix<f64>, mut h: DMatrix<f64>, iters: usize) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let eps = 1e-12;
    let obj = |w: &DMatrix<f64>, h: &DMatrix<f64>| 0.5 * (x - w * h).norm_squared();
    let mut trace = vec![obj(&w, &h)];
    for _ in 0..iters {
        let num = w.transpose() * x;
        let den = w.transpose() * &w * &h;
        h.zip_zip_apply(&num, &den, |hv, n, d| *hv *= n / (d + eps));
        let num = x * h.transpose();
        let den = &w * &h * h.transpose();
        w.zip_zip_apply(&num, &den, |wv, n, d| *wv *= n / (d + eps));
        trace.push(obj(&w, &h));
    }
    (w, h, trace)
}

/// NNDSVDa from a full nalgebra SVD.
pub fn naive_nndsvd(x: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let svd = x.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let (n, d) = x.shape();
    let mut w = DMatrix::zeros(n, k);
    let mut h = DMatrix::zeros(k, d);
    for j in 0..k {
        let s = svd.singular_values[order[j]];
        let uc: Vec<f64> = u.column(order[j]).iter().copied().collect();
        let vr: Vec<f64> = vt.row(order[j]).iter().copied().collect();
        let (scale, a, b) = if j == 0 {
            (s.sqrt(), uc.iter().map(|v| v.abs()).collect::<Vec<_>>(), vr.iter().map(|v| v.abs()).collect::<Vec<_>>())
        } else {
            let pos = |v: &[f64]| v.iter().map(|a| a.max(0.0)).collect::<Vec<_>>();
            let neg = |v: &[f64]| v.iter().map(|a| (-a).max(0.0)).collect::<Vec<_>>();
            let nrm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let (up, un, vp, vn) = (pos(&uc), neg(&uc), pos(&vr), neg(&vr));
            let (mp, mn) = (nrm(&up) * nrm(&vp), nrm(&un) * nrm(&vn));
            let (a, b, m) = if mp > mn { (up, vp, mp) } else { (un, vn, mn) };
            let (na, nb) = (nrm(&a), nrm(&b));
            (
                (s * m).sqrt(),
                a.iter().map(|v| v / na).collect(),
                b.iter().map(|v| v / nb).collect(),
            )
        };
        for i in 0..n {
            w[(i, j)] = scale * a[i];
        }
        for c in 0..d {
            h[(j, c)] = scale * b[c];
        }
    }
    let mean = x.mean();
    w.apply(|v| {
        if *v == 0.0 {
            *v = mean
        }
    });
    h.apply(|v| {
        if *v == 0.0 {
            *v = mean
        }
    });
    (w, h)
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
