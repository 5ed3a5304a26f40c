//! Principal component analysis of the spectrum stack and scree-plot elbow
//! candidates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{truncated_svd, Matrix, SvdOptions};
use crate::window::SpectrumStack;

/// Default number of scree components.
pub const DEFAULT_N_SCREE: usize = 30;

/// Default tolerance, in decades, below which two scree gradients are a tie.
pub const DEFAULT_TIE_TOL: f64 = 0.5;

/// Result of a PCA fit together with the scree elbow analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeData {
    /// Explained-variance ratio per retained component, non-increasing.
    pub variance_ratio: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// Sum of squared centered entries; the denominator of every ratio.
    pub total_variance: f64,
    /// Column means of the data matrix.
    pub mean: Vec<f64>,
    /// Principal directions as orthonormal rows.
    pub axes: Matrix,
    /// Candidate component counts, ascending.
    pub candidates: Vec<usize>,
    pub auto_k: AutoK,
}

impl ScreeData {
    pub fn n_computed(&self) -> usize {
        self.variance_ratio.len()
    }
}

/// The component count picked from the scree plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AutoK {
    pub k: usize,
    /// Set when no elbow candidate was found and `k` fell back to 1.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaOptions {
    /// Three-point moving average of the log scree before differencing.
    pub smooth: bool,
    /// Gradients closer than this (in decades) compare as equal.
    pub tie_tol: f64,
    pub svd: SvdOptions,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            smooth: false,
            tie_tol: DEFAULT_TIE_TOL,
            svd: SvdOptions::default(),
        }
    }
}

/// Fits PCA with the default options.
pub fn fit_pca(stack: &SpectrumStack, n_keep: usize) -> Result<ScreeData> {
    fit_pca_matrix(&stack.matrix, n_keep, &PcaOptions::default())
}

/// PCA of the rows of `x`: columns are mean-centered and the leading
/// `n_keep` singular triplets of the centered matrix give the principal axes.
///
/// Ratios are `s_i^2 / ||X - mean||_F^2`, so they sum to one once every
/// nonzero component is retained. Each axis is signed so its largest
/// magnitude entry is positive.
pub fn fit_pca_matrix(x: &Matrix, n_keep: usize, opts: &PcaOptions) -> Result<ScreeData> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.rows(),
        });
    }
    if n_keep == 0 {
        return Err(Error::param("n_keep", "must be >= 1"));
    }
    let mean = x.column_means();
    let mut total_variance = 0.0;
    for i in 0..x.rows() {
        let mut acc = 0.0;
        for (v, m) in x.row(i).iter().zip(&mean) {
            let c = v - m;
            acc += c * c;
        }
        total_variance += acc;
    }

    let svd = truncated_svd(x, Some(&mean), n_keep, &opts.svd);
    let mut axes = svd.right;
    for j in 0..axes.rows() {
        let row = axes.row_mut(j);
        let lead = row
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if libm::fabs(v) > libm::fabs(best) { v } else { best });
        if lead < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let variance_ratio: Vec<f64> = if total_variance > 0.0 {
        svd.sigma.iter().map(|s| s * s / total_variance).collect()
    } else {
        Vec::new()
    };
    let candidates = candidates_from_ratios(&variance_ratio, opts);
    let auto_k = pick_k(&candidates);
    Ok(ScreeData {
        singular_values: svd.sigma,
        variance_ratio,
        total_variance,
        mean,
        axes,
        candidates,
        auto_k,
    })
}

/// Elbow candidates of a fitted scree (as stored in `scree.candidates`).
pub fn scree_candidates(scree: &ScreeData, opts: &PcaOptions) -> Vec<usize> {
    candidates_from_ratios(&scree.variance_ratio, opts)
}

pub fn candidates_from_ratios(ratios: &[f64], opts: &PcaOptions) -> Vec<usize> {
    let mut logs: Vec<f64> = ratios.iter().map(|&r| libm::log10(r)).collect();
    if opts.smooth {
        logs = moving_average3(&logs);
    }
    gradient_candidates(&logs, opts.tie_tol)
}

/// Local maxima of the first difference of a log scree.
///
/// With `g[j] = L[j+1] - L[j]` (1-based), component count `j` is a candidate
/// when `g[j] > g[j-1]` and `g[j] >= g[j+1]`. The first and last gaps have
/// only one neighbour and never qualify; a flat run of maxima reports its
/// first index only. Differences closer than `tie_tol` compare as equal.
pub fn gradient_candidates(logs: &[f64], tie_tol: f64) -> Vec<usize> {
    let m = logs.len();
    if m < 3 {
        return Vec::new();
    }
    let g: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    (1..g.len().saturating_sub(1))
        .filter(|&i| g[i] > g[i - 1] + tie_tol && g[i] >= g[i + 1] - tie_tol)
        .map(|i| i + 1)
        .collect()
}

fn moving_average3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Smallest candidate, or 1 with the fallback flag when there is none.
pub fn pick_k(candidates: &[usize]) -> AutoK {
    match candidates.first() {
        Some(&k) => AutoK { k, fallback: false },
        None => AutoK { k: 1, fallback: true },
    }
}

/// The default component count for a fitted scree.
pub fn auto_k(scree: &ScreeData) -> AutoK {
    pick_k(&scree.candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn candidate_examples() {
        assert_eq!(gradient_candidates(&[0.0, -1.0, -2.0, -3.0, -3.0, -3.0], DEFAULT_TIE_TOL), vec![4]);
        assert!(gradient_candidates(&[0.0, -1.0, -2.0, -3.0, -4.0, -5.0], DEFAULT_TIE_TOL).is_empty());
        assert_eq!(gradient_candidates(&[0.0, -2.0, -2.1, -4.0, -4.1, -4.2], DEFAULT_TIE_TOL), vec![2, 4]);
        assert!(gradient_candidates(&[0.0, -1.0], DEFAULT_TIE_TOL).is_empty());
    }

    #[test]
    fn examples_hold_without_tolerance() {
        let t = 1e-9;
        assert_eq!(gradient_candidates(&[0.0, -1.0, -2.0, -3.0, -3.0, -3.0], t), vec![4]);
        assert!(gradient_candidates(&[0.0, -1.0, -2.0, -3.0, -4.0, -5.0], t).is_empty());
        assert_eq!(gradient_candidates(&[0.0, -2.0, -2.1, -4.0, -4.1, -4.2], t), vec![2, 4]);
    }

    #[test]
    fn small_wiggles_in_the_floor_are_ignored() {
        let logs = [0.0, -1.8, -5.8, -6.1, -6.2, -6.2, -6.35, -6.3, -6.5, -6.55];
        assert_eq!(gradient_candidates(&logs, DEFAULT_TIE_TOL), vec![3]);
        assert_eq!(gradient_candidates(&logs, 1e-9)[0], 5);
    }

    #[test]
    fn geometric_ratios_have_no_candidates() {
        let ratios: Vec<f64> = (0..10).map(|i| 0.5f64.powi(i + 1)).collect();
        assert!(candidates_from_ratios(&ratios, &PcaOptions::default()).is_empty());
    }

    #[test]
    fn pick_k_rules() {
        assert_eq!(pick_k(&[4]), AutoK { k: 4, fallback: false });
        assert_eq!(pick_k(&[2, 4]), AutoK { k: 2, fallback: false });
        assert_eq!(pick_k(&[]), AutoK { k: 1, fallback: true });
    }

    #[test]
    fn rank_one_has_single_component() {
        let v = [1.0, 2.0, 0.5, 3.0, 0.0, 1.5];
        let scales = [1.0, 2.0, 3.5, 0.25, 7.0];
        let x = Matrix::from_fn(5, 6, |i, j| scales[i] * v[j]);
        let s = fit_pca_matrix(&x, 5, &PcaOptions::default()).unwrap();
        assert_eq!(s.n_computed(), 1);
        assert!((s.variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_direction_variances() {
        // rows +-2 e1 and +-1 e2: variances 4 and 1
        let x = Matrix::from_vec(
            4,
            3,
            vec![2.0, 0.0, 5.0, -2.0, 0.0, 5.0, 0.0, 1.0, 5.0, 0.0, -1.0, 5.0],
        );
        let s = fit_pca_matrix(&x, 3, &PcaOptions::default()).unwrap();
        assert_eq!(s.n_computed(), 2);
        assert!((s.variance_ratio[0] - 0.8).abs() < 1e-12);
        assert!((s.variance_ratio[1] - 0.2).abs() < 1e-12);
        assert!((s.axes.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((s.axes.get(1, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let x = Matrix::zeros(1, 4);
        assert!(matches!(
            fit_pca_matrix(&x, 1, &PcaOptions::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn smoothing_averages_neighbours() {
        let m = moving_average3(&[0.0, 3.0, 6.0, 0.0]);
        assert_eq!(m, vec![1.5, 3.0, 3.0, 3.0]);
    }
}
