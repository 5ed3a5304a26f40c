//! The full in-memory analysis: grid, spectra, scree, NMF, peaks.

use alloc::vec::Vec;

use crate::characterize::{find_peak, PeakInfo, PeakOptions};
use crate::error::Error;
use crate::image::GrayImage;
use crate::nmf::{nmf_fit, order_components, reshape_outputs, ComponentImages, Decomposition, NmfOptions};
use crate::pca::{fit_pca_matrix, PcaOptions, ScreeData, DEFAULT_N_SCREE};
use crate::window::{build_dataset, plan_grid, WindowGrid};

pub const DEFAULT_ELEMSIZE: usize = 128;
pub const DEFAULT_STEP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub elemsize: usize,
    pub xstep: usize,
    pub ystep: usize,
    pub n_scree: usize,
    /// Overrides the scree-derived component count.
    pub components: Option<usize>,
    pub pca: PcaOptions,
    pub nmf: NmfOptions,
    pub peak: PeakOptions,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            elemsize: DEFAULT_ELEMSIZE,
            xstep: DEFAULT_STEP,
            ystep: DEFAULT_STEP,
            n_scree: DEFAULT_N_SCREE,
            components: None,
            pca: PcaOptions::default(),
            nmf: NmfOptions::default(),
            peak: PeakOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    Grid,
    Spectra,
    Pca,
    Nmf,
    Characterize,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Grid => "grid",
            Stage::Spectra => "spectra",
            Stage::Pca => "pca",
            Stage::Nmf => "nmf",
            Stage::Characterize => "characterize",
        }
    }
}

/// An error tagged with the stage that produced it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} stage failed: {error}", stage.name())]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub grid: WindowGrid,
    pub scree: ScreeData,
    pub k: usize,
    /// True when `k` came from `AnalysisParams::components`.
    pub k_explicit: bool,
    pub decomposition: Decomposition,
    /// `||X||_F` of the spectrum stack.
    pub data_norm: f64,
    pub images: ComponentImages,
    /// One entry per component, in component order.
    pub peaks: Vec<Result<PeakInfo, Error>>,
}

impl Analysis {
    /// `||X - W H||_F / ||X||_F` of the final factorization.
    pub fn relative_error(&self) -> f64 {
        if self.data_norm > 0.0 {
            libm::sqrt(2.0 * self.decomposition.final_objective()) / self.data_norm
        } else {
            0.0
        }
    }
}

/// Runs every stage, calling `on_stage` as each one starts.
pub fn analyze_with(img: &GrayImage, params: &AnalysisParams, mut on_stage: impl FnMut(Stage)) -> Result<Analysis, StageError> {
    let tag = |stage| move |error| StageError { stage, error };

    on_stage(Stage::Grid);
    let grid = plan_grid(img.width(), img.height(), params.elemsize, params.xstep, params.ystep)
        .map_err(tag(Stage::Grid))?;

    on_stage(Stage::Spectra);
    let stack = build_dataset(img, &grid).map_err(tag(Stage::Spectra))?;

    on_stage(Stage::Pca);
    let scree = fit_pca_matrix(&stack.matrix, params.n_scree, &params.pca).map_err(tag(Stage::Pca))?;

    on_stage(Stage::Nmf);
    let (k, k_explicit) = match params.components {
        Some(k) => (k, true),
        None => (scree.auto_k.k, false),
    };
    let dec = nmf_fit(&stack.matrix, k, &params.nmf).map_err(tag(Stage::Nmf))?;
    let data_norm = stack.matrix.frobenius_norm();
    drop(stack);
    let decomposition = order_components(dec);
    let images = reshape_outputs(&decomposition, &grid).map_err(tag(Stage::Nmf))?;

    on_stage(Stage::Characterize);
    let peaks = images.factors.iter().map(|f| find_peak(f, &params.peak)).collect();

    Ok(Analysis {
        grid,
        scree,
        k,
        k_explicit,
        decomposition,
        data_norm,
        images,
        peaks,
    })
}

pub fn analyze(img: &GrayImage, params: &AnalysisParams) -> Result<Analysis, StageError> {
    analyze_with(img, params, |_| {})
}
