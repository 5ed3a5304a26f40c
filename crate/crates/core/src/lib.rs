//! Local structure analysis of images from moving-window power spectra.
//!
//! An image is scanned by a square Hann-tapered window; the power spectrum of
//! every window becomes one row of a data matrix. PCA of that matrix gives a
//! scree plot whose elbow suggests a component count, and NMF splits the
//! matrix into spatial loading maps and characteristic spectra. The spectra
//! are then read for their dominant spacing and orientation.
//!
//! The crate is `no_std` with `alloc`. The `parallel` feature computes the
//! window spectra on the rayon pool; outputs are identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod characterize;
pub mod error;
pub mod fft;
pub mod image;
pub mod linalg;
pub mod nmf;
pub mod pca;
pub mod pipeline;
pub mod synthetic;
pub mod window;

pub use characterize::{find_peak, physical_spacing, sweep_elemsize, PeakInfo, PeakOptions, SweepEntry, SweepRow};
pub use error::{Error, Result};
pub use image::{rescale_width, to_grayscale, GrayImage};
pub use linalg::{Matrix, SvdOptions};
pub use nmf::{nmf_fit, nndsvd_init, order_components, reshape_outputs, ComponentImages, Decomposition, NmfOptions};
pub use pca::{auto_k, fit_pca, fit_pca_matrix, scree_candidates, AutoK, PcaOptions, ScreeData};
pub use pipeline::{analyze, analyze_with, Analysis, AnalysisParams, Stage, StageError};
pub use window::{build_dataset, hann2d, plan_grid, power_spectrum, Hann2d, Spectrum, SpectrumStack, WindowGrid};
