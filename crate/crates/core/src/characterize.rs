//! Reading dominant spacing and orientation off factor spectra, and the
//! window-size sweep.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::linalg::Matrix;
use crate::pca::{fit_pca_matrix, PcaOptions};
use crate::window::{build_dataset, plan_grid};

pub const DEFAULT_DC_EXCLUSION: f64 = 3.0;
pub const DEFAULT_ISOTROPY_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Bins at or within this distance from the DC bin are ignored.
    pub dc_exclusion: f64,
    /// Annulus max/mean below this marks a ring-like (isotropic) pattern.
    pub isotropy_threshold: f64,
    pub pixel_size_nm: Option<f64>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            dc_exclusion: DEFAULT_DC_EXCLUSION,
            isotropy_threshold: DEFAULT_ISOTROPY_THRESHOLD,
            pixel_size_nm: None,
        }
    }
}

/// Dominant off-DC peak of a center-shifted spectrum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakInfo {
    /// Column and row offset of the peak bin from the DC bin.
    pub offset: (i64, i64),
    pub radius_bins: f64,
    /// Peak direction, degrees clockwise from horizontal (image rows grow
    /// downwards), folded into `[0, 180)`.
    pub angle_deg: f64,
    /// Real-space period in image pixels, `elemsize / radius_bins`.
    pub spacing_window_px: f64,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub spacing_nm: Option<f64>,
    pub peak_value: f64,
    /// Max over mean of the annulus through the peak.
    pub isotropy_ratio: f64,
    pub isotropic: bool,
}

/// Locates the strongest bin outside the DC exclusion disc.
///
/// Ties resolve to the first bin in row-major order. Antipodal bins of a
/// real spectrum share a value; folding the angle into `[0, 180)` makes both
/// report the same direction.
pub fn find_peak(factor: &Matrix, opts: &PeakOptions) -> Result<PeakInfo> {
    let side = factor.rows();
    if side != factor.cols() || side == 0 {
        return Err(Error::Geometry(format!(
            "factor must be square, got {}x{}",
            factor.rows(),
            factor.cols()
        )));
    }
    if !(opts.dc_exclusion >= 1.0) {
        return Err(Error::param("dc_exclusion", format!("must be >= 1, got {}", opts.dc_exclusion)));
    }
    let c = (side / 2) as i64;
    let mut best: Option<(i64, i64, f64)> = None;
    for r in 0..side {
        for col in 0..side {
            let (du, dv) = (col as i64 - c, r as i64 - c);
            let dist = libm::sqrt((du * du + dv * dv) as f64);
            if dist <= opts.dc_exclusion {
                continue;
            }
            let v = factor.get(r, col);
            if best.map_or(true, |(_, _, b)| v > b) {
                best = Some((du, dv, v));
            }
        }
    }
    let (du, dv, peak_value) = match best {
        Some(b) if b.2 > 0.0 => b,
        _ => {
            return Err(Error::DegenerateFactor(
                "no positive value outside the DC exclusion zone".into(),
            ))
        }
    };
    let radius_bins = libm::sqrt((du * du + dv * dv) as f64);
    let angle_deg = fold_angle(libm::atan2(dv as f64, du as f64).to_degrees());

    let (mut sum, mut count, mut max) = (0.0, 0usize, 0.0f64);
    for r in 0..side {
        for col in 0..side {
            let (u, v) = (col as i64 - c, r as i64 - c);
            let dist = libm::sqrt((u * u + v * v) as f64);
            if libm::fabs(dist - radius_bins) <= 0.5 {
                let x = factor.get(r, col);
                sum += x;
                count += 1;
                max = max.max(x);
            }
        }
    }
    let isotropy_ratio = max / (sum / count as f64);
    let spacing_window_px = side as f64 / radius_bins;
    Ok(PeakInfo {
        offset: (du, dv),
        radius_bins,
        angle_deg,
        spacing_window_px,
        spacing_nm: opts.pixel_size_nm.map(|p| physical_spacing(spacing_window_px, p)),
        peak_value,
        isotropy_ratio,
        isotropic: isotropy_ratio < opts.isotropy_threshold,
    })
}

fn fold_angle(deg: f64) -> f64 {
    let mut a = deg % 180.0;
    if a < 0.0 {
        a += 180.0;
    }
    if a >= 180.0 {
        a -= 180.0;
    }
    a
}

/// Spacing in nanometres from a spacing in pixels.
pub fn physical_spacing(spacing_window_px: f64, pixel_size_nm: f64) -> f64 {
    spacing_window_px * pixel_size_nm
}

/// One row of a window-size sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub elemsize: usize,
    pub n_windows: usize,
    pub auto_k: usize,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub elemsize: usize,
    pub outcome: Result<SweepRow>,
}

/// Runs grid planning, spectra and PCA for each window size. A failing size
/// is recorded and the sweep moves on.
pub fn sweep_elemsize(
    img: &GrayImage,
    sizes: &[usize],
    xstep: usize,
    ystep: usize,
    n_keep: usize,
    pca: &PcaOptions,
) -> Result<Vec<SweepEntry>> {
    for (i, s) in sizes.iter().enumerate() {
        if sizes[..i].contains(s) {
            return Err(Error::param("sizes", format!("duplicate window size {s}")));
        }
    }
    Ok(sizes
        .iter()
        .map(|&elemsize| SweepEntry {
            elemsize,
            outcome: sweep_one(img, elemsize, xstep, ystep, n_keep, pca),
        })
        .collect())
}

fn sweep_one(img: &GrayImage, elemsize: usize, xstep: usize, ystep: usize, n_keep: usize, pca: &PcaOptions) -> Result<SweepRow> {
    let grid = plan_grid(img.width(), img.height(), elemsize, xstep, ystep)?;
    let stack = build_dataset(img, &grid)?;
    let scree = fit_pca_matrix(&stack.matrix, n_keep, pca)?;
    Ok(SweepRow {
        elemsize,
        n_windows: grid.n_windows(),
        auto_k: scree.auto_k.k,
        candidates: scree.candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(side: usize, du: i64, dv: i64) -> Matrix {
        let c = (side / 2) as i64;
        let mut m = Matrix::zeros(side, side);
        m.set((c + dv) as usize, (c + du) as usize, 1.0);
        m.set((c - dv) as usize, (c - du) as usize, 1.0);
        m.set(c as usize, c as usize, 50.0);
        m
    }

    #[test]
    fn horizontal_impulse() {
        let p = find_peak(&impulse(128, 9, 0), &PeakOptions::default()).unwrap();
        assert_eq!(p.radius_bins, 9.0);
        assert_eq!(p.angle_deg, 0.0);
        assert!((p.spacing_window_px - 14.222).abs() < 1e-3);
        assert!(!p.isotropic);
    }

    #[test]
    fn diagonal_impulse() {
        let p = find_peak(&impulse(128, 5, 5), &PeakOptions::default()).unwrap();
        assert!((p.angle_deg - 45.0).abs() < 1e-12);
        assert!((p.radius_bins - 5.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ring_is_isotropic() {
        let side = 128;
        let c = 64.0;
        let m = Matrix::from_fn(side, side, |r, col| {
            let d = libm::sqrt((r as f64 - c).powi(2) + (col as f64 - c).powi(2));
            libm::exp(-(d - 28.0).powi(2) / 0.5)
        });
        let p = find_peak(&m, &PeakOptions::default()).unwrap();
        assert_eq!(p.radius_bins, 28.0);
        assert!(p.isotropic, "ratio {}", p.isotropy_ratio);
        assert!((p.spacing_window_px - 4.571).abs() < 1e-3);
    }

    #[test]
    fn zero_factor_is_degenerate() {
        let m = Matrix::zeros(16, 16);
        assert!(matches!(find_peak(&m, &PeakOptions::default()), Err(Error::DegenerateFactor(_))));
    }

    #[test]
    fn physical_spacing_examples() {
        let ps = 3000.0 / 1662.0;
        assert!((physical_spacing(128.0 / 18.0, ps) - 12.84).abs() < 0.01);
        assert!((physical_spacing(16.0, ps) - 28.9).abs() < 0.05);
        assert!((physical_spacing(128.0 / 11.0, ps) - 21.0).abs() < 0.05);
    }

    #[test]
    fn spacing_times_radius_is_elemsize() {
        for (du, dv) in [(3, 4), (7, 1), (10, -3), (0, 12)] {
            let p = find_peak(&impulse(64, du, dv), &PeakOptions::default()).unwrap();
            assert!((p.spacing_window_px * p.radius_bins - 64.0).abs() < 1e-12);
            assert!((0.0..180.0).contains(&p.angle_deg));
        }
    }

    #[test]
    fn duplicate_sizes_rejected() {
        let img = GrayImage::from_fn(32, 32, |x, _| x as f64).unwrap();
        assert!(sweep_elemsize(&img, &[16, 16], 8, 8, 5, &PcaOptions::default()).is_err());
    }

    #[test]
    fn oversized_row_fails_alone() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 3 + y * 5) % 7) as f64).unwrap();
        let rows = sweep_elemsize(&img, &[16, 128], 8, 8, 10, &PcaOptions::default()).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(matches!(rows[1].outcome, Err(Error::Geometry(_))));
    }
}
