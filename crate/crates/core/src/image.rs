//! Grayscale image container and the two pure transforms applied before
//! windowing: color-to-gray conversion and width rescaling.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rec. 709 luma weights for (r, g, b).
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Row-major grayscale image with real intensities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    pixel_size_nm: Option<f64>,
}

impl GrayImage {
    /// Builds an image, checking the length and finiteness invariants.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Geometry(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "data",
                format!("non-finite intensity at index {i}"),
            ));
        }
        Ok(GrayImage {
            width,
            height,
            data,
            pixel_size_nm: None,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn with_pixel_size(mut self, nm: Option<f64>) -> Result<Self> {
        if let Some(v) = nm {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param("pixel_size_nm", format!("must be positive, got {v}")));
            }
        }
        self.pixel_size_nm = nm;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel_size_nm(&self) -> Option<f64> {
        self.pixel_size_nm
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Multiplies every intensity by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        GrayImage {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

/// Rec. 709 luma. Written relative to the green channel so that equal
/// channels map back to exactly the same value.
#[inline]
pub fn to_grayscale(r: f64, g: f64, b: f64) -> f64 {
    g + LUMA_WEIGHTS[0] * (r - g) + LUMA_WEIGHTS[2] * (b - g)
}

/// Bilinear resample to `target_width`, preserving aspect ratio.
///
/// Sample centers are aligned (`src = (dst + 0.5) * scale - 0.5`) and
/// coordinates are clamped at the borders, so `target_width == width` is the
/// identity. The physical pixel size, when known, is rescaled so that the
/// physical extent stays the same.
pub fn rescale_width(img: &GrayImage, target_width: usize) -> Result<GrayImage> {
    if target_width < 2 {
        return Err(Error::param("target_width", format!("must be >= 2, got {target_width}")));
    }
    let ratio = target_width as f64 / img.width as f64;
    let out_h = libm::round(img.height as f64 * ratio) as usize;
    if out_h < 2 {
        return Err(Error::Geometry(format!(
            "rescaled height {out_h} is below 2 (input {}x{}, target width {target_width})",
            img.width, img.height
        )));
    }
    let xs = axis_taps(img.width, target_width);
    let ys = axis_taps(img.height, out_h);

    let mut data = Vec::with_capacity(target_width * out_h);
    for &(y0, y1, ty) in &ys {
        let r0 = &img.data[y0 * img.width..(y0 + 1) * img.width];
        let r1 = &img.data[y1 * img.width..(y1 + 1) * img.width];
        for &(x0, x1, tx) in &xs {
            let top = lerp(r0[x0], r0[x1], tx);
            let bottom = lerp(r1[x0], r1[x1], tx);
            data.push(lerp(top, bottom, ty));
        }
    }
    let pixel_size_nm = img
        .pixel_size_nm
        .map(|p| p * img.width as f64 / target_width as f64);
    Ok(GrayImage {
        width: target_width,
        height: out_h,
        data,
        pixel_size_nm,
    })
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// For each output index: the two source indices and the blend weight.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let max = (src_len - 1) as f64;
    (0..dst_len)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = libm::floor(s) as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(100.0, 100.0, 100.0), 100.0);
        assert!((to_grayscale(255.0, 0.0, 0.0) - 54.213).abs() < 1e-12);
        assert_eq!(to_grayscale(0.0, 0.0, 0.0), 0.0);
        assert_eq!(to_grayscale(255.0, 255.0, 255.0), 255.0);
    }

    #[test]
    fn luma_weights_sum_to_one() {
        assert_eq!(LUMA_WEIGHTS.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn rescale_doubles_dimensions() {
        let img = GrayImage::from_fn(1024, 512, |x, y| (x + y) as f64).unwrap();
        let out = rescale_width(&img, 2048).unwrap();
        assert_eq!((out.width(), out.height()), (2048, 1024));
    }

    #[test]
    fn rescale_preserves_constants() {
        let img = GrayImage::from_fn(37, 23, |_, _| 3.25).unwrap();
        for target in [4, 10, 37, 100] {
            let out = rescale_width(&img, target).unwrap();
            assert!(out.data().iter().all(|&v| v == 3.25));
        }
    }

    #[test]
    fn rescale_identity_when_width_matches() {
        let img = GrayImage::from_fn(13, 9, |x, y| (x * 31 + y * 7) as f64 * 0.5).unwrap();
        let out = rescale_width(&img, 13).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn rescale_updates_pixel_size() {
        let img = GrayImage::from_fn(1662, 4, |_, _| 1.0)
            .unwrap()
            .with_pixel_size(Some(1.805))
            .unwrap();
        let out = rescale_width(&img, 2048).unwrap();
        let ps = out.pixel_size_nm().unwrap();
        assert!((ps - 1.805 * 1662.0 / 2048.0).abs() < 1e-12);
        assert!((ps - 1.465).abs() < 1e-3);
        // cross-check: 3 um over 2048 px
        assert!((ps - 3000.0 / 2048.0).abs() < 2e-3);
    }

    #[test]
    fn rescale_rejects_degenerate_height() {
        let img = GrayImage::from_fn(100, 2, |_, _| 1.0).unwrap();
        assert!(matches!(rescale_width(&img, 10), Err(Error::Geometry(_))));
        assert!(rescale_width(&img, 1).is_err());
    }
}
