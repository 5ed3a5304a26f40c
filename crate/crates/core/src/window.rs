//! Moving-window grid, Hann taper and per-window power spectra.
//!
//! Every window of the grid is tapered with a 2D Hann window, transformed
//! with an unnormalized 2D DFT and stored as the center-shifted squared
//! magnitude. The spectra of all windows are unfolded into the rows of a
//! [`SpectrumStack`], row `w = gy * nx + gx`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::image::GrayImage;
use crate::linalg::Matrix;

/// Smallest admissible window side.
pub const MIN_ELEMSIZE: usize = 8;

/// Window origins and geometry of the moving window.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowGrid {
    pub elemsize: usize,
    pub xstep: usize,
    pub ystep: usize,
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    /// Image dimensions the grid was planned against.
    pub width: usize,
    pub height: usize,
}

impl WindowGrid {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn n_windows(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Number of spectral bins per window.
    pub fn dim(&self) -> usize {
        self.elemsize * self.elemsize
    }

    /// Origin `(x, y)` of the window stored in row `w`.
    pub fn origin(&self, w: usize) -> (usize, usize) {
        (self.xs[w % self.nx()], self.ys[w / self.nx()])
    }
}

fn axis_origins(len: usize, elemsize: usize, step: usize) -> Vec<usize> {
    let last = len - elemsize;
    let mut v: Vec<usize> = (0..=last).step_by(step).collect();
    if v.last() != Some(&last) {
        v.push(last);
    }
    v
}

/// Plans the window origins for an image of `width x height`.
///
/// Origins advance by the step and a final origin flush with the far border
/// is appended when the steps do not land on it, so every pixel is covered
/// by at least one fully contained window.
pub fn plan_grid(width: usize, height: usize, elemsize: usize, xstep: usize, ystep: usize) -> Result<WindowGrid> {
    if elemsize < MIN_ELEMSIZE {
        return Err(Error::param(
            "elemsize",
            format!("must be >= {MIN_ELEMSIZE}, got {elemsize}"),
        ));
    }
    if xstep == 0 {
        return Err(Error::param("xstep", "must be >= 1"));
    }
    if ystep == 0 {
        return Err(Error::param("ystep", "must be >= 1"));
    }
    if elemsize > width {
        return Err(Error::Geometry(format!(
            "elemsize {elemsize} exceeds image width {width}"
        )));
    }
    if elemsize > height {
        return Err(Error::Geometry(format!(
            "elemsize {elemsize} exceeds image height {height}"
        )));
    }
    Ok(WindowGrid {
        elemsize,
        xstep,
        ystep,
        xs: axis_origins(width, elemsize, xstep),
        ys: axis_origins(height, elemsize, ystep),
        width,
        height,
    })
}

/// Separable 2D symmetric Hann window.
#[derive(Debug, Clone, PartialEq)]
pub struct Hann2d {
    side: usize,
    values: Vec<f64>,
}

impl Hann2d {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Row-major `side x side` weights.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Symmetric 1D Hann vector `0.5 * (1 - cos(2*pi*i/(n-1)))`.
pub fn hann1d(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("n", format!("Hann window needs n >= 2, got {n}")));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            // endpoints are pinned so borders are exactly zero
            if i == 0 || i == n - 1 {
                0.0
            } else {
                0.5 * (1.0 - libm::cos(2.0 * PI * i as f64 / denom))
            }
        })
        .collect())
}

/// Outer product of the symmetric Hann vector with itself.
pub fn hann2d(n: usize) -> Result<Hann2d> {
    let w = hann1d(n)?;
    let mut values = Vec::with_capacity(n * n);
    for &wy in &w {
        for &wx in &w {
            values.push(wy * wx);
        }
    }
    Ok(Hann2d { side: n, values })
}

/// Center-shifted power spectrum of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub side: usize,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Index of the DC bin along either axis.
    pub fn center(&self) -> usize {
        self.side / 2
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }
}

/// Reusable FFT plan, window and buffers for computing power spectra of one
/// window size. Cloning gives an independent workspace sharing nothing
/// mutable.
#[derive(Debug, Clone)]
pub struct SpectrumEngine {
    fft: Fft2d,
    window: Hann2d,
    buf: Vec<Complex64>,
    column: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectrumEngine {
    pub fn new(side: usize) -> Result<Self> {
        let window = hann2d(side)?;
        Ok(Self::with_window(window))
    }

    pub fn with_window(window: Hann2d) -> Self {
        let side = window.side;
        let fft = Fft2d::new(side);
        let zero = Complex64::new(0.0, 0.0);
        SpectrumEngine {
            scratch: vec![zero; fft.scratch_len()],
            buf: vec![zero; side * side],
            column: vec![zero; side],
            fft,
            window,
        }
    }

    pub fn side(&self) -> usize {
        self.window.side
    }

    pub fn window(&self) -> &Hann2d {
        &self.window
    }

    /// Writes the power spectrum of the window whose pixel `(x, y)` is
    /// `pixel(x, y)` into `out` (length `side^2`).
    pub fn compute_into(&mut self, mut pixel: impl FnMut(usize, usize) -> f64, out: &mut [f64]) {
        let n = self.side();
        assert_eq!(out.len(), n * n);
        for y in 0..n {
            for x in 0..n {
                let i = y * n + x;
                self.buf[i] = Complex64::new(pixel(x, y) * self.window.values[i], 0.0);
            }
        }
        self.fft.forward(&mut self.buf, &mut self.column, &mut self.scratch);
        // shifted[i] = F[(i + n - n/2) % n] on both axes
        let shift = n - n / 2;
        for r in 0..n {
            let src_r = (r + shift) % n;
            for c in 0..n {
                let src_c = (c + shift) % n;
                out[r * n + c] = self.buf[src_r * n + src_c].norm_sqr();
            }
        }
    }
}

/// Power spectrum of a single `side x side` region, tapered by `window`.
pub fn power_spectrum(roi: &[f64], window: &Hann2d) -> Spectrum {
    let n = window.side;
    assert_eq!(roi.len(), n * n, "roi and window sides differ");
    let mut engine = SpectrumEngine::with_window(window.clone());
    let mut values = vec![0.0; n * n];
    engine.compute_into(|x, y| roi[y * n + x], &mut values);
    Spectrum { side: n, values }
}

/// The unfolded 4D dataset: one spectrum per window, one window per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumStack {
    pub grid: WindowGrid,
    pub matrix: Matrix,
}

impl SpectrumStack {
    pub fn n_windows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Spectrum of row `w`.
    pub fn spectrum(&self, w: usize) -> Spectrum {
        Spectrum {
            side: self.grid.elemsize,
            values: self.matrix.row(w).to_vec(),
        }
    }
}

/// Computes the power spectrum of every window of `grid`.
///
/// With the `parallel` feature the windows are distributed over the rayon
/// pool; each row is written independently, so output is identical to the
/// sequential path.
pub fn build_dataset(img: &GrayImage, grid: &WindowGrid) -> Result<SpectrumStack> {
    if grid.width != img.width() || grid.height != img.height() {
        return Err(Error::Geometry(format!(
            "grid planned for {}x{} but image is {}x{}",
            grid.width,
            grid.height,
            img.width(),
            img.height()
        )));
    }
    let d = grid.dim();
    let n = grid.n_windows();
    let mut matrix = Matrix::zeros(n, d);
    let engine = SpectrumEngine::new(grid.elemsize)?;

    let fill = |engine: &mut SpectrumEngine, w: usize, row: &mut [f64]| {
        let (ox, oy) = grid.origin(w);
        engine.compute_into(|x, y| img.get(ox + x, oy + y), row);
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        matrix
            .as_mut_slice()
            .par_chunks_mut(d)
            .enumerate()
            .for_each_init(|| engine.clone(), |eng, (w, row)| fill(eng, w, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut engine = engine;
        for (w, row) in matrix.as_mut_slice().chunks_mut(d).enumerate() {
            fill(&mut engine, w, row);
        }
    }

    Ok(SpectrumStack {
        grid: grid.clone(),
        matrix,
    })
}
