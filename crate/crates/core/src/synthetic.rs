//! Deterministic striped test images with known ground truth.

use core::f64::consts::PI;

use crate::error::Result;
use crate::image::GrayImage;
use crate::linalg::SplitMix64;

/// Stripe orientation: `Vertical` stripes vary along x, `Horizontal` along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stripes {
    Vertical,
    Horizontal,
}

/// One textured region `[x0, x1)` spanning the full image height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub x0: usize,
    pub x1: usize,
    pub period: f64,
    pub stripes: Stripes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripeScene<'a> {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub bands: &'a [Band],
}

impl StripeScene<'_> {
    pub fn render(&self) -> Result<GrayImage> {
        let mut noise = Gaussian::new(self.seed);
        GrayImage::from_fn(self.width, self.height, |x, y| {
            let mut v = self.background;
            if let Some(b) = self.bands.iter().find(|b| x >= b.x0 && x < b.x1) {
                let t = match b.stripes {
                    Stripes::Vertical => x,
                    Stripes::Horizontal => y,
                };
                v += self.amplitude * libm::cos(2.0 * PI * t as f64 / b.period);
            }
            if self.noise_sigma > 0.0 {
                v += self.noise_sigma * noise.sample();
            }
            v
        })
    }
}

/// Left half vertical stripes, right half horizontal stripes, both of
/// period 8, amplitude 100 about zero, and Gaussian noise of sigma 5.
pub fn two_texture(size: usize, seed: u64) -> Result<GrayImage> {
    let bands = [
        Band { x0: 0, x1: size / 2, period: 8.0, stripes: Stripes::Vertical },
        Band { x0: size / 2, x1: size, period: 8.0, stripes: Stripes::Horizontal },
    ];
    StripeScene {
        width: size,
        height: size,
        background: 0.0,
        amplitude: 100.0,
        noise_sigma: 5.0,
        seed,
        bands: &bands,
    }
    .render()
}

/// [`two_texture`] with a third band of period-24 vertical stripes on the
/// right; the image is split into thirds.
pub fn three_texture(size: usize, seed: u64) -> Result<GrayImage> {
    let third = size / 3;
    let bands = [
        Band { x0: 0, x1: third, period: 8.0, stripes: Stripes::Vertical },
        Band { x0: third, x1: 2 * third, period: 8.0, stripes: Stripes::Horizontal },
        Band { x0: 2 * third, x1: size, period: 24.0, stripes: Stripes::Vertical },
    ];
    StripeScene {
        width: size,
        height: size,
        background: 0.0,
        amplitude: 100.0,
        noise_sigma: 5.0,
        seed,
        bands: &bands,
    }
    .render()
}

/// Standard normal samples by Box-Muller over SplitMix64.
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Gaussian {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        let u1 = 0.5 * (self.rng.next_signed() + 1.0);
        let u2 = 0.5 * (self.rng.next_signed() + 1.0);
        let r = libm::sqrt(-2.0 * libm::log(1.0 - u1));
        let a = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(a));
        r * libm::cos(a)
    }
}
