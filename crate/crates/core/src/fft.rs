//! In-place complex FFT for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other length
//! goes through Bluestein's chirp-z reformulation on top of it. Forward
//! transforms are unnormalized: `X[k] = sum_n x[n] exp(-2*pi*i*k*n/N)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// A reusable plan for one transform length. Plans are immutable after
/// construction and can be shared between threads.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: PlanKind,
}

#[derive(Debug, Clone)]
enum PlanKind {
    Trivial,
    Radix2(Radix2),
    Bluestein {
        inner: Radix2,
        chirp: Vec<Complex64>,
        // FFT of the zero-padded conjugate chirp, length inner.len
        kernel: Vec<Complex64>,
    },
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Radix2 { len, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    fn inverse_unscaled(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        debug_assert_eq!(buf.len(), n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let kind = if len <= 1 {
            PlanKind::Trivial
        } else if len.is_power_of_two() {
            PlanKind::Radix2(Radix2::new(len))
        } else {
            let m = (2 * len - 1).next_power_of_two();
            let inner = Radix2::new(m);
            // chirp[n] = exp(-i*pi*n^2/N); n^2 reduced mod 2N keeps the angle small
            let chirp: Vec<Complex64> = (0..len)
                .map(|n| {
                    let sq = (n as u128 * n as u128 % (2 * len as u128)) as f64;
                    let a = -PI * sq / len as f64;
                    Complex64::new(libm::cos(a), libm::sin(a))
                })
                .collect();
            let mut kernel = vec![Complex64::new(0.0, 0.0); m];
            kernel[0] = chirp[0].conj();
            for n in 1..len {
                kernel[n] = chirp[n].conj();
                kernel[m - n] = chirp[n].conj();
            }
            inner.forward(&mut kernel);
            PlanKind::Bluestein {
                inner,
                chirp,
                kernel,
            }
        };
        FftPlan { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Scratch length required by [`FftPlan::forward_with_scratch`].
    pub fn scratch_len(&self) -> usize {
        match &self.kind {
            PlanKind::Bluestein { inner, .. } => inner.len,
            _ => 0,
        }
    }

    /// Forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.forward_with_scratch(buf, &mut scratch);
    }

    pub fn forward_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            PlanKind::Trivial => {}
            PlanKind::Radix2(r) => r.forward(buf),
            PlanKind::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let m = inner.len;
                let scratch = &mut scratch[..m];
                for (s, (x, c)) in scratch.iter_mut().zip(buf.iter().zip(chirp)) {
                    *s = x * c;
                }
                for s in scratch[self.len..].iter_mut() {
                    *s = Complex64::new(0.0, 0.0);
                }
                inner.forward(scratch);
                for (s, k) in scratch.iter_mut().zip(kernel) {
                    *s *= k;
                }
                inner.inverse_unscaled(scratch);
                let scale = 1.0 / m as f64;
                for (x, (s, c)) in buf.iter_mut().zip(scratch.iter().zip(chirp)) {
                    *x = s * c * scale;
                }
            }
        }
    }
}

/// Square 2D transform built from one 1D plan, rows first then columns.
#[derive(Debug, Clone)]
pub struct Fft2d {
    plan: FftPlan,
}

impl Fft2d {
    pub fn new(side: usize) -> Self {
        Fft2d {
            plan: FftPlan::new(side),
        }
    }

    pub fn side(&self) -> usize {
        self.plan.len()
    }

    /// Forward 2D transform of a row-major `side x side` buffer in place.
    /// `column` must hold `side` elements and `scratch` at least
    /// [`FftPlan::scratch_len`] elements.
    pub fn forward(&self, data: &mut [Complex64], column: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.side();
        assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            self.plan.forward_with_scratch(row, scratch);
        }
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            self.plan.forward_with_scratch(&mut column[..n], scratch);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.plan.scratch_len()
    }
}
