//! 3D complex FFT assembled from 1D passes with layout rotations.
//!
//! A forward transform runs pass-rotate-pass-rotate-pass and leaves the
//! spectrum in rotated layout (y, z, x); the inverse undoes it and returns
//! to (x, y, z). Keeping the spectrum rotated saves two transposes per
//! round trip; all multiplier code indexes the rotated layout through
//! [`SpectralLayout`].

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub type C64 = Complex<f64>;

pub struct Fft3 {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Index helper for the rotated spectral layout (y, z, x).
#[derive(Debug, Clone, Copy)]
pub struct SpectralLayout {
    pub n: usize,
}

impl SpectralLayout {
    /// Flat index of spectral mode (mx, my, mz).
    #[inline]
    pub fn idx(&self, mx: usize, my: usize, mz: usize) -> usize {
        (my * self.n + mz) * self.n + mx
    }

    /// Mode numbers (mx, my, mz) of a flat index.
    #[inline]
    pub fn modes(&self, flat: usize) -> (usize, usize, usize) {
        let mx = flat % self.n;
        let rest = flat / self.n;
        (mx, rest / self.n, rest % self.n)
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn layout(&self) -> SpectralLayout {
        SpectralLayout { n: self.n }
    }

    fn pass(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>, scale: Option<f64>) {
        let n = self.n;
        let scratch_len = plan.get_inplace_scratch_len();
        data.par_chunks_mut(n)
            .for_each_init(
                || vec![C64::default(); scratch_len],
                |scratch, line| {
                    plan.process_with_scratch(line, scratch);
                    if let Some(s) = scale {
                        for v in line.iter_mut() {
                            *v *= s;
                        }
                    }
                },
            );
    }

    /// Rotate layout (a, b, c) -> (c, a, b).
    fn rotate_fwd(&self, data: &[C64], out: &mut [C64]) {
        let n = self.n;
        out.par_chunks_mut(n * n).enumerate().for_each(|(c, slab)| {
            for a in 0..n {
                let base_in = a * n * n + c;
                for b in 0..n {
                    slab[a * n + b] = data[base_in + b * n];
                }
            }
        });
    }

    /// Rotate layout (a, b, c) -> (b, c, a).
    fn rotate_bwd(&self, data: &[C64], out: &mut [C64]) {
        let n = self.n;
        out.par_chunks_mut(n * n).enumerate().for_each(|(b, slab)| {
            for c in 0..n {
                let base_in = b * n + c;
                for a in 0..n {
                    slab[c * n + a] = data[a * n * n + base_in];
                }
            }
        });
    }

    /// In-place forward 3D DFT. Input layout (x, y, z); output layout
    /// (y, z, x). `scratch` must have the same length as `data`.
    pub fn forward(&self, data: &mut Vec<C64>, scratch: &mut Vec<C64>) {
        debug_assert_eq!(data.len(), self.n * self.n * self.n);
        debug_assert_eq!(scratch.len(), data.len());
        self.pass(data, &self.fwd, None);
        self.rotate_fwd(data, scratch);
        std::mem::swap(data, scratch);
        self.pass(data, &self.fwd, None);
        self.rotate_fwd(data, scratch);
        std::mem::swap(data, scratch);
        self.pass(data, &self.fwd, None);
    }

    /// In-place inverse 3D DFT with 1/n^3 normalization. Input layout
    /// (y, z, x); output layout (x, y, z).
    pub fn inverse(&self, data: &mut Vec<C64>, scratch: &mut Vec<C64>) {
        debug_assert_eq!(data.len(), self.n * self.n * self.n);
        let norm = 1.0 / (self.n as f64).powi(3);
        self.pass(data, &self.inv, None);
        self.rotate_bwd(data, scratch);
        std::mem::swap(data, scratch);
        self.pass(data, &self.inv, None);
        self.rotate_bwd(data, scratch);
        std::mem::swap(data, scratch);
        self.pass(data, &self.inv, Some(norm));
    }
}
