//! Spectral machinery on the zero-padded grid: wavenumber tables,
//! pad/crop, Fourier differentiation, the divergence-free projection
//! multiplier, and the mean-free inverse Laplacian.
//!
//! Free-space operations pad the unpadded box to twice its extent, work on
//! the padded torus, and crop back; compactly supported data sees no
//! periodic images there. Data that is genuinely periodic on the unpadded
//! box (sub-tests) runs the same multipliers unpadded via
//! [`Boundary::Periodic`].

use crate::fft::{C64, Fft3};
use crate::grid::GridField;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero-pad to the doubled box, transform, crop back.
    FreeSpace,
    /// Treat the unpadded box as a torus.
    Periodic,
}

/// Wavenumber table for a periodic box with `n` nodes and period `period`.
#[derive(Debug, Clone)]
pub struct WaveTable {
    /// Signed wavenumber per mode index (Nyquist counted negative).
    pub k: Vec<f64>,
    /// Wavenumbers for odd-order symbols: Nyquist zeroed so derivatives of
    /// real fields stay real.
    pub k_deriv: Vec<f64>,
}

impl WaveTable {
    pub fn new(n: usize, period: f64) -> Self {
        let base = 2.0 * PI / period;
        let mut k = vec![0.0; n];
        let mut k_deriv = vec![0.0; n];
        for m in 0..n {
            let signed = if m < n / 2 {
                m as f64
            } else {
                m as f64 - n as f64
            };
            k[m] = base * signed;
            k_deriv[m] = if n % 2 == 0 && m == n / 2 { 0.0 } else { base * signed };
        }
        WaveTable { k, k_deriv }
    }
}

/// Transform context for one torus: FFT plans plus wavenumbers. Spectra
/// produced here live in the rotated layout (y, z, x) of [`Fft3`].
pub struct SpectralSpace {
    /// Nodes per axis of the torus this space transforms.
    pub n: usize,
    /// Nodes per axis of the unpadded grid it serves.
    pub n_grid: usize,
    /// Period of the torus.
    pub period: f64,
    pub waves: WaveTable,
    fft: Fft3,
}

impl SpectralSpace {
    /// Space for free-space work on grids of `n_grid` nodes and half-extent
    /// `extent`: the torus is the grid doubled along each axis.
    pub fn padded(n_grid: usize, extent: f64) -> Self {
        let n = 2 * n_grid;
        let period = 4.0 * extent;
        SpectralSpace {
            n,
            n_grid,
            period,
            waves: WaveTable::new(n, period),
            fft: Fft3::new(n),
        }
    }

    /// Space for periodic work directly on the unpadded grid.
    pub fn periodic(n_grid: usize, extent: f64) -> Self {
        let period = 2.0 * extent;
        SpectralSpace {
            n: n_grid,
            n_grid,
            period,
            waves: WaveTable::new(n_grid, period),
            fft: Fft3::new(n_grid),
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::default(); self.len()]
    }

    /// Forward transform of one component, zero-padding when the torus is
    /// larger than the grid.
    pub fn forward_component(&self, field: &GridField, comp: usize, scratch: &mut Vec<C64>) -> Vec<C64> {
        let ng = field.n;
        debug_assert_eq!(ng, self.n_grid);
        let n = self.n;
        let src = field.comp(comp);
        let mut buf = vec![C64::default(); self.len()];
        buf.par_chunks_mut(n * n)
            .take(ng)
            .enumerate()
            .for_each(|(i, slab)| {
                for j in 0..ng {
                    let row = &src[(i * ng + j) * ng..(i * ng + j) * ng + ng];
                    let out = &mut slab[j * n..j * n + ng];
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o = C64::new(v, 0.0);
                    }
                }
            });
        self.fft.forward(&mut buf, scratch);
        buf
    }

    /// Inverse transform, cropping back to the unpadded grid and writing
    /// the real part into `field` component `comp`.
    pub fn inverse_into(
        &self,
        mut hat: Vec<C64>,
        field: &mut GridField,
        comp: usize,
        scratch: &mut Vec<C64>,
    ) {
        let ng = field.n;
        debug_assert_eq!(ng, self.n_grid);
        let n = self.n;
        self.fft.inverse(&mut hat, scratch);
        let dst = field.comp_mut(comp);
        dst.par_chunks_mut(ng * ng).enumerate().for_each(|(i, slab)| {
            for j in 0..ng {
                for k in 0..ng {
                    slab[j * ng + k] = hat[(i * n + j) * n + k].re;
                }
            }
        });
    }

    /// Maximum magnitude of the real part over the unpadded region, without
    /// materializing the cropped field.
    pub fn inverse_sup(&self, mut hat: Vec<C64>, scratch: &mut Vec<C64>) -> f64 {
        let n = self.n;
        let ng = self.n_grid;
        self.fft.inverse(&mut hat, scratch);
        (0..ng)
            .into_par_iter()
            .map(|i| {
                let mut best = 0.0f64;
                for j in 0..ng {
                    for k in 0..ng {
                        best = best.max(hat[(i * n + j) * n + k].re.abs());
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Apply a scalar spectral symbol in place: data[m] *= f(kx, ky, kz).
    pub fn apply_symbol<F: Fn(f64, f64, f64) -> f64 + Sync>(&self, hat: &mut [C64], f: F) {
        let n = self.n;
        let k = &self.waves.k;
        hat.par_chunks_mut(n).enumerate().for_each(|(line, chunk)| {
            // layout (y, z, x): line = my * n + mz, inner index = mx
            let ky = k[line / n];
            let kz = k[line % n];
            for (mx, v) in chunk.iter_mut().enumerate() {
                *v *= f(k[mx], ky, kz);
            }
        });
    }

    /// Multiply by i * k_axis (spectral derivative along one axis).
    pub fn derivative(&self, hat: &[C64], axis: usize) -> Vec<C64> {
        let n = self.n;
        let kd = &self.waves.k_deriv;
        let mut out = vec![C64::default(); hat.len()];
        out.par_chunks_mut(n)
            .zip(hat.par_chunks(n))
            .enumerate()
            .for_each(|(line, (dst, src))| {
                let ky = kd[line / n];
                let kz = kd[line % n];
                for (mx, (d, s)) in dst.iter_mut().zip(src).enumerate() {
                    let ka = match axis {
                        0 => kd[mx],
                        1 => ky,
                        _ => kz,
                    };
                    *d = C64::new(-s.im * ka, s.re * ka);
                }
            });
        out
    }

    /// Spectral divergence i k . F of a vector spectrum.
    pub fn divergence_spectrum(&self, hats: &[Vec<C64>; 3]) -> Vec<C64> {
        let n = self.n;
        let kd = &self.waves.k_deriv;
        let mut out = vec![C64::default(); hats[0].len()];
        out.par_chunks_mut(n).enumerate().for_each(|(line, dst)| {
            let ky = kd[line / n];
            let kz = kd[line % n];
            let base = line * n;
            for (mx, d) in dst.iter_mut().enumerate() {
                let kx = kd[mx];
                let s = hats[0][base + mx] * kx + hats[1][base + mx] * ky + hats[2][base + mx] * kz;
                *d = C64::new(-s.im, s.re);
            }
        });
        out
    }

    /// Spectral curl i k x F of a vector spectrum.
    pub fn curl_spectrum(&self, hats: &[Vec<C64>; 3]) -> [Vec<C64>; 3] {
        let n = self.n;
        let kd = &self.waves.k_deriv;
        let mut out = [
            vec![C64::default(); hats[0].len()],
            vec![C64::default(); hats[0].len()],
            vec![C64::default(); hats[0].len()],
        ];
        let (o0, rest) = out.split_at_mut(1);
        let (o1, o2) = rest.split_at_mut(1);
        o0[0]
            .par_chunks_mut(n)
            .zip(o1[0].par_chunks_mut(n))
            .zip(o2[0].par_chunks_mut(n))
            .enumerate()
            .for_each(|(line, ((c0, c1), c2))| {
                let ky = kd[line / n];
                let kz = kd[line % n];
                let base = line * n;
                for mx in 0..n {
                    let kx = kd[mx];
                    let f = [hats[0][base + mx], hats[1][base + mx], hats[2][base + mx]];
                    // i (k x F)
                    let r0 = f[2] * ky - f[1] * kz;
                    let r1 = f[0] * kz - f[2] * kx;
                    let r2 = f[1] * kx - f[0] * ky;
                    c0[mx] = C64::new(-r0.im, r0.re);
                    c1[mx] = C64::new(-r1.im, r1.re);
                    c2[mx] = C64::new(-r2.im, r2.re);
                }
            });
        out
    }

    /// Divergence-free projection multiplier I - k (x) k / |k|^2, identity
    /// on the mean mode. Uses the derivative wavenumbers (Nyquist zeroed)
    /// so that div, grad, curl and P share one operator algebra; div P F
    /// then cancels mode by mode.
    pub fn project_spectrum(&self, hats: &mut [Vec<C64>; 3]) {
        let n = self.n;
        let k = &self.waves.k_deriv;
        let (h0, rest) = hats.split_at_mut(1);
        let (h1, h2) = rest.split_at_mut(1);
        h0[0]
            .par_chunks_mut(n)
            .zip(h1[0].par_chunks_mut(n))
            .zip(h2[0].par_chunks_mut(n))
            .enumerate()
            .for_each(|(line, ((c0, c1), c2))| {
                let ky = k[line / n];
                let kz = k[line % n];
                for mx in 0..n {
                    let kx = k[mx];
                    let k2 = kx * kx + ky * ky + kz * kz;
                    if k2 == 0.0 {
                        continue;
                    }
                    let dot = (c0[mx] * kx + c1[mx] * ky + c2[mx] * kz) / k2;
                    c0[mx] -= dot * kx;
                    c1[mx] -= dot * ky;
                    c2[mx] -= dot * kz;
                }
            });
    }

    /// Mean-free inverse Laplacian: multiply by -1/|k|^2, dropping the mean
    /// mode.
    pub fn inverse_laplacian(&self, hat: &mut [C64]) {
        self.apply_symbol(hat, |kx, ky, kz| {
            let k2 = kx * kx + ky * ky + kz * kz;
            if k2 == 0.0 {
                0.0
            } else {
                -1.0 / k2
            }
        });
    }

    /// Spectral Laplacian: multiply by -|k|^2.
    pub fn laplacian(&self, hat: &mut [C64]) {
        self.apply_symbol(hat, |kx, ky, kz| -(kx * kx + ky * ky + kz * kz));
    }
}

fn space_for(field: &GridField, bc: Boundary) -> SpectralSpace {
    match bc {
        Boundary::FreeSpace => SpectralSpace::padded(field.n, field.extent),
        Boundary::Periodic => SpectralSpace::periodic(field.n, field.extent),
    }
}

/// Fourier gradient of a scalar field.
pub fn spectral_gradient(field: &GridField, bc: Boundary) -> GridField {
    assert_eq!(field.components, 1);
    let space = space_for(field, bc);
    let mut scratch = space.scratch();
    let hat = space.forward_component(field, 0, &mut scratch);
    let mut out = GridField::vector(field.extent, field.n);
    for axis in 0..3 {
        let d = space.derivative(&hat, axis);
        space.inverse_into(d, &mut out, axis, &mut scratch);
    }
    out
}

/// Fourier divergence of a vector field.
pub fn spectral_divergence(field: &GridField, bc: Boundary) -> GridField {
    assert_eq!(field.components, 3);
    let space = space_for(field, bc);
    let mut scratch = space.scratch();
    let hats = [
        space.forward_component(field, 0, &mut scratch),
        space.forward_component(field, 1, &mut scratch),
        space.forward_component(field, 2, &mut scratch),
    ];
    let div = space.divergence_spectrum(&hats);
    let mut out = GridField::scalar(field.extent, field.n);
    space.inverse_into(div, &mut out, 0, &mut scratch);
    out
}

/// Fourier curl of a vector field.
pub fn spectral_curl(field: &GridField, bc: Boundary) -> GridField {
    assert_eq!(field.components, 3);
    let space = space_for(field, bc);
    let mut scratch = space.scratch();
    let hats = [
        space.forward_component(field, 0, &mut scratch),
        space.forward_component(field, 1, &mut scratch),
        space.forward_component(field, 2, &mut scratch),
    ];
    let curls = space.curl_spectrum(&hats);
    let mut out = GridField::vector(field.extent, field.n);
    for (axis, c) in curls.into_iter().enumerate() {
        space.inverse_into(c, &mut out, axis, &mut scratch);
    }
    out
}

/// Fourier Jacobian of a vector field: component 3*l + m holds d_m F_l.
pub fn spectral_jacobian(field: &GridField, bc: Boundary) -> GridField {
    assert_eq!(field.components, 3);
    let space = space_for(field, bc);
    let mut scratch = space.scratch();
    let mut out = GridField::zeros(field.extent, field.n, 9);
    for l in 0..3 {
        let hat = space.forward_component(field, l, &mut scratch);
        for m in 0..3 {
            let d = space.derivative(&hat, m);
            space.inverse_into(d, &mut out, 3 * l + m, &mut scratch);
        }
    }
    out
}
