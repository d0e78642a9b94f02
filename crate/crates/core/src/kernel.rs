//! Free-space Green's function kernel for the Poisson solves.
//!
//! The kernel g(x) = -1/(4 pi |x|) (so that the convolution Phi = g * rho
//! satisfies Delta Phi = rho with Phi -> 0 at infinity) is sampled on the
//! doubled torus with minimal-image coordinates; circular convolution with
//! it then reproduces the exact discrete free-space sum for any source and
//! target inside the unpadded box. The singular origin sample is replaced
//! by the exact cell average of -1/(4 pi |x|).

use crate::error::{Result, SimError};
use crate::fft::C64;
use crate::grid::GridField;
use crate::math::adaptive_simpson;
use crate::spectral::SpectralSpace;
use rayon::prelude::*;

pub struct FreeSpaceKernel {
    /// Unpadded grid size this kernel serves.
    pub n: usize,
    pub extent: f64,
    /// DFT of the sampled kernel times the cell volume, in the rotated
    /// spectral layout; real because the sampled kernel is even.
    hat: Vec<f64>,
}

/// Integral of 1/|x| over the unit cube [0,1]^3 (corner singularity),
/// reduced to a 1D adaptive quadrature over polar wedges of the base
/// square.
pub fn unit_cube_corner_inverse_r() -> f64 {
    // inner(rho) = integral over z in [0,1] of 1/sqrt(rho^2+z^2)
    let inner = |rho: f64| ((1.0 + (rho * rho + 1.0).sqrt()) / rho).ln();
    // Square [0,1]^2 in polar coordinates, split at the diagonal; the two
    // wedges are congruent.
    let wedge = |theta: f64| {
        let rmax = 1.0 / theta.cos();
        adaptive_simpson(&|rho: f64| if rho > 0.0 { rho * inner(rho) } else { 0.0 }, 0.0, rmax, 1e-13)
    };
    2.0 * adaptive_simpson(&wedge, 0.0, std::f64::consts::FRAC_PI_4, 1e-12)
}

impl FreeSpaceKernel {
    /// Sample and transform the kernel for an `n`-node grid of half-extent
    /// `extent` (padded internally to 2n).
    pub fn build(n: usize, extent: f64) -> Self {
        let space = SpectralSpace::padded(n, extent);
        let np = space.n;
        let h = 2.0 * extent / n as f64;
        let period = space.period;
        // Minimal-image displacement of lattice offset m.
        let offset = |m: usize| -> f64 {
            let d = m as f64 * h;
            if d > 0.5 * period { d - period } else { d }
        };
        let origin_sample = -2.0 * unit_cube_corner_inverse_r() / (4.0 * std::f64::consts::PI * h);
        let mut data = vec![C64::default(); np * np * np];
        data.par_chunks_mut(np * np).enumerate().for_each(|(i, slab)| {
            let dx = offset(i);
            for j in 0..np {
                let dy = offset(j);
                for k in 0..np {
                    let dz = offset(k);
                    let r2 = dx * dx + dy * dy + dz * dz;
                    let v = if r2 == 0.0 {
                        origin_sample
                    } else {
                        -1.0 / (4.0 * std::f64::consts::PI * r2.sqrt())
                    };
                    slab[j * np + k] = C64::new(v, 0.0);
                }
            }
        });
        let mut scratch = space.scratch();
        let fft = crate::fft::Fft3::new(np);
        fft.forward(&mut data, &mut scratch);
        // Even real kernel: transform is real. Fold in the quadrature
        // weight h^3 of the convolution sum.
        let h3 = h * h * h;
        let hat: Vec<f64> = data.par_iter().map(|c| c.re * h3).collect();
        FreeSpaceKernel { n, extent, hat }
    }

    pub fn matches(&self, field: &GridField) -> Result<()> {
        if field.n != self.n || field.extent != self.extent {
            return Err(SimError::KernelMismatch {
                field_n: field.n,
                field_extent: field.extent,
                kernel_n: self.n,
                kernel_extent: self.extent,
            });
        }
        Ok(())
    }

    /// Multiply a padded spectrum by the kernel transform in place.
    pub fn apply(&self, hat: &mut [C64]) {
        debug_assert_eq!(hat.len(), self.hat.len());
        hat.par_iter_mut().zip(self.hat.par_iter()).for_each(|(v, &g)| {
            *v *= g;
        });
    }
}
