//! Marker representation of the phase-space density and its sampling.
//!
//! Markers are drawn on a seeded Halton lattice over the phase-space box
//! supp f0 fits in, with points of zero density rejected. Each marker
//! carries w = f0(x, p) * dV where dV is the per-lattice-point phase-space
//! volume, so the total weight is the quasi-Monte-Carlo estimate of
//! the integral of f0.

use crate::config::SimConfig;
use crate::error::Result;
use crate::initial::InitialDatum;
use crate::math::{SignedPermutation, Vec3};
use rand::Rng;

#[derive(Debug, Clone, Default)]
pub struct ParticleEnsemble {
    pub x: Vec<Vec3>,
    pub p: Vec<Vec3>,
    pub w: Vec<f64>,
    /// Initial density value carried for constancy-along-characteristics
    /// checks; never mutated after sampling.
    pub f0_value: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn push(&mut self, x: Vec3, p: Vec3, w: f64, f0: f64) {
        self.x.push(x);
        self.p.push(p);
        self.w.push(w);
        self.f0_value.push(f0);
    }
}

/// Radical-inverse (van der Corput) sequence value in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut result = 0.0;
    while index > 0 {
        result += (index % base) as f64 * inv;
        index /= base;
        inv /= base as f64;
    }
    result
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Deterministic quasi-uniform sampling of supp f0. The Halton lattice is
/// shifted by a seeded Cranley-Patterson rotation; points where f0 vanishes
/// are dropped without replacement so the weight estimator stays unbiased.
pub fn sample_particles(f0: &InitialDatum, config: &SimConfig) -> Result<ParticleEnsemble> {
    config.validate()?;
    let mut rng = config.rng_stream("sampling");
    let shift: [f64; 6] = std::array::from_fn(|_| rng.gen::<f64>());

    let images: usize = if config.symmetrize_markers { 96 } else { 1 };
    let base_count = (config.particle_count / images).max(1);
    let volume = (2.0 * f0.r0).powi(3) * (2.0 * f0.p0).powi(3);
    let dv = volume / (base_count * images) as f64;

    let perms = SignedPermutation::all();
    // Values this far below the amplitude underflow the weight product;
    // the mass they carry is immeasurable, so the markers are dropped.
    let density_floor = f0.delta() * 1e-14;
    let mut ensemble = ParticleEnsemble::default();
    for idx in 0..base_count {
        let mut u = [0.0f64; 6];
        for (d, v) in u.iter_mut().enumerate() {
            let h = radical_inverse(idx as u64 + 1, HALTON_BASES[d]);
            *v = (h + shift[d]).fract();
        }
        let x = Vec3::new(
            (2.0 * u[0] - 1.0) * f0.r0,
            (2.0 * u[1] - 1.0) * f0.r0,
            (2.0 * u[2] - 1.0) * f0.r0,
        );
        let p = Vec3::new(
            (2.0 * u[3] - 1.0) * f0.p0,
            (2.0 * u[4] - 1.0) * f0.p0,
            (2.0 * u[5] - 1.0) * f0.p0,
        );
        if config.symmetrize_markers {
            // Orbit under the 48 signed permutations acting jointly on
            // (x, p), extended by momentum reversal. The deposited current
            // of a fresh ensemble then cancels in pairs and all moments are
            // exactly equivariant under the grid symmetries.
            for q in &perms {
                let qx = q.apply(x);
                let qp = q.apply(p);
                for sign in [1.0, -1.0] {
                    let pm = qp * sign;
                    let val = f0.evaluate(qx, pm);
                    if val > density_floor {
                        ensemble.push(qx, pm, val * dv, val);
                    }
                }
            }
        } else {
            let val = f0.evaluate(x, p);
            if val > density_floor {
                ensemble.push(x, p, val * dv, val);
            }
        }
    }
    Ok(ensemble)
}
