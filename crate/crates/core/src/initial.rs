//! Admissible initial data: smooth compactly supported product bumps.
//!
//! The datum is f0(x, p) = delta * g(|x|/r0) * g(|p|/p0) with the standard
//! mollifier profile g(s) = exp(1 - 1/(1-s^2)) for s < 1 and 0 otherwise;
//! f0 is C^infinity and vanishes for |x| >= r0 or |p| >= p0. The amplitude
//! is rescaled downward when the joint bound sup |grad_(x,p) f0| <= 1 binds,
//! so every built datum satisfies f0 >= 0, sup f0 <= 1, sup |grad f0| <= 1.

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::math::Vec3;

/// Mollifier profile: exp(1 - 1/(1-s^2)) on [0, 1), zero beyond.
pub fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Derivative of the mollifier profile.
pub fn bump_profile_deriv(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        bump_profile(s) * (-2.0 * s / (d * d))
    }
}

#[derive(Debug, Clone)]
pub struct InitialDatum {
    pub r0: f64,
    pub p0: f64,
    /// Effective amplitude after gradient normalization.
    delta: f64,
    /// Amplitude that was requested before normalization.
    requested_amplitude: f64,
}

impl InitialDatum {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn requested_amplitude(&self) -> f64 {
        self.requested_amplitude
    }

    pub fn evaluate(&self, x: Vec3, p: Vec3) -> f64 {
        self.delta * bump_profile(x.norm() / self.r0) * bump_profile(p.norm() / self.p0)
    }

    /// Analytic phase-space gradient (grad_x f0, grad_p f0).
    pub fn gradient(&self, x: Vec3, p: Vec3) -> (Vec3, Vec3) {
        let sx = x.norm() / self.r0;
        let sp = p.norm() / self.p0;
        let gx = bump_profile(sx);
        let gp = bump_profile(sp);
        let dx = if sx > 0.0 && sx < 1.0 {
            x * (self.delta * bump_profile_deriv(sx) * gp / (self.r0 * x.norm()))
        } else {
            Vec3::ZERO
        };
        let dp = if sp > 0.0 && sp < 1.0 {
            p * (self.delta * gx * bump_profile_deriv(sp) / (self.p0 * p.norm()))
        } else {
            Vec3::ZERO
        };
        (dx, dp)
    }

    /// Largest joint gradient magnitude the datum attains (analytic radial
    /// reduction, maximized numerically).
    pub fn sup_gradient(&self) -> f64 {
        self.delta * sup_unit_gradient(self.r0, self.p0)
    }
}

/// sup over (a, b) in [0,1)^2 of the joint gradient magnitude of
/// g(|x|/r0) g(|p|/p0) at unit amplitude.
fn sup_unit_gradient(r0: f64, p0: f64) -> f64 {
    let f = |a: f64, b: f64| {
        let tx = bump_profile_deriv(a) * bump_profile(b) / r0;
        let tp = bump_profile(a) * bump_profile_deriv(b) / p0;
        (tx * tx + tp * tp).sqrt()
    };
    // Coarse grid scan followed by a local refinement around the best cell.
    let n = 512;
    let mut best = 0.0f64;
    let mut best_ab = (0.0, 0.0);
    for i in 0..n {
        let a = i as f64 / n as f64;
        for j in 0..n {
            let b = j as f64 / n as f64;
            let v = f(a, b);
            if v > best {
                best = v;
                best_ab = (a, b);
            }
        }
    }
    let mut lo_a = (best_ab.0 - 2.0 / n as f64).max(0.0);
    let mut hi_a = (best_ab.0 + 2.0 / n as f64).min(1.0 - 1e-12);
    let mut lo_b = (best_ab.1 - 2.0 / n as f64).max(0.0);
    let mut hi_b = (best_ab.1 + 2.0 / n as f64).min(1.0 - 1e-12);
    for _ in 0..30 {
        let m = 8;
        let mut local = best;
        let mut local_ab = best_ab;
        for i in 0..=m {
            let a = lo_a + (hi_a - lo_a) * i as f64 / m as f64;
            for j in 0..=m {
                let b = lo_b + (hi_b - lo_b) * j as f64 / m as f64;
                let v = f(a, b);
                if v > local {
                    local = v;
                    local_ab = (a, b);
                }
            }
        }
        best = local;
        best_ab = local_ab;
        let wa = (hi_a - lo_a) / m as f64;
        let wb = (hi_b - lo_b) / m as f64;
        lo_a = (best_ab.0 - wa).max(0.0);
        hi_a = (best_ab.0 + wa).min(1.0 - 1e-12);
        lo_b = (best_ab.1 - wb).max(0.0);
        hi_b = (best_ab.1 + wb).min(1.0 - 1e-12);
    }
    best
}

/// Build the initial datum for a configuration, rescaling the amplitude so
/// that the joint gradient bound holds.
pub fn build_initial_datum(config: &SimConfig) -> Result<InitialDatum> {
    if !(config.amplitude > 0.0 && config.amplitude <= 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "amplitude must lie in (0, 1], got {}",
            config.amplitude
        )));
    }
    let unit_grad = sup_unit_gradient(config.r0, config.p0);
    // Small safety factor so dense-sampling checks of the bound cannot fail
    // to the maximization tolerance.
    let grad_cap = if unit_grad > 0.0 {
        (1.0 - 1e-9) / unit_grad
    } else {
        f64::INFINITY
    };
    let delta = config.amplitude.min(grad_cap);
    Ok(InitialDatum {
        r0: config.r0,
        p0: config.p0,
        delta,
        requested_amplitude: config.amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn datum(r0: f64, p0: f64, amplitude: f64) -> InitialDatum {
        let cfg = SimConfig {
            r0,
            p0,
            amplitude,
            box_half_width: 100.0,
            ..SimConfig::default()
        };
        build_initial_datum(&cfg).unwrap()
    }

    #[test]
    fn maximum_at_origin_equals_delta() {
        let d = datum(1.0, 1.0, 0.3);
        assert!((d.evaluate(Vec3::ZERO, Vec3::ZERO) - d.delta()).abs() < 1e-15);
    }

    #[test]
    fn vanishes_on_support_boundary() {
        let d = datum(1.0, 1.0, 0.3);
        assert_eq!(d.evaluate(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO), 0.0);
        assert_eq!(d.evaluate(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)), 0.0);
        assert_eq!(d.evaluate(Vec3::new(5.0, 0.0, 0.0), Vec3::ZERO), 0.0);
    }

    #[test]
    fn gradient_bound_binds_for_large_amplitude() {
        // At r0 = p0 = 1 the unit-amplitude joint gradient exceeds 1, so a
        // requested amplitude of 1 must be rescaled downward.
        let d = datum(1.0, 1.0, 1.0);
        assert!(d.delta() < 1.0);
        assert!(d.sup_gradient() <= 1.0);
    }

    #[test]
    fn gradient_bound_by_dense_sampling() {
        let d = datum(1.0, 0.5, 1.0);
        let mut worst = 0.0f64;
        for i in 0..40 {
            for j in 0..40 {
                let x = Vec3::new(i as f64 / 40.0, 0.02, -0.01);
                let p = Vec3::new(0.01, j as f64 * 0.5 / 40.0, 0.0);
                let (gx, gp) = d.gradient(x, p);
                worst = worst.max((gx.norm_sq() + gp.norm_sq()).sqrt());
                assert!(d.evaluate(x, p) >= 0.0);
                assert!(d.evaluate(x, p) <= 1.0);
            }
        }
        assert!(worst <= 1.0 + 1e-12, "joint gradient {worst} exceeds 1");
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let d = datum(1.3, 0.8, 0.2);
        let x = Vec3::new(0.4, -0.3, 0.2);
        let p = Vec3::new(0.1, 0.2, -0.3);
        let (gx, gp) = d.gradient(x, p);
        let eps = 1e-6;
        for k in 0..3 {
            let mut dx = [0.0; 3];
            dx[k] = eps;
            let fd = (d.evaluate(x + Vec3(dx), p) - d.evaluate(x - Vec3(dx), p)) / (2.0 * eps);
            assert!((fd - gx[k]).abs() < 1e-8);
            let fdp = (d.evaluate(x, p + Vec3(dx)) - d.evaluate(x, p - Vec3(dx))) / (2.0 * eps);
            assert!((fdp - gp[k]).abs() < 1e-8);
        }
    }
}
