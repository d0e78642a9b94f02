//! Relativistic Boris transport of the marker ensemble.
//!
//! Kick-rotate-kick in momentum with the magnetic rotation evaluated at
//! the mid-momentum Lorentz factor, then a position drift with the updated
//! velocity. The rotation is norm-preserving, so |p| is conserved exactly
//! in a pure magnetic field; the electric update is exact for constant E.

use crate::darwin::FieldState;
use crate::error::{Result, SimError};
use crate::grid::GridField;
use crate::kinematics::relativistic_velocity;
use crate::math::Vec3;
use crate::particles::ParticleEnsemble;
use rayon::prelude::*;

/// One Boris step for a single marker against local fields.
#[inline]
pub fn boris_kick(x: Vec3, p: Vec3, e: Vec3, b: Vec3, dt: f64) -> (Vec3, Vec3) {
    let half_e = e * (0.5 * dt);
    let p_minus = p + half_e;
    let gamma_mid = (1.0 + p_minus.norm_sq()).sqrt();
    let t = b * (0.5 * dt / gamma_mid);
    let s = t * (2.0 / (1.0 + t.norm_sq()));
    let p_prime = p_minus + p_minus.cross(t);
    let p_plus = p_minus + p_prime.cross(s);
    let p_new = p_plus + half_e;
    let x_new = x + relativistic_velocity(p_new) * dt;
    (x_new, p_new)
}

/// Advance every marker one step through the given field state. Markers
/// whose fields are not interpolable (outside the box) are a hard error.
pub fn push_markers(
    ens: &mut ParticleEnsemble,
    fields: &FieldState,
    dt: f64,
    t: f64,
) -> Result<()> {
    let e_total = fields.e_total();
    push_markers_in(ens, &e_total, &fields.b, dt, t)
}

/// Advance markers against explicit E and B grids.
pub fn push_markers_in(
    ens: &mut ParticleEnsemble,
    e: &GridField,
    b: &GridField,
    dt: f64,
    t: f64,
) -> Result<()> {
    let limit = e.extent - e.spacing();
    let escaped: Vec<Option<usize>> = ens
        .x
        .par_iter_mut()
        .zip(ens.p.par_iter_mut())
        .enumerate()
        .map(|(i, (x, p))| {
            let (ev, bv) = match (e.sample_vector(*x), b.sample_vector(*x)) {
                (Some(ev), Some(bv)) => (ev, bv),
                _ => return Some(i),
            };
            let (xn, pn) = boris_kick(*x, *p, ev, bv, dt);
            *x = xn;
            *p = pn;
            None
        })
        .collect();
    if let Some(bad) = escaped.into_iter().flatten().next() {
        let x = ens.x[bad];
        return Err(SimError::MarkerOutsideBox {
            index: bad,
            t,
            x: x[0],
            y: x[1],
            z: x[2],
            limit,
        });
    }
    Ok(())
}

/// Free streaming: exact drift with constant momentum (no field lookup).
pub fn push_markers_free(ens: &mut ParticleEnsemble, dt: f64) {
    ens.x
        .par_iter_mut()
        .zip(ens.p.par_iter())
        .for_each(|(x, p)| {
            *x += relativistic_velocity(*p) * dt;
        });
}

/// Exact inverse of one Boris step: drift back with the current momentum,
/// then kick with negated dt at the recovered position. Used for
/// back-tracing and reversibility checks.
pub fn push_markers_reverse(
    ens: &mut ParticleEnsemble,
    e: &GridField,
    b: &GridField,
    dt: f64,
    t: f64,
) -> Result<()> {
    let limit = e.extent - e.spacing();
    let escaped: Vec<Option<usize>> = ens
        .x
        .par_iter_mut()
        .zip(ens.p.par_iter_mut())
        .enumerate()
        .map(|(i, (x, p))| {
            let x_prev = *x - relativistic_velocity(*p) * dt;
            let (ev, bv) = match (e.sample_vector(x_prev), b.sample_vector(x_prev)) {
                (Some(ev), Some(bv)) => (ev, bv),
                _ => return Some(i),
            };
            let (_, p_prev) = boris_kick(x_prev, *p, ev, bv, -dt);
            *x = x_prev;
            *p = p_prev;
            None
        })
        .collect();
    if let Some(bad) = escaped.into_iter().flatten().next() {
        let x = ens.x[bad];
        return Err(SimError::MarkerOutsideBox {
            index: bad,
            t,
            x: x[0],
            y: x[1],
            z: x[2],
            limit,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn uniform_fields(extent: f64, n: usize, e: Vec3, b: Vec3) -> (GridField, GridField) {
        let mut ef = GridField::vector(extent, n);
        ef.fill_with(|_| vec![e[0], e[1], e[2]]);
        let mut bf = GridField::vector(extent, n);
        bf.fill_with(|_| vec![b[0], b[1], b[2]]);
        (ef, bf)
    }

    #[test]
    fn zero_fields_free_stream() {
        let (e, b) = uniform_fields(10.0, 16, Vec3::ZERO, Vec3::ZERO);
        let mut ens = ParticleEnsemble::default();
        let p0 = Vec3::new(0.5, -0.2, 0.1);
        ens.push(Vec3::ZERO, p0, 1.0, 0.3);
        let dt = 0.05;
        for step in 0..100 {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        let t = 5.0;
        let expect = relativistic_velocity(p0) * t;
        assert!((ens.x[0] - expect).norm() < 1e-12);
        assert!((ens.p[0] - p0).norm() < 1e-15);
    }

    #[test]
    fn pure_magnetic_rotation_preserves_momentum_norm() {
        let bmag = 1.3;
        let (e, b) = uniform_fields(10.0, 16, Vec3::ZERO, Vec3::new(0.0, 0.0, bmag));
        let mut ens = ParticleEnsemble::default();
        let p0 = Vec3::new(0.9, 0.0, 0.2);
        ens.push(Vec3::ZERO, p0, 1.0, 0.3);
        let dt = 0.02;
        for step in 0..500 {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
            assert!(
                (ens.p[0].norm() - p0.norm()).abs() < 1e-13,
                "momentum norm drifted at step {step}"
            );
        }
    }

    #[test]
    fn gyro_period_reproduced_to_second_order() {
        let bmag = 2.0;
        let p0 = Vec3::new(0.7, 0.1, 0.0);
        let period = oracles::gyro_period(p0, bmag);
        let mut errs = Vec::new();
        for steps in [200usize, 400] {
            let dt = period / steps as f64;
            let (e, b) = uniform_fields(40.0, 16, Vec3::ZERO, Vec3::new(0.0, 0.0, bmag));
            let mut ens = ParticleEnsemble::default();
            ens.push(Vec3::ZERO, p0, 1.0, 0.3);
            for step in 0..steps {
                push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
            }
            errs.push((ens.p[0] - p0).norm());
        }
        // Halving dt shrinks the period error by about 4.
        assert!(errs[1] < errs[0] / 3.0, "no O(dt^2) convergence: {errs:?}");
        assert!(errs[0] < 1e-3, "period error too large: {errs:?}");
    }

    #[test]
    fn gyro_orbit_matches_closed_form() {
        let bmag = 1.5;
        let p0 = Vec3::new(0.4, -0.3, 0.25);
        let (e, b) = uniform_fields(20.0, 16, Vec3::ZERO, Vec3::new(0.0, 0.0, bmag));
        let mut ens = ParticleEnsemble::default();
        ens.push(Vec3::ZERO, p0, 1.0, 0.3);
        let dt = 0.002;
        let steps = 1000;
        for step in 0..steps {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        let t = dt * steps as f64;
        let (x_exact, p_exact) = oracles::gyro_orbit(p0, bmag, t);
        assert!(
            (ens.p[0] - p_exact).norm() < 5e-6,
            "momentum error {}",
            (ens.p[0] - p_exact).norm()
        );
        // The drift uses the post-kick momentum (right-endpoint rule), so
        // positions track the exact orbit at first order only; momentum is
        // second order.
        assert!(
            (ens.x[0] - x_exact).norm() < 2.0 * dt,
            "position error {}",
            (ens.x[0] - x_exact).norm()
        );
    }

    #[test]
    fn constant_electric_field_is_exact() {
        let e0 = Vec3::new(0.3, 0.0, 0.0);
        let (e, b) = uniform_fields(50.0, 16, e0, Vec3::ZERO);
        let mut ens = ParticleEnsemble::default();
        ens.push(Vec3::ZERO, Vec3::ZERO, 1.0, 0.3);
        let dt = 0.1;
        for step in 0..100 {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        // p1(t) = t E exactly.
        assert!((ens.p[0][0] - 10.0 * 0.3).abs() < 1e-12);
        assert_eq!(ens.p[0][1], 0.0);
    }

    #[test]
    fn drift_kick_sequence_is_time_reversible() {
        // Non-uniform smooth fields: forward steps followed by the adjoint
        // reverse steps return the marker to round-off.
        let n = 32;
        let extent = 10.0;
        let mut e = GridField::vector(extent, n);
        e.fill_with(|x: Vec3| vec![0.05 * (0.3 * x[1]).sin(), -0.02, 0.01 * x[0] / extent]);
        let mut b = GridField::vector(extent, n);
        b.fill_with(|x: Vec3| vec![0.0, 0.1, 0.3 + 0.05 * (0.2 * x[2]).cos()]);
        let mut ens = ParticleEnsemble::default();
        let x0 = Vec3::new(0.3, -0.4, 0.2);
        let p0 = Vec3::new(0.2, 0.1, -0.3);
        ens.push(x0, p0, 1.0, 0.3);
        let dt = 0.05;
        for step in 0..40 {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        for step in (0..40).rev() {
            push_markers_reverse(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        assert!(
            (ens.x[0] - x0).norm() < 1e-12,
            "reversed position error {}",
            (ens.x[0] - x0).norm()
        );
        assert!(
            (ens.p[0] - p0).norm() < 1e-12,
            "reversed momentum error {}",
            (ens.p[0] - p0).norm()
        );
    }

    #[test]
    fn marker_escape_is_hard_error() {
        let (e, b) = uniform_fields(1.0, 16, Vec3::ZERO, Vec3::ZERO);
        let mut ens = ParticleEnsemble::default();
        ens.push(Vec3::new(0.99, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0), 1.0, 0.3);
        let mut failed = false;
        for step in 0..10 {
            if push_markers_in(&mut ens, &e, &b, 0.5, step as f64 * 0.5).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed, "escaping marker did not error");
    }
}
