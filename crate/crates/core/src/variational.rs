//! Variational transport along characteristics: the matrices
//! dX(s)/d(x,p) and dP(s)/d(x,p) of the backward flow, used to verify the
//! momentum-Jacobian lower bound that drives source decay.
//!
//! Tracked markers record a tape of (x, p, E, B, grad E, grad B) at every
//! step; the linearized system is then integrated backward from the
//! measurement time to s = 0 with RK4, interpolating the tape linearly at
//! substage times (the tape resolution limits accuracy to O(dt^2) in
//! nonzero fields; constant-coefficient cases integrate exactly).

use crate::kinematics::{relativistic_velocity, velocity_jacobian};
use crate::math::{Mat3, Vec3};

/// Variational matrices at one flow time s, differentiated with respect to
/// the state at the measurement time t.
#[derive(Debug, Clone, Copy)]
pub struct VariationalState {
    pub dx_dp: Mat3,
    pub dp_dp: Mat3,
    pub dx_dx: Mat3,
    pub dp_dx: Mat3,
}

impl VariationalState {
    /// Initialization at s = t: the flow map is the identity there.
    pub fn at_measurement_time() -> Self {
        VariationalState {
            dx_dp: Mat3::ZERO,
            dp_dp: Mat3::identity(),
            dx_dx: Mat3::identity(),
            dp_dx: Mat3::ZERO,
        }
    }
}

/// One tape record along a tracked characteristic.
#[derive(Debug, Clone, Copy)]
pub struct TapeSample {
    pub t: f64,
    pub x: Vec3,
    pub p: Vec3,
    pub e: Vec3,
    pub b: Vec3,
    /// Row i, column m: d_m E_i at x.
    pub grad_e: Mat3,
    pub grad_b: Mat3,
}

/// Field and state history of one tracked marker, ascending in time.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryTape {
    pub samples: Vec<TapeSample>,
}

impl TrajectoryTape {
    pub fn record(&mut self, sample: TapeSample) {
        debug_assert!(self
            .samples
            .last()
            .map(|s| sample.t > s.t)
            .unwrap_or(true));
        self.samples.push(sample);
    }

    /// Linear interpolation of the tape at time s (clamped to the range).
    fn at(&self, s: f64) -> TapeSample {
        let samples = &self.samples;
        if s <= samples[0].t {
            return samples[0];
        }
        if s >= samples[samples.len() - 1].t {
            return samples[samples.len() - 1];
        }
        let idx = samples.partition_point(|smp| smp.t <= s).min(samples.len() - 1);
        let (a, b) = (&samples[idx - 1], &samples[idx]);
        let w = (s - a.t) / (b.t - a.t);
        let lerp_v = |u: Vec3, v: Vec3| u * (1.0 - w) + v * w;
        let lerp_m = |u: Mat3, v: Mat3| u.scale(1.0 - w) + v.scale(w);
        TapeSample {
            t: s,
            x: lerp_v(a.x, b.x),
            p: lerp_v(a.p, b.p),
            e: lerp_v(a.e, b.e),
            b: lerp_v(a.b, b.b),
            grad_e: lerp_m(a.grad_e, b.grad_e),
            grad_b: lerp_m(a.grad_b, b.grad_b),
        }
    }
}

/// Coefficient matrices of the linearized characteristic system at one
/// tape point: (Dv(P), dK/dx, dK/dp).
fn coefficients(sample: &TapeSample) -> (Mat3, Mat3, Mat3) {
    let dv = velocity_jacobian(sample.p);
    let v = relativistic_velocity(sample.p);
    // Column m of dK/dx is d_m E + v x d_m B.
    let mut kx = [[0.0; 3]; 3];
    let mut kp = [[0.0; 3]; 3];
    for m in 0..3 {
        let de = Vec3::new(sample.grad_e.0[0][m], sample.grad_e.0[1][m], sample.grad_e.0[2][m]);
        let db = Vec3::new(sample.grad_b.0[0][m], sample.grad_b.0[1][m], sample.grad_b.0[2][m]);
        let col = de + v.cross(db);
        for i in 0..3 {
            kx[i][m] = col[i];
        }
        // Column m of dK/dp is (Dv e_m) x B.
        let dvcol = Vec3::new(dv.0[0][m], dv.0[1][m], dv.0[2][m]);
        let colp = dvcol.cross(sample.b);
        for i in 0..3 {
            kp[i][m] = colp[i];
        }
    }
    (dv, Mat3(kx), Mat3(kp))
}

fn derivative(state: &VariationalState, sample: &TapeSample) -> VariationalState {
    let (dv, kx, kp) = coefficients(sample);
    VariationalState {
        dx_dp: dv.mul_mat(&state.dp_dp),
        dp_dp: kx.mul_mat(&state.dx_dp) + kp.mul_mat(&state.dp_dp),
        dx_dx: dv.mul_mat(&state.dp_dx),
        dp_dx: kx.mul_mat(&state.dx_dx) + kp.mul_mat(&state.dp_dx),
    }
}

fn axpy(state: &VariationalState, k: &VariationalState, h: f64) -> VariationalState {
    VariationalState {
        dx_dp: state.dx_dp + k.dx_dp.scale(h),
        dp_dp: state.dp_dp + k.dp_dp.scale(h),
        dx_dx: state.dx_dx + k.dx_dx.scale(h),
        dp_dx: state.dp_dx + k.dp_dx.scale(h),
    }
}

/// Integrate the variational system backward over the tape, from its last
/// sample time to its first, starting from the identity initialization.
/// `substeps` RK4 stages per tape interval.
pub fn integrate_variational(tape: &TrajectoryTape, substeps: usize) -> VariationalState {
    let samples = &tape.samples;
    assert!(samples.len() >= 2, "tape needs at least two samples");
    let mut state = VariationalState::at_measurement_time();
    let t_end = samples[samples.len() - 1].t;
    let t_start = samples[0].t;
    let n_intervals = (samples.len() - 1) * substeps.max(1);
    let h = (t_start - t_end) / n_intervals as f64; // negative: backward
    let mut s = t_end;
    for _ in 0..n_intervals {
        let k1 = derivative(&state, &tape.at(s));
        let k2 = derivative(&axpy(&state, &k1, 0.5 * h), &tape.at(s + 0.5 * h));
        let k3 = derivative(&axpy(&state, &k2, 0.5 * h), &tape.at(s + 0.5 * h));
        let k4 = derivative(&axpy(&state, &k3, h), &tape.at(s + h));
        state = VariationalState {
            dx_dp: state.dx_dp
                + (k1.dx_dp + k2.dx_dp.scale(2.0) + k3.dx_dp.scale(2.0) + k4.dx_dp).scale(h / 6.0),
            dp_dp: state.dp_dp
                + (k1.dp_dp + k2.dp_dp.scale(2.0) + k3.dp_dp.scale(2.0) + k4.dp_dp).scale(h / 6.0),
            dx_dx: state.dx_dx
                + (k1.dx_dx + k2.dx_dx.scale(2.0) + k3.dx_dx.scale(2.0) + k4.dx_dx).scale(h / 6.0),
            dp_dx: state.dp_dx
                + (k1.dp_dx + k2.dp_dx.scale(2.0) + k3.dp_dx.scale(2.0) + k4.dp_dx).scale(h / 6.0),
        };
        s += h;
    }
    state
}

/// Outcome of the momentum-Jacobian floor check at time t.
#[derive(Debug, Clone, Copy)]
pub struct JacobianReport {
    pub t: f64,
    pub det_dpx: f64,
    pub lower_bound: f64,
    pub beta: f64,
    pub passed: bool,
}

/// Compare |det dX(0)/dp| against the free-streaming closed form
/// t^3 (1+|p|^2)^(-5/2) scaled by (1-beta)^3. Meaningful for t >= 1.
pub fn jacobian_determinant_check(
    state: &VariationalState,
    t: f64,
    p: Vec3,
    beta: f64,
) -> JacobianReport {
    let det = state.dx_dp.det().abs();
    let lower_bound = (1.0 - beta).powi(3) * t.powi(3) * (1.0 + p.norm_sq()).powf(-2.5);
    JacobianReport {
        t,
        det_dpx: det,
        lower_bound,
        beta,
        passed: det >= lower_bound,
    }
}

/// Convenience: a zero-field tape for free streaming of one marker.
pub fn free_streaming_tape(x0: Vec3, p: Vec3, t: f64, steps: usize) -> TrajectoryTape {
    let mut tape = TrajectoryTape::default();
    let v = relativistic_velocity(p);
    for k in 0..=steps {
        let s = t * k as f64 / steps as f64;
        tape.record(TapeSample {
            t: s,
            x: x0 + v * s,
            p,
            e: Vec3::ZERO,
            b: Vec3::ZERO,
            grad_e: Mat3::ZERO,
            grad_b: Mat3::ZERO,
        });
    }
    tape
}
