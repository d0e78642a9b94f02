//! Numerical verification of the second-order Gronwall-type bound used in
//! the source-decay argument: for xi with xi(t) = xi'(t) = 0 and
//! |xi''(s)| <= c1(s) + c2(s) |xi(s)| + c3(s) |xi'(s)| on [0, t], with
//! c1, c2, c3 >= 0 continuous and c3 nonincreasing,
//!
//!   |xi(s)| <= (integral_s^t sigma c1) * exp(integral_s^t (sigma c2 + c3)).
//!
//! Trial trajectories integrate adversarial forcings backward from the
//! terminal data and compare against the bound; the lemma is a theorem,
//! so any violation flags an implementation defect.

use crate::error::{Result, SimError};
use crate::math::adaptive_simpson;
use rand::Rng;

/// Nonnegative piecewise-linear coefficient function on [0, t].
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(SimError::InvalidGronwallProblem(
                "piecewise-linear function needs matching xs/ys with at least 2 points".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidGronwallProblem(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn constant(t: f64, value: f64) -> Self {
        PiecewiseLinear {
            xs: vec![0.0, t],
            ys: vec![value, value],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let xs = &self.xs;
        if x <= xs[0] {
            return self.ys[0];
        }
        if x >= xs[xs.len() - 1] {
            return self.ys[xs.len() - 1];
        }
        let i = xs.partition_point(|&v| v <= x);
        let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        self.ys[i - 1] * (1.0 - w) + self.ys[i] * w
    }

    fn min_value(&self) -> f64 {
        self.ys.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn is_nonincreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }
}

/// A validated bound-verification problem on [0, t].
#[derive(Debug, Clone)]
pub struct GronwallProblem {
    pub t: f64,
    pub c1: PiecewiseLinear,
    pub c2: PiecewiseLinear,
    pub c3: PiecewiseLinear,
}

impl GronwallProblem {
    pub fn new(
        t: f64,
        c1: PiecewiseLinear,
        c2: PiecewiseLinear,
        c3: PiecewiseLinear,
    ) -> Result<Self> {
        if !(t > 0.0) {
            return Err(SimError::InvalidGronwallProblem(format!(
                "horizon must be positive, got {t}"
            )));
        }
        for (name, c) in [("c1", &c1), ("c2", &c2), ("c3", &c3)] {
            if c.min_value() < 0.0 {
                return Err(SimError::InvalidGronwallProblem(format!(
                    "{name} must be nonnegative"
                )));
            }
        }
        if !c3.is_nonincreasing() {
            return Err(SimError::InvalidGronwallProblem(
                "c3 must be monotonically nonincreasing".into(),
            ));
        }
        Ok(GronwallProblem { t, c1, c2, c3 })
    }

    /// Constant-coefficient convenience constructor.
    pub fn constant(t: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        Self::new(
            t,
            PiecewiseLinear::constant(t, c1),
            PiecewiseLinear::constant(t, c2),
            PiecewiseLinear::constant(t, c3),
        )
    }
}

/// Sign pattern theta(s) of the adversarial forcing
/// xi''(s) = theta(s) (c1 + c2 |xi| + c3 |xi'|).
#[derive(Debug, Clone)]
pub enum ForcingPattern {
    Positive,
    Negative,
    /// Piecewise-constant random signs switching at the given times.
    Switching(Vec<f64>),
}

impl ForcingPattern {
    fn sign(&self, s: f64) -> f64 {
        match self {
            ForcingPattern::Positive => 1.0,
            ForcingPattern::Negative => -1.0,
            ForcingPattern::Switching(times) => {
                let flips = times.iter().filter(|&&x| x <= s).count();
                if flips % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GronwallViolation {
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct GronwallReport {
    /// max over evaluation points of |xi(s)| / bound(s).
    pub worst_ratio: f64,
    pub worst_s: f64,
    pub violations: Vec<GronwallViolation>,
    pub trials: usize,
}

impl GronwallReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Integrate one adversarial trajectory backward from xi(t) = xi'(t) = 0
/// and compare |xi(s)| against the bound on a dense s grid.
fn run_trial(
    problem: &GronwallProblem,
    pattern: &ForcingPattern,
    steps: usize,
    report: &mut GronwallReport,
) {
    let t = problem.t;
    let h = -t / steps as f64;
    // Backward RK4 on (xi, xi').
    let deriv = |s: f64, xi: f64, eta: f64| -> (f64, f64) {
        let mag =
            problem.c1.eval(s) + problem.c2.eval(s) * xi.abs() + problem.c3.eval(s) * eta.abs();
        (eta, pattern.sign(s) * mag)
    };
    let mut xi = 0.0;
    let mut eta = 0.0;
    let mut trajectory = vec![(t, 0.0f64)];
    let mut s = t;
    for _ in 0..steps {
        let (k1x, k1e) = deriv(s, xi, eta);
        let (k2x, k2e) = deriv(s + 0.5 * h, xi + 0.5 * h * k1x, eta + 0.5 * h * k1e);
        let (k3x, k3e) = deriv(s + 0.5 * h, xi + 0.5 * h * k2x, eta + 0.5 * h * k2e);
        let (k4x, k4e) = deriv(s + h, xi + h * k3x, eta + h * k3e);
        xi += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        eta += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        s += h;
        trajectory.push((s, xi));
    }
    // Cumulative bound integrals on the same grid, each interval refined
    // adaptively (tolerance split across intervals).
    let tol = 1e-10 / steps as f64;
    let f1 = |sigma: f64| sigma * problem.c1.eval(sigma);
    let f2 = |sigma: f64| sigma * problem.c2.eval(sigma) + problem.c3.eval(sigma);
    let mut bound_at = vec![0.0f64; trajectory.len()]; // integral pair at each s
    let mut exp_at = vec![0.0f64; trajectory.len()];
    for i in 1..trajectory.len() {
        let (s_hi, _) = trajectory[i - 1];
        let (s_lo, _) = trajectory[i];
        bound_at[i] = bound_at[i - 1] + adaptive_simpson(&f1, s_lo, s_hi, tol);
        exp_at[i] = exp_at[i - 1] + adaptive_simpson(&f2, s_lo, s_hi, tol);
    }
    for i in 1..trajectory.len() {
        let (s, xi_s) = trajectory[i];
        let rhs = bound_at[i] * exp_at[i].exp();
        let lhs = xi_s.abs();
        if rhs > 0.0 {
            let ratio = lhs / rhs;
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_s = s;
            }
        }
        if lhs > rhs * (1.0 + 1e-9) + 1e-30 {
            report.violations.push(GronwallViolation { s, lhs, rhs });
        }
    }
    report.trials += 1;
}

/// Check one problem against a single forcing pattern.
pub fn verify_single(
    problem: &GronwallProblem,
    pattern: &ForcingPattern,
    steps: usize,
) -> GronwallReport {
    let mut report = GronwallReport {
        worst_ratio: 0.0,
        worst_s: problem.t,
        violations: Vec::new(),
        trials: 0,
    };
    run_trial(problem, pattern, steps, &mut report);
    report
}

/// Check one problem against the extremal sign patterns plus
/// `n_random_switching` random switching patterns.
pub fn verify_gronwall(
    problem: &GronwallProblem,
    n_random_switching: usize,
    rng: &mut impl Rng,
    steps: usize,
) -> GronwallReport {
    let mut report = GronwallReport {
        worst_ratio: 0.0,
        worst_s: problem.t,
        violations: Vec::new(),
        trials: 0,
    };
    run_trial(problem, &ForcingPattern::Positive, steps, &mut report);
    run_trial(problem, &ForcingPattern::Negative, steps, &mut report);
    for _ in 0..n_random_switching {
        let n_flips = rng.gen_range(1..6);
        let mut times: Vec<f64> = (0..n_flips)
            .map(|_| rng.gen::<f64>() * problem.t)
            .collect();
        times.sort_by(f64::total_cmp);
        run_trial(
            problem,
            &ForcingPattern::Switching(times),
            steps,
            &mut report,
        );
    }
    report
}

/// Draw a random valid problem: piecewise-linear nonnegative c1, c2 and a
/// nonincreasing c3.
pub fn random_problem(rng: &mut impl Rng) -> GronwallProblem {
    let t = 0.5 + 2.5 * rng.gen::<f64>();
    let knots = rng.gen_range(3..7);
    let mut xs: Vec<f64> = vec![0.0];
    for _ in 0..knots {
        xs.push(rng.gen::<f64>() * t);
    }
    xs.push(t);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let n = xs.len();
    let c1_vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
    let c2_vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1.5).collect();
    let mut c3_vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1.5).collect();
    c3_vals.sort_by(|a, b| b.total_cmp(a));
    let c1 = PiecewiseLinear::new(xs.clone(), c1_vals).unwrap();
    let c2 = PiecewiseLinear::new(xs.clone(), c2_vals).unwrap();
    let c3 = PiecewiseLinear::new(xs, c3_vals).unwrap();
    GronwallProblem::new(t, c1, c2, c3).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::rng_stream;

    #[test]
    fn trivial_problem_has_zero_trajectory() {
        let problem = GronwallProblem::constant(2.0, 0.0, 0.0, 0.0).unwrap();
        let mut rng = rng_stream(1, "gronwall-test");
        let report = verify_gronwall(&problem, 2, &mut rng, 400);
        assert!(report.passed());
        assert_eq!(report.worst_ratio, 0.0);
    }

    #[test]
    fn constant_forcing_closed_form() {
        // c1 = c, c2 = c3 = 0, forcing xi'' = c: xi(s) = c (t-s)^2 / 2 and
        // the bound is c (t^2 - s^2)/2, so the ratio is (t-s)/(t+s): at
        // most 1, with equality approached exactly at s = 0.
        let c = 0.7;
        let t = 2.0;
        let problem = GronwallProblem::constant(t, c, 0.0, 0.0).unwrap();
        let mut report = GronwallReport {
            worst_ratio: 0.0,
            worst_s: t,
            violations: Vec::new(),
            trials: 0,
        };
        run_trial(&problem, &ForcingPattern::Positive, 2000, &mut report);
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert!(
            (report.worst_ratio - 1.0).abs() < 1e-9,
            "worst ratio {} (expected 1 at s = 0)",
            report.worst_ratio
        );
        assert!(report.worst_s.abs() < 1e-12, "worst at s = {}", report.worst_s);
    }

    #[test]
    fn validation_rejects_bad_problems() {
        assert!(GronwallProblem::constant(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(GronwallProblem::constant(1.0, -0.1, 0.0, 0.0).is_err());
        // Increasing c3 is rejected.
        let t = 1.0;
        let c3 = PiecewiseLinear::new(vec![0.0, t], vec![0.0, 1.0]).unwrap();
        assert!(GronwallProblem::new(
            t,
            PiecewiseLinear::constant(t, 1.0),
            PiecewiseLinear::constant(t, 0.0),
            c3
        )
        .is_err());
    }

    #[test]
    fn random_problem_campaign_small() {
        let mut rng = rng_stream(7, "gronwall-campaign");
        for _ in 0..25 {
            let problem = random_problem(&mut rng);
            let report = verify_gronwall(&problem, 1, &mut rng, 600);
            assert!(
                report.passed(),
                "bound violated at worst ratio {} (s = {})",
                report.worst_ratio,
                report.worst_s
            );
        }
    }
}
