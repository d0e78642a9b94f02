//! Acceptance suite: one test per headline criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! The heavy runs use the deterministic seeds pinned here; tolerances are
//! part of the contract and are not derived at runtime.

use rand::Rng;
use vdsim_core::config::{rng_stream, Mode, SimConfig};
use vdsim_core::decay::{check_bootstrap, fit_decay_exponent, DecayFits, SeriesColumn};
use vdsim_core::diagnostics::extract_alpha;
use vdsim_core::grid::GridField;
use vdsim_core::gronwall::{random_problem, verify_gronwall, ForcingPattern, GronwallProblem};
use vdsim_core::initial::build_initial_datum;
use vdsim_core::math::Vec3;
use vdsim_core::oracles;
use vdsim_core::particles::ParticleEnsemble;
use vdsim_core::projection::{
    gradient_annihilation_residual, projection_checks, projection_residual,
};
use vdsim_core::pusher::push_markers_in;
use vdsim_core::sim::{
    compare_radial, run_simulation, run_smallness_study, StudySpec, SweepVariable,
    TerminationReason,
};
use vdsim_core::variational::{
    free_streaming_tape, integrate_variational, jacobian_determinant_check,
};

fn verdict(criterion: &str, passed: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "acceptance {criterion} failed: {detail}");
}

/// Random band-limited compactly supported vector field: a handful of
/// low-order Fourier modes under a Gaussian envelope.
fn band_limited_field(n: usize, extent: f64, rng: &mut impl rand::Rng) -> GridField {
    let mut modes = Vec::new();
    for _ in 0..6 {
        let k = Vec3::new(
            rng.gen_range(-4..=4i32) as f64,
            rng.gen_range(-4..=4i32) as f64,
            rng.gen_range(-4..=4i32) as f64,
        ) * (std::f64::consts::PI / extent);
        let amp = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        modes.push((k, amp, phase));
    }
    let sigma2 = (extent / 3.0).powi(2);
    let mut f = GridField::vector(extent, n);
    f.fill_with(|x: Vec3| {
        let env = (-x.norm_sq() / sigma2).exp();
        let mut v = Vec3::ZERO;
        for (k, amp, phase) in &modes {
            v += *amp * ((k.dot(x) + phase).cos());
        }
        vec![v[0] * env, v[1] * env, v[2] * env]
    });
    f
}

#[test]
fn criterion_1_projection_suite() {
    let n = 64;
    let extent = 2.0;
    let mut rng = rng_stream(2024, "acceptance-projection");
    let mut worst_div = 0.0f64;
    let mut worst_idem = 0.0f64;
    for _ in 0..50 {
        let f = band_limited_field(n, extent, &mut rng);
        let checks = projection_checks(&f);
        worst_div = worst_div.max(checks.divergence_sup / checks.input_sup);
        worst_idem = worst_idem.max(checks.idempotence_sup / checks.input_sup);
    }
    let mut worst_grad = 0.0f64;
    for trial in 0..5 {
        let mut g = GridField::scalar(extent, n);
        let c = 1.0 + 0.2 * trial as f64;
        g.fill_with(|x: Vec3| {
            vec![(-c * x.norm_sq() / (extent / 3.0).powi(2)).exp() * (1.0 + 0.3 * x[1])]
        });
        worst_grad = worst_grad.max(gradient_annihilation_residual(&g));
    }
    let passed = worst_div <= 1e-10 && worst_idem <= 1e-10 && worst_grad <= 1e-8;
    verdict(
        "1 (projection suite)",
        passed,
        &format!("div {worst_div:.2e}, idempotence {worst_idem:.2e}, gradient {worst_grad:.2e}"),
    );
}

#[test]
fn criterion_2_radial_annihilation() {
    let n = 64;
    let extent = 6.0;
    let mut j = GridField::vector(extent, n);
    j.fill_with(|x: Vec3| {
        let g = (-x.norm_sq()).exp();
        vec![x[0] * g, x[1] * g, x[2] * g]
    });
    let radial = projection_residual(&j);
    let mut control_field = GridField::vector(extent, n);
    control_field.fill_with(|x: Vec3| vec![(-x.norm_sq()).exp(), 0.0, 0.0]);
    let control = projection_residual(&control_field);
    let passed = radial <= 1e-8 && control >= 1e-1;
    verdict(
        "2 (radial annihilation)",
        passed,
        &format!("radial residual {radial:.2e}, non-radial control {control:.2e}"),
    );
}

#[test]
fn criterion_3_free_streaming_decay() {
    let t_end = 100.0;
    let base = SimConfig {
        r0: 1.0,
        p0: 1.0,
        amplitude: 1.0,
        grid_n: 64,
        box_half_width: 102.0,
        dt: 0.5,
        t_end,
        particle_count: 30_000_000,
        mode: Mode::FreeStream,
        seed: 42,
        record_every: 2,
        ..SimConfig::default()
    };
    let window = (10.0, 100.0);

    let out64 = run_simulation(&base).unwrap();
    let fit64 = fit_decay_exponent(&out64.series, SeriesColumn::Rho, window).unwrap();

    let mut coarse = base.clone();
    coarse.grid_n = 32;
    let out32 = run_simulation(&coarse).unwrap();
    let fit32 = fit_decay_exponent(&out32.series, SeriesColumn::Rho, window).unwrap();

    let shift = (fit64.exponent - fit32.exponent).abs();
    let in_range =
        (fit64.exponent + 3.0).abs() <= 0.1 && (fit32.exponent + 3.0).abs() <= 0.1 && shift <= 0.05;

    // Independent oracle: pushforward quadrature, smoothed to the deposit
    // scale, at three times.
    let f0 = build_initial_datum(&base).unwrap();
    let h = base.spacing();
    let mut worst_oracle = 0.0f64;
    for t in [30.0, 40.0, 50.0] {
        let rec = out64
            .series
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .unwrap();
        let oracle = oracles::free_stream_density_sup_cic(&f0, rec.t, h, 32, 120);
        worst_oracle = worst_oracle.max((rec.sup_rho - oracle).abs() / oracle);
    }
    let passed = in_range && worst_oracle <= 0.02;
    verdict(
        "3 (free-streaming decay)",
        passed,
        &format!(
            "exponents {:.3} (64^3) / {:.3} (32^3), shift {shift:.3}, oracle dev {worst_oracle:.4}",
            fit64.exponent, fit32.exponent
        ),
    );
}

#[test]
fn criterion_4_small_data_darwin_decay() {
    let cfg = SimConfig {
        r0: 1.0,
        p0: 1.0,
        amplitude: 1e-3,
        grid_n: 64,
        box_half_width: 41.0,
        dt: 0.2,
        t_end: 40.0,
        particle_count: 6_000_000,
        mode: Mode::Darwin,
        seed: 42,
        record_every: 2,
        symmetrize_markers: true,
        ..SimConfig::default()
    };
    let out = run_simulation(&cfg).unwrap();
    assert_eq!(out.manifest.termination, TerminationReason::Completed);
    let window = (5.0, 40.0);
    let fits = DecayFits {
        fields: fit_decay_exponent(&out.series, SeriesColumn::FieldSum, window).unwrap(),
        gradients: fit_decay_exponent(&out.series, SeriesColumn::GradientSum, window).unwrap(),
    };
    let bootstrap = check_bootstrap(&fits, 0.1);
    let passed = fits.fields.exponent <= -1.6 && bootstrap.passed;
    verdict(
        "4 (small-data Darwin decay)",
        passed,
        &format!(
            "field exponent {:.3}, gradient exponent {:.3}, bootstrap margins {:.3}/{:.3}",
            fits.fields.exponent,
            fits.gradients.exponent,
            bootstrap.field_margin,
            bootstrap.gradient_margin
        ),
    );
}

#[test]
fn criterion_5_degeneration_to_vlasov_poisson() {
    let cfg = SimConfig {
        r0: 1.0,
        p0: 1e-5,
        amplitude: 1e-4,
        grid_n: 64,
        box_half_width: 11.0,
        dt: 0.2,
        t_end: 10.0,
        particle_count: 2_000_000,
        mode: Mode::Darwin,
        seed: 42,
        symmetrize_markers: true,
        ..SimConfig::default()
    };
    let cmp = compare_radial(&cfg).unwrap();
    let passed = cmp.et_over_el <= 1e-6 && cmp.b_over_el <= 1e-6 && cmp.worst_rho_rel <= 0.05;
    verdict(
        "5 (degeneration to Vlasov-Poisson)",
        passed,
        &format!(
            "E_T/E_L {:.2e}, B/E_L {:.2e}, rho deviation {:.4}",
            cmp.et_over_el, cmp.b_over_el, cmp.worst_rho_rel
        ),
    );
}

#[test]
fn criterion_6_gronwall_verification() {
    let mut rng = rng_stream(7, "acceptance-gronwall");
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let problem = random_problem(&mut rng);
        let report = verify_gronwall(&problem, 1, &mut rng, 800);
        violations += report.violations.len();
        worst = worst.max(report.worst_ratio);
    }
    // Closed-form constant-c1 case: ratio (t-s)/(t+s), equal to one
    // exactly at s = 0 and strictly below elsewhere.
    let t = 2.0;
    let problem = GronwallProblem::constant(t, 0.7, 0.0, 0.0).unwrap();
    let closed = vdsim_core::gronwall::verify_single(&problem, &ForcingPattern::Positive, 2000);
    let closed_ok = closed.passed()
        && (closed.worst_ratio - 1.0).abs() <= 1e-9
        && closed.worst_s.abs() <= 1e-9;
    let passed = violations == 0 && closed_ok;
    verdict(
        "6 (Gronwall verification)",
        passed,
        &format!(
            "600 adversarial trials, {violations} violations, worst ratio {worst:.4}; closed form ratio {:.12} at s = {:.2e}",
            closed.worst_ratio, closed.worst_s
        ),
    );
}

#[test]
fn criterion_7_jacobian_growth() {
    // Free streaming: |det dX(0)/dp| = t^3 (1+|p|^2)^(-5/2) to 1e-6
    // relative over 64 markers.
    let mut rng = rng_stream(3, "acceptance-jacobian");
    let t = 10.0;
    let mut worst_rel = 0.0f64;
    for _ in 0..64 {
        let p = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let tape = free_streaming_tape(Vec3::ZERO, p, t, 50);
        let state = integrate_variational(&tape, 1);
        let det = state.dx_dp.det().abs();
        let closed = t.powi(3) * (1.0 + p.norm_sq()).powf(-2.5);
        worst_rel = worst_rel.max((det - closed).abs() / closed);
    }
    let free_ok = worst_rel <= 1e-6;

    // Weak-field run: the (1-beta)^3 floor with beta = 0.5 for all tracked
    // markers at t = 10.
    let cfg = SimConfig {
        r0: 1.0,
        p0: 1.0,
        amplitude: 1e-3,
        grid_n: 64,
        box_half_width: 11.0,
        dt: 0.2,
        t_end: 10.0,
        particle_count: 400_000,
        mode: Mode::Darwin,
        seed: 42,
        tracked_markers: 64,
        ..SimConfig::default()
    };
    let out = run_simulation(&cfg).unwrap();
    assert_eq!(out.manifest.termination, TerminationReason::Completed);
    let mut all_passed = true;
    let mut min_ratio = f64::INFINITY;
    for (slot, tape) in out.tapes.iter().enumerate() {
        let state = integrate_variational(tape, 1);
        let idx = out.tracked[slot];
        let report = jacobian_determinant_check(&state, cfg.t_end, out.ensemble.p[idx], 0.5);
        min_ratio = min_ratio.min(report.det_dpx / report.lower_bound);
        all_passed &= report.passed;
    }
    let passed = free_ok && all_passed;
    verdict(
        "7 (Jacobian growth)",
        passed,
        &format!(
            "free-streaming worst rel {worst_rel:.2e}; weak-field min det/floor ratio {min_ratio:.3} over {} markers",
            out.tapes.len()
        ),
    );
}

#[test]
fn criterion_8_smallness_scaling() {
    let base = SimConfig {
        r0: 1.0,
        p0: 1.0,
        amplitude: 1e-3,
        grid_n: 64,
        box_half_width: 11.0,
        dt: 0.2,
        t_end: 10.0,
        particle_count: 6_000_000,
        mode: Mode::Darwin,
        seed: 42,
        symmetrize_markers: true,
        ..SimConfig::default()
    };
    let spec = StudySpec {
        base,
        variable: SweepVariable::Amplitude,
        values: vec![1e-2, 1e-3, 1e-4],
    };
    let report = run_smallness_study(&spec).unwrap();
    let all_completed = report
        .members
        .iter()
        .all(|m| m.termination == TerminationReason::Completed);
    let passed =
        report.alpha_strictly_decreasing && report.fields_strictly_decreasing && all_completed;
    let alphas: Vec<String> = report
        .members
        .iter()
        .map(|m| format!("{:.3e}", m.alpha))
        .collect();
    verdict(
        "8 (smallness scaling)",
        passed,
        &format!(
            "alpha(delta) = [{}], monotone alpha {}, monotone fields {}",
            alphas.join(", "),
            report.alpha_strictly_decreasing,
            report.fields_strictly_decreasing
        ),
    );
}

#[test]
fn criterion_9_conservation_and_kinematics() {
    // Charge bit-stability and the momentum-support bound on a small
    // darwin run.
    let cfg = SimConfig {
        r0: 1.0,
        p0: 0.5,
        amplitude: 1e-3,
        grid_n: 32,
        box_half_width: 6.0,
        dt: 0.1,
        t_end: 5.0,
        particle_count: 200_000,
        mode: Mode::Darwin,
        seed: 42,
        ..SimConfig::default()
    };
    let out = run_simulation(&cfg).unwrap();
    let w0 = out.manifest.initial_total_weight;
    let charge_stable = out.series.iter().all(|r| r.total_charge == w0);
    let alpha = extract_alpha(&out.series, cfg.t_end).unwrap().alpha;
    let q_t = out.series.last().unwrap().q_t;
    let q_bound_ok = q_t <= cfg.p0 + 2.0 * alpha;

    // Boris gyromotion period against the closed form, at two time steps.
    let bmag = 2.0;
    let p0 = Vec3::new(0.7, 0.1, 0.0);
    let period = oracles::gyro_period(p0, bmag);
    let mut errs = Vec::new();
    for steps in [200usize, 400] {
        let dt = period / steps as f64;
        let mut e = GridField::vector(40.0, 16);
        e.fill(0.0);
        let mut b = GridField::vector(40.0, 16);
        b.fill_with(|_| vec![0.0, 0.0, bmag]);
        let mut ens = ParticleEnsemble::default();
        ens.push(Vec3::ZERO, p0, 1.0, 0.1);
        for step in 0..steps {
            push_markers_in(&mut ens, &e, &b, dt, step as f64 * dt).unwrap();
        }
        errs.push((ens.p[0] - p0).norm());
    }
    let second_order = errs[1] < errs[0] / 3.0 && errs[0] < 1e-3;

    let passed = charge_stable && q_bound_ok && second_order;
    verdict(
        "9 (conservation and kinematics)",
        passed,
        &format!(
            "charge bit-stable {charge_stable}, Q(t) = {q_t:.4} <= p0 + 2 alpha = {:.4}, gyro errors {:.2e}/{:.2e}",
            cfg.p0 + 2.0 * alpha,
            errs[0],
            errs[1]
        ),
    );
}
