//! Run orchestration: the per-step loop (deposit, solve, diagnose, push),
//! run manifests, and the smallness-study driver.

use crate::config::{Mode, SimConfig};
use crate::darwin::{FieldSolver, FieldState};
use crate::decay::{check_bootstrap, default_fit_window, fit_decay_exponent, BootstrapCheck, DecayFits, SeriesColumn};
use crate::deposit::{deposit_charge_current, deposit_moments};
use crate::diagnostics::{extract_alpha, record_step, TimeSeriesRecord};
use crate::error::{Result, SimError};
use crate::grid::GridField;
use crate::initial::build_initial_datum;
use crate::math::{Mat3, Vec3};
use crate::particles::{sample_particles, ParticleEnsemble};
use crate::pusher::{push_markers_free, push_markers_in};
use crate::radial::{density_profile, push_radial, RadialEnsemble, RadialField};
use crate::variational::{TapeSample, TrajectoryTape};
use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Completed,
    FixedPointDivergence,
    MarkerEscape,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub code_version: String,
    pub seed: u64,
    pub start_unix: f64,
    pub end_unix: f64,
    pub per_step_iters: Vec<u32>,
    pub termination: TerminationReason,
    /// Human-readable anomalies (boundary contamination, reflections).
    pub warnings: Vec<String>,
    /// Shell reflections at the origin guard (radial mode only).
    pub radial_reflections: usize,
    /// Total marker weight at sampling time (bit-stable under transport).
    pub initial_total_weight: f64,
}

/// Everything a run produces, in memory; writers live in `io`.
pub struct RunOutput {
    pub manifest: RunManifest,
    pub series: Vec<TimeSeriesRecord>,
    /// (step index, charge density) snapshots at the configured cadence.
    pub snapshots: Vec<(usize, GridField)>,
    /// Tapes of the tracked markers (empty when tracking is off).
    pub tapes: Vec<TrajectoryTape>,
    /// Ensemble indices of the tracked markers.
    pub tracked: Vec<usize>,
    /// Final marker state.
    pub ensemble: ParticleEnsemble,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn mat3_from_jacobian(grids: &GridField, pos: Vec3) -> Mat3 {
    let mut vals = [0.0f64; 9];
    if grids.sample_all(pos, &mut vals).is_none() {
        return Mat3::ZERO;
    }
    Mat3([
        [vals[0], vals[1], vals[2]],
        [vals[3], vals[4], vals[5]],
        [vals[6], vals[7], vals[8]],
    ])
}

/// Run the configured simulation. Fixed-point divergence and marker escape
/// terminate early with the matching manifest reason; other failures are
/// hard errors.
pub fn run_simulation(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.mode == Mode::RadialReference {
        return run_radial_reference(config);
    }
    let start_unix = now_unix();
    let f0 = build_initial_datum(config)?;
    let mut ens = sample_particles(&f0, config)?;
    let initial_total_weight = ens.total_weight();
    let n = config.grid_n;
    let extent = config.box_half_width;
    let template = GridField::scalar(extent, n);
    let mut solver = match config.mode {
        Mode::FreeStream => None,
        _ => Some(FieldSolver::new(n, extent)),
    };

    let tracked: Vec<usize> = if config.tracked_markers > 0 && !ens.is_empty() {
        let stride = (ens.len() / config.tracked_markers).max(1);
        (0..ens.len())
            .step_by(stride)
            .take(config.tracked_markers)
            .collect()
    } else {
        Vec::new()
    };
    let mut tapes: Vec<TrajectoryTape> = tracked.iter().map(|_| TrajectoryTape::default()).collect();

    let n_steps = config.n_steps();
    let snapshot_stride = config.snapshot_stride();
    let mut series = Vec::new();
    let mut snapshots = Vec::new();
    let mut per_step_iters = Vec::new();
    let mut warnings = Vec::new();
    let mut q_running = 0.0f64;
    let mut prev_e_t: Option<GridField> = None;
    let mut termination = TerminationReason::Completed;

    for step in 0..=n_steps {
        let t = step as f64 * config.dt;
        let recording = step % config.record_every == 0;
        let snapshotting = step % snapshot_stride == 0;
        if config.mode == Mode::FreeStream && !recording && !snapshotting {
            // Field-free steps consume no moments; skip the deposit.
            per_step_iters.push(0);
            q_running = q_running.max(crate::diagnostics::momentum_support(&ens));
            if step < n_steps {
                push_markers_free(&mut ens, config.dt);
            }
            continue;
        }
        let deposit_result = if config.mode == Mode::FreeStream {
            deposit_charge_current(&ens, &template, t)
        } else {
            deposit_moments(&ens, &template, t)
        };
        let moments = match deposit_result {
            Ok(m) => m,
            Err(SimError::MarkerOutsideBox { .. }) => {
                termination = TerminationReason::MarkerEscape;
                break;
            }
            Err(e) => return Err(e),
        };

        let need_gradients = !tracked.is_empty() || recording;
        let mut fields = match config.mode {
            Mode::FreeStream => FieldState::zero(extent, n),
            Mode::Electrostatic => {
                let solver = solver.as_mut().expect("solver exists outside free_stream");
                let (phi, e_l) = solver.compute_electrostatic(&moments)?;
                let mut state = FieldState::zero(extent, n);
                state.phi = phi;
                state.e_l = e_l;
                state
            }
            Mode::Darwin => {
                let solver = solver.as_mut().expect("solver exists outside free_stream");
                let (phi, e_l) = solver.compute_electrostatic(&moments)?;
                let (a, b) = solver.compute_vector_potential(&moments)?;
                match solver.solve_transverse(
                    &moments,
                    &ens,
                    &e_l,
                    &b,
                    prev_e_t.as_ref(),
                    config.fixed_point_tol,
                    config.fixed_point_max_iter,
                    t,
                ) {
                    Ok((e_t, iters, residual, _sources)) => {
                        let mut state = FieldState::zero(extent, n);
                        state.phi = phi;
                        state.e_l = e_l;
                        state.a = a;
                        state.b = b;
                        state.e_t = e_t;
                        state.fixed_point_iters = iters;
                        state.fixed_point_residual = residual;
                        state
                    }
                    Err(SimError::FixedPointDiverged { .. }) => {
                        termination = TerminationReason::FixedPointDivergence;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            Mode::RadialReference => unreachable!(),
        };
        if config.mode != Mode::FreeStream && need_gradients {
            let solver = solver.as_mut().expect("solver exists outside free_stream");
            fields.gradients = Some(solver.field_gradients(&fields.e_l, &fields.e_t, &fields.b));
        }
        per_step_iters.push(fields.fixed_point_iters);

        if step == 0 && config.mode != Mode::FreeStream {
            let contamination = crate::projection::boundary_contamination(&moments.rho);
            if contamination > 1e-8 {
                warnings.push(format!(
                    "charge density touches the unpadded boundary (relative magnitude {contamination:.2e})"
                ));
            }
        }

        if recording {
            series.push(record_step(&moments, &fields, &ens, t, q_running));
        }
        q_running = q_running.max(crate::diagnostics::momentum_support(&ens));

        if !tracked.is_empty() {
            let e_total = fields.e_total();
            let grads = fields.gradients.as_ref().expect("gradients on for tracking");
            let mut grad_e_total = grads.grad_e_l.clone();
            grad_e_total
                .data_mut()
                .iter_mut()
                .zip(grads.grad_e_t.data().iter())
                .for_each(|(a, b)| *a += b);
            for (slot, &idx) in tracked.iter().enumerate() {
                let x = ens.x[idx];
                tapes[slot].record(TapeSample {
                    t,
                    x,
                    p: ens.p[idx],
                    e: e_total.sample_vector(x).unwrap_or(Vec3::ZERO),
                    b: fields.b.sample_vector(x).unwrap_or(Vec3::ZERO),
                    grad_e: mat3_from_jacobian(&grad_e_total, x),
                    grad_b: mat3_from_jacobian(&grads.grad_b, x),
                });
            }
        }

        if snapshotting {
            snapshots.push((step, moments.rho.clone()));
        }

        if step < n_steps {
            let push_result = match config.mode {
                Mode::FreeStream => {
                    push_markers_free(&mut ens, config.dt);
                    Ok(())
                }
                _ => {
                    let e_total = fields.e_total();
                    push_markers_in(&mut ens, &e_total, &fields.b, config.dt, t)
                }
            };
            match push_result {
                Ok(()) => {}
                Err(SimError::MarkerOutsideBox { .. }) => {
                    termination = TerminationReason::MarkerEscape;
                    break;
                }
                Err(e) => return Err(e),
            }
            prev_e_t = Some(fields.e_t.clone());
        }
    }

    Ok(RunOutput {
        manifest: RunManifest {
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            start_unix,
            end_unix: now_unix(),
            per_step_iters,
            termination,
            warnings,
            radial_reflections: 0,
            initial_total_weight,
        },
        series,
        snapshots,
        tapes,
        tracked,
        ensemble: ens,
    })
}

/// The spherically symmetric reference path: shell dynamics with the
/// enclosed-charge field; E_T and B columns are identically zero by
/// construction.
fn run_radial_reference(config: &SimConfig) -> Result<RunOutput> {
    let start_unix = now_unix();
    let f0 = build_initial_datum(config)?;
    let ens3 = sample_particles(&f0, config)?;
    let initial_total_weight = ens3.total_weight();
    let mut shells = RadialEnsemble::from_ensemble(&ens3);
    let dr = config.spacing();
    let r_max = config.box_half_width;
    let r_min = 1e-6 * config.r0;
    let n_steps = config.n_steps();
    let mut series = Vec::new();
    let mut reflections = 0usize;
    let mut q_running = 0.0f64;

    for step in 0..=n_steps {
        let t = step as f64 * config.dt;
        let field = RadialField::build(&shells);
        if step % config.record_every == 0 {
            let profile = density_profile(&shells, dr, r_max);
            let sup_rho = profile.iter().map(|&(_, v)| v).fold(0.0, f64::max);
            // Radial current profile: same binning of w * v_r.
            let sup_j = radial_current_sup(&shells, dr, r_max);
            let sup_el = profile
                .iter()
                .map(|&(r, _)| field.field(r.max(dr * 0.5)).unwrap_or(0.0))
                .fold(0.0, f64::max);
            q_running = q_running.max(shells.momentum_support());
            series.push(TimeSeriesRecord {
                t,
                sup_rho,
                sup_j,
                sup_el,
                sup_et: 0.0,
                sup_b: 0.0,
                sup_grad_el: 0.0,
                sup_grad_et: 0.0,
                sup_grad_b: 0.0,
                q_t: q_running,
                total_charge: shells.total_weight(),
                fp_iters: 0,
            });
        }
        if step < n_steps {
            reflections += push_radial(&mut shells, &field, config.dt, r_min);
        }
    }

    let mut warnings = Vec::new();
    if reflections > 0 {
        warnings.push(format!("{reflections} shell reflections at the origin guard"));
    }
    Ok(RunOutput {
        manifest: RunManifest {
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            start_unix,
            end_unix: now_unix(),
            per_step_iters: vec![0; n_steps + 1],
            termination: TerminationReason::Completed,
            warnings,
            radial_reflections: reflections,
            initial_total_weight,
        },
        series,
        snapshots: Vec::new(),
        tapes: Vec::new(),
        tracked: Vec::new(),
        ensemble: ens3,
    })
}

fn radial_current_sup(shells: &RadialEnsemble, dr: f64, r_max: f64) -> f64 {
    let nbins = (r_max / dr).ceil() as usize;
    let mut flux = vec![0.0f64; nbins];
    for i in 0..shells.len() {
        let b = (shells.r[i] / dr) as usize;
        if b < nbins {
            let gamma = (1.0
                + shells.pr[i] * shells.pr[i]
                + shells.ell2[i] / (shells.r[i] * shells.r[i]))
            .sqrt();
            flux[b] += shells.w[i] * shells.pr[i] / gamma;
        }
    }
    (0..nbins)
        .map(|b| {
            let r_lo = b as f64 * dr;
            let r_hi = r_lo + dr;
            let vol = 4.0 / 3.0 * std::f64::consts::PI * (r_hi.powi(3) - r_lo.powi(3));
            (flux[b] / vol).abs()
        })
        .fold(0.0, f64::max)
}

/// Side-by-side measurement of a 3D run against the spherically symmetric
/// reference on the same configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialComparison {
    /// Worst relative deviation of sup rho across the common time levels.
    pub worst_rho_rel: f64,
    /// max_t sup E_T divided by max_t sup E_L of the 3D run.
    pub et_over_el: f64,
    /// max_t sup B divided by max_t sup E_L of the 3D run.
    pub b_over_el: f64,
    pub series_3d: Vec<TimeSeriesRecord>,
    pub series_radial: Vec<TimeSeriesRecord>,
}

/// Run the 3D configuration as given and the shell reference on the same
/// initial data, then compare density decay and transverse-field leakage.
pub fn compare_radial(config: &SimConfig) -> Result<RadialComparison> {
    let out3 = run_simulation(config)?;
    let mut rcfg = config.clone();
    rcfg.mode = Mode::RadialReference;
    let outr = run_simulation(&rcfg)?;
    let max_el = out3.series.iter().map(|r| r.sup_el).fold(0.0f64, f64::max);
    let max_et = out3.series.iter().map(|r| r.sup_et).fold(0.0f64, f64::max);
    let max_b = out3.series.iter().map(|r| r.sup_b).fold(0.0f64, f64::max);
    let mut worst = 0.0f64;
    for (a, b) in out3.series.iter().zip(&outr.series) {
        debug_assert!((a.t - b.t).abs() < 1e-12);
        if b.sup_rho > 0.0 {
            worst = worst.max((a.sup_rho - b.sup_rho).abs() / b.sup_rho);
        }
    }
    Ok(RadialComparison {
        worst_rho_rel: worst,
        et_over_el: if max_el > 0.0 { max_et / max_el } else { 0.0 },
        b_over_el: if max_el > 0.0 { max_b / max_el } else { 0.0 },
        series_3d: out3.series,
        series_radial: outr.series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Amplitude,
    GridN,
    ParticleCount,
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub base: SimConfig,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.len() < 3 {
            return Err(SimError::DegenerateSweep(self.values.len()));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !increasing && !decreasing {
            return Err(SimError::InvalidConfig(
                "sweep values must be strictly monotone".into(),
            ));
        }
        Ok(())
    }

    pub fn member_config(&self, value: f64) -> SimConfig {
        let mut cfg = self.base.clone();
        match self.variable {
            SweepVariable::Amplitude => cfg.amplitude = value,
            SweepVariable::GridN => cfg.grid_n = value as usize,
            SweepVariable::ParticleCount => cfg.particle_count = value as usize,
        }
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyMember {
    pub value: f64,
    pub alpha: f64,
    pub max_field_sup: f64,
    pub termination: TerminationReason,
    pub rho_exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub variable: SweepVariable,
    pub members: Vec<StudyMember>,
    pub alpha_strictly_decreasing: bool,
    pub fields_strictly_decreasing: bool,
    pub bootstrap_smallest: Option<BootstrapCheck>,
    pub passed: bool,
}

/// Sweep the configured variable. For amplitude sweeps the report asserts
/// strict monotone decrease of alpha and of the maximum field sup-norm in
/// delta, and runs the bootstrap check on the smallest amplitude.
pub fn run_smallness_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let mut members = Vec::new();
    let mut member_series = Vec::new();
    for &value in &spec.values {
        let cfg = spec.member_config(value);
        let out = run_simulation(&cfg)?;
        if out.manifest.termination != TerminationReason::Completed {
            return Err(SimError::InvalidConfig(format!(
                "study member {value} terminated with {:?}",
                out.manifest.termination
            )));
        }
        let alpha = extract_alpha(&out.series, cfg.t_end)?.alpha;
        let max_field_sup = out
            .series
            .iter()
            .map(TimeSeriesRecord::field_sum)
            .fold(0.0, f64::max);
        let rho_exponent = fit_decay_exponent(
            &out.series,
            SeriesColumn::Rho,
            default_fit_window(cfg.r0, cfg.t_end),
        )
        .ok()
        .map(|f| f.exponent);
        members.push(StudyMember {
            value,
            alpha,
            max_field_sup,
            termination: out.manifest.termination,
            rho_exponent,
        });
        member_series.push(out.series);
    }
    // Order members by decreasing sweep value for the delta-monotonicity
    // statements.
    let mut by_value: Vec<usize> = (0..members.len()).collect();
    by_value.sort_by(|&a, &b| members[b].value.total_cmp(&members[a].value));
    let alpha_strictly_decreasing = by_value
        .windows(2)
        .all(|w| members[w[1]].alpha < members[w[0]].alpha)
        || by_value.iter().all(|&m| members[m].alpha == 0.0);
    let fields_strictly_decreasing = by_value
        .windows(2)
        .all(|w| members[w[1]].max_field_sup < members[w[0]].max_field_sup)
        || by_value.iter().all(|&m| members[m].max_field_sup == 0.0);

    // Bootstrap closes on the smallest amplitude (vacuous for field-free
    // sweeps, where the fit has nothing positive to consume).
    let smallest_idx = *by_value.last().unwrap();
    let bootstrap_smallest = if spec.variable == SweepVariable::Amplitude
        && members[smallest_idx].max_field_sup > 0.0
    {
        let window = default_fit_window(spec.base.r0, spec.base.t_end);
        let fits = DecayFits {
            fields: fit_decay_exponent(&member_series[smallest_idx], SeriesColumn::FieldSum, window)?,
            gradients: fit_decay_exponent(
                &member_series[smallest_idx],
                SeriesColumn::GradientSum,
                window,
            )?,
        };
        Some(check_bootstrap(&fits, 0.1))
    } else {
        None
    };

    let passed = alpha_strictly_decreasing
        && fields_strictly_decreasing
        && bootstrap_smallest.map(|b| b.passed).unwrap_or(true);
    Ok(StudyReport {
        variable: spec.variable,
        members,
        alpha_strictly_decreasing,
        fields_strictly_decreasing,
        bootstrap_smallest,
        passed,
    })
}
