//! Command-line driver: run configurations, sweep studies, and the
//! standalone verification commands.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vdsim_core::config::{rng_stream, SimConfig};
use vdsim_core::decay::{fit_decay_exponent, SeriesColumn};
use vdsim_core::diagnostics::extract_alpha;
use vdsim_core::gronwall::{random_problem, verify_gronwall};
use vdsim_core::grid::GridField;
use vdsim_core::io;
use vdsim_core::math::Vec3;
use vdsim_core::projection::{
    gradient_annihilation_residual, projection_checks, projection_residual,
};
use vdsim_core::sim::{compare_radial, run_simulation, run_smallness_study, TerminationReason};

#[derive(Parser)]
#[command(
    name = "vdsim",
    about = "Relativistic Vlasov-Darwin kinetic simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a key = value configuration file.
    Run {
        config: PathBuf,
        /// Output directory (default: <config stem>_out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep study from a study configuration file.
    Study {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the Gronwall-type bound on random problems.
    VerifyGronwall {
        /// Number of random problems.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exercise the divergence-free projection identities.
    CheckProjection {
        /// Grid nodes per axis (padded internally to twice this).
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Number of random band-limited fields.
        #[arg(long, default_value_t = 50)]
        fields: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a configuration in 3D and against the radial reference solver.
    CompareRadial { config: PathBuf },
}

fn init_threads() {
    if let Ok(v) = std::env::var("VDSIM_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn cmd_run(config_path: &Path, out: Option<PathBuf>) -> Result<ExitCode, String> {
    let cfg = SimConfig::from_file(config_path).map_err(|e| e.to_string())?;
    let out_dir = out.unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        PathBuf::from(format!("{stem}_out"))
    });
    std::fs::create_dir_all(out_dir.join("snapshots"))
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let output = run_simulation(&cfg).map_err(|e| e.to_string())?;
    io::write_timeseries(&output.series, &out_dir.join("timeseries.csv"))
        .map_err(|e| e.to_string())?;
    io::write_manifest(&output.manifest, &out_dir.join("manifest.json"))
        .map_err(|e| e.to_string())?;
    for (step, rho) in &output.snapshots {
        let path = out_dir.join(format!("snapshots/rho_{step:06}.vdgf"));
        io::write_snapshot(rho, &path).map_err(|e| e.to_string())?;
    }
    for warning in &output.manifest.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "{} steps recorded, termination: {:?}, output in {}",
        output.series.len(),
        output.manifest.termination,
        out_dir.display()
    );
    if let Ok(rep) = extract_alpha(&output.series, cfg.t_end) {
        println!(
            "free-streaming parameter alpha = {:.6e} (binding at t = {:.3}, {:?})",
            rep.alpha, rep.binding_time, rep.binding_branch
        );
    }
    Ok(match output.manifest.termination {
        TerminationReason::Completed => ExitCode::SUCCESS,
        TerminationReason::FixedPointDivergence => ExitCode::from(2),
        TerminationReason::MarkerEscape => ExitCode::from(3),
    })
}

fn cmd_study(config_path: &Path, out: Option<PathBuf>) -> Result<ExitCode, String> {
    let spec = io::study_from_file(config_path).map_err(|e| e.to_string())?;
    let report = run_smallness_study(&spec).map_err(|e| e.to_string())?;
    println!("sweep over {:?}:", report.variable);
    for m in &report.members {
        println!(
            "  value {:>12.6e}: alpha {:>12.6e}, max field sup {:>12.6e}{}",
            m.value,
            m.alpha,
            m.max_field_sup,
            m.rho_exponent
                .map(|e| format!(", rho exponent {e:.3}"))
                .unwrap_or_default()
        );
    }
    println!(
        "alpha strictly decreasing: {}; fields strictly decreasing: {}",
        report.alpha_strictly_decreasing, report.fields_strictly_decreasing
    );
    if let Some(b) = report.bootstrap_smallest {
        println!(
            "bootstrap at smallest amplitude: passed = {} (field margin {:.3}, gradient margin {:.3})",
            b.passed, b.field_margin, b.gradient_margin
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("study.json"), json).map_err(|e| e.to_string())?;
    }
    println!("study passed: {}", report.passed);
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_verify_gronwall(trials: usize, seed: u64) -> ExitCode {
    let mut rng = rng_stream(seed, "gronwall-cli");
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..trials {
        let problem = random_problem(&mut rng);
        let report = verify_gronwall(&problem, 1, &mut rng, 800);
        worst = worst.max(report.worst_ratio);
        violations += report.violations.len();
    }
    println!(
        "{trials} random problems x 3 forcing patterns: {violations} violations, worst ratio {worst:.6}"
    );
    if violations == 0 {
        println!("PASS: bound held on every trial");
        ExitCode::SUCCESS
    } else {
        println!("FAIL: the proven bound was violated; this flags an implementation defect");
        ExitCode::FAILURE
    }
}

fn band_limited_field(n: usize, extent: f64, rng: &mut impl rand::Rng) -> GridField {
    // Low-order Fourier modes under a Gaussian envelope: smooth, compact
    // to near round-off, spectrally contained.
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

fn cmd_check_projection(grid: usize, fields: usize, seed: u64) -> ExitCode {
    let extent = 2.0;
    let mut rng = rng_stream(seed, "projection-cli");
    let mut worst_div = 0.0f64;
    let mut worst_idem = 0.0f64;
    for _ in 0..fields {
        let f = band_limited_field(grid, extent, &mut rng);
        let checks = projection_checks(&f);
        worst_div = worst_div.max(checks.divergence_sup / checks.input_sup);
        worst_idem = worst_idem.max(checks.idempotence_sup / checks.input_sup);
    }
    // Gradient annihilation on a scalar bump.
    let mut g = GridField::scalar(extent, grid);
    g.fill_with(|x: Vec3| vec![(-x.norm_sq() / (extent / 3.0).powi(2)).exp() * (1.0 + 0.3 * x[0])]);
    let grad_res = gradient_annihilation_residual(&g);
    // Radial annihilation and its non-radial control.
    let mut j = GridField::vector(6.0, grid);
    j.fill_with(|x: Vec3| {
        let g = (-x.norm_sq()).exp();
        vec![x[0] * g, x[1] * g, x[2] * g]
    });
    let radial = projection_residual(&j);
    let mut jc = GridField::vector(6.0, grid);
    jc.fill_with(|x: Vec3| vec![(-x.norm_sq()).exp(), 0.0, 0.0]);
    let control = projection_residual(&jc);
    println!(
        "projection identities over {fields} random band-limited fields at {grid}^3 (padded {}^3):",
        2 * grid
    );
    println!("  worst relative |div P F|      = {worst_div:.3e}");
    println!("  worst relative |P P F - P F|  = {worst_idem:.3e}");
    println!("  gradient annihilation residual = {grad_res:.3e}");
    println!("  radial annihilation residual   = {radial:.3e} (non-radial control {control:.3e})");
    let pass = worst_div <= 1e-10
        && worst_idem <= 1e-10
        && grad_res <= 1e-8
        && radial <= 1e-8
        && control >= 0.1;
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_compare_radial(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = SimConfig::from_file(config_path).map_err(|e| e.to_string())?;
    let cmp = compare_radial(&cfg).map_err(|e| e.to_string())?;
    println!(
        "worst sup-rho deviation vs radial reference: {:.3e}",
        cmp.worst_rho_rel
    );
    println!(
        "transverse leakage: max E_T / max E_L = {:.3e}, max B / max E_L = {:.3e}",
        cmp.et_over_el, cmp.b_over_el
    );
    if let Ok(fit) = fit_decay_exponent(
        &cmp.series_3d,
        SeriesColumn::Rho,
        vdsim_core::decay::default_fit_window(cfg.r0, cfg.t_end),
    ) {
        println!("3d rho decay exponent: {:.3}", fit.exponent);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Study { config, out } => cmd_study(&config, out),
        Command::VerifyGronwall { trials, seed } => Ok(cmd_verify_gronwall(trials, seed)),
        Command::CheckProjection { grid, fields, seed } => {
            Ok(cmd_check_projection(grid, fields, seed))
        }
        Command::CompareRadial { config } => cmd_compare_radial(&config),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
