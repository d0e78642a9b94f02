//! Development probe for sizing the acceptance configurations.

use std::time::Instant;
use vdsim_core::config::{Mode, SimConfig};
use vdsim_core::decay::{fit_decay_exponent, SeriesColumn};
use vdsim_core::diagnostics::extract_alpha;
use vdsim_core::initial::build_initial_datum;
use vdsim_core::oracles;
use vdsim_core::sim::run_simulation;

fn free_stream_probe(grid_n: usize, particles: usize) {
    let t_end = 100.0;
    let cfg = SimConfig {
        r0: 1.0,
        p0: 1.0,
        amplitude: 1.0,
        grid_n,
        box_half_width: 1.0 + t_end + 1.0,
        dt: 0.5,
        t_end,
        particle_count: particles,
        mode: Mode::FreeStream,
        seed: 42,
        record_every: 2,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let out = run_simulation(&cfg).unwrap();
    let fit = fit_decay_exponent(&out.series, SeriesColumn::Rho, (10.0, 100.0)).unwrap();
    println!(
        "free_stream n={grid_n} N={particles}: exponent {:.4} (residual {:.3}) in {:.1?}",
        fit.exponent,
        fit.residual,
        start.elapsed()
    );
    // Oracle comparison at three times.
    let f0 = build_initial_datum(&cfg).unwrap();
    let h = cfg.spacing();
    for t in [30.0, 40.0, 50.0] {
        let rec = out
            .series
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .unwrap();
        let oracle = oracles::free_stream_density_sup_cic(&f0, rec.t, h, 32, 120);
        println!(
            "  t={:.1}: grid sup {:.6e} cic-oracle sup {:.6e} rel {:.4}",
            rec.t,
            rec.sup_rho,
            oracle,
            (rec.sup_rho - oracle).abs() / oracle
        );
    }
}

fn darwin_probe(t_end: f64, particles: usize, dt: f64, record_every: usize, symmetrize: bool) {
    let cfg = SimConfig {
        r0: 1.0,
        p0: 0.3,
        amplitude: 1e-3,
        grid_n: 64,
        box_half_width: 1.0 + t_end,
        dt,
        t_end,
        particle_count: particles,
        mode: Mode::Darwin,
        seed: 42,
        record_every,
        symmetrize_markers: symmetrize,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let out = run_simulation(&cfg).unwrap();
    let elapsed = start.elapsed();
    println!(
        "darwin t_end={t_end} N={particles} dt={dt}: {:?} in {:.1?} ({:.2} s/step)",
        out.manifest.termination,
        elapsed,
        elapsed.as_secs_f64() / (cfg.n_steps() as f64)
    );
    let max_iters = out.manifest.per_step_iters.iter().max().unwrap();
    println!("  max fixed-point iters {max_iters}");
    let window = (5.0, t_end);
    if let Ok(fit) = fit_decay_exponent(&out.series, SeriesColumn::FieldSum, window) {
        println!("  field-sum exponent {:.4} residual {:.3}", fit.exponent, fit.residual);
    }
    if let Ok(fit) = fit_decay_exponent(&out.series, SeriesColumn::GradientSum, window) {
        println!(
            "  gradient-sum exponent {:.4} residual {:.3}",
            fit.exponent, fit.residual
        );
    }
    if let Ok(rep) = extract_alpha(&out.series, t_end) {
        println!("  alpha {:.4e} binding at t={:.2}", rep.alpha, rep.binding_time);
    }
    for rec in out.series.iter().step_by(out.series.len() / 8 + 1) {
        println!(
            "    t={:6.2} rho={:.3e} el={:.3e} et={:.3e} b={:.3e} gel={:.3e} get={:.3e} gb={:.3e} iters={}",
            rec.t, rec.sup_rho, rec.sup_el, rec.sup_et, rec.sup_b,
            rec.sup_grad_el, rec.sup_grad_et, rec.sup_grad_b, rec.fp_iters
        );
    }
}

fn radial_probe(p0: f64, delta: f64, particles: usize, grid_n: usize) {
    let t_end = 10.0;
    let cfg = SimConfig {
        r0: 1.0,
        p0,
        amplitude: delta,
        grid_n,
        box_half_width: 1.0 + t_end,
        dt: 0.2,
        t_end,
        particle_count: particles,
        mode: Mode::Darwin,
        seed: 42,
        symmetrize_markers: true,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let out = run_simulation(&cfg).unwrap();
    let max_el = out.series.iter().map(|r| r.sup_el).fold(0.0f64, f64::max);
    let max_et = out.series.iter().map(|r| r.sup_et).fold(0.0f64, f64::max);
    let max_b = out.series.iter().map(|r| r.sup_b).fold(0.0f64, f64::max);
    println!(
        "radial darwin p0={p0} delta={delta} N~{} n={grid_n}: {:?} in {:.1?}",
        out.ensemble.len(),
        out.manifest.termination,
        start.elapsed()
    );
    println!(
        "  max E_L {:.3e}; E_T/E_L {:.3e}; B/E_L {:.3e}",
        max_el,
        max_et / max_el,
        max_b / max_el
    );

    // Radial reference comparison.
    let mut rcfg = cfg.clone();
    rcfg.mode = Mode::RadialReference;
    let rout = run_simulation(&rcfg).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in out.series.iter().zip(&rout.series) {
        let rel = (a.sup_rho - b.sup_rho).abs() / b.sup_rho.max(1e-300);
        worst = worst.max(rel);
    }
    println!("  sup_rho vs radial reference: worst rel {:.4}", worst);
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("all");
    match what {
        "free" => {
            free_stream_probe(64, 200_000);
            free_stream_probe(128, 200_000);
        }
        "free-big" => {
            free_stream_probe(64, 30_000_000);
            free_stream_probe(32, 30_000_000);
        }
        "darwin-short" => darwin_probe(10.0, 200_000, 0.2, 1, false),
        "darwin-short-sym" => darwin_probe(10.0, 1_500_000, 0.2, 1, true),
        "darwin" => darwin_probe(40.0, 6_000_000, 0.2, 2, true),
        "radial" => {
            radial_probe(1e-5, 1e-4, 200_000, 64);
        }
        "radial-scan" => {
            radial_probe(1e-3, 1e-3, 200_000, 64);
            radial_probe(1e-4, 1e-4, 200_000, 64);
        }
        other => {
            eprintln!("unknown probe '{other}'");
        }
    }
}
