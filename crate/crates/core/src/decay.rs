//! Decay-exponent extraction and the bootstrap strict-improvement check.

use crate::diagnostics::TimeSeriesRecord;
use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Which column of the time series a fit consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesColumn {
    Rho,
    J,
    /// sup E_T + sup E_L + sup B.
    FieldSum,
    /// sup grad E_T + sup grad E_L + sup grad B.
    GradientSum,
}

impl SeriesColumn {
    pub fn value(&self, rec: &TimeSeriesRecord) -> f64 {
        match self {
            SeriesColumn::Rho => rec.sup_rho,
            SeriesColumn::J => rec.sup_j,
            SeriesColumn::FieldSum => rec.field_sum(),
            SeriesColumn::GradientSum => rec.gradient_sum(),
        }
    }
}

/// Least-squares power-law fit in log-log coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

pub fn fit_decay_exponent(
    series: &[TimeSeriesRecord],
    column: SeriesColumn,
    window: (f64, f64),
) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, column.value(r)))
        .collect();
    if points.len() < 2 {
        return Err(SimError::EmptySeries);
    }
    if points.iter().any(|&(t, v)| t <= 0.0 || v <= 0.0) {
        return Err(SimError::NonpositiveFitValues {
            lo: window.0,
            hi: window.1,
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let exponent = (n * sxy - sx * sy) / denom;
    let intercept = (sy - exponent * sx) / n;
    let residual = (logs
        .iter()
        .map(|&(x, y)| {
            let d = y - (intercept + exponent * x);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        exponent,
        intercept,
        window,
        residual,
    })
}

/// Fits of the field and gradient sums on a common window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFits {
    pub fields: DecayFit,
    pub gradients: DecayFit,
}

/// Outcome of the strict-improvement (bootstrap-closing) check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapCheck {
    pub passed: bool,
    /// How far below -3/2 the field exponent sits.
    pub field_margin: f64,
    /// How far below -5/2 the gradient exponent sits.
    pub gradient_margin: f64,
    pub margin_min: f64,
}

/// The empirical analogue of the bootstrap closing: the measured decay
/// must be strictly faster than the free-streaming hypothesis requires,
/// by at least `margin_min` in both exponents.
pub fn check_bootstrap(fits: &DecayFits, margin_min: f64) -> BootstrapCheck {
    let field_margin = -1.5 - fits.fields.exponent;
    let gradient_margin = -2.5 - fits.gradients.exponent;
    BootstrapCheck {
        passed: field_margin >= margin_min && gradient_margin >= margin_min,
        field_margin,
        gradient_margin,
        margin_min,
    }
}

/// Default fit window for a run: [max(5, 2 r0), 0.8 t_end]. The early
/// interval is polluted by the support still overlapping its initial
/// position.
pub fn default_fit_window(r0: f64, t_end: f64) -> (f64, f64) {
    (5.0f64.max(2.0 * r0), 0.8 * t_end)
}
