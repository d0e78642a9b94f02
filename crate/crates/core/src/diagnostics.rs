//! Per-step measurements: sup norms, momentum support, and the
//! free-streaming parameter alpha.

use crate::darwin::FieldState;
use crate::deposit::Moments;
use crate::error::{Result, SimError};
use crate::particles::ParticleEnsemble;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub sup_rho: f64,
    pub sup_j: f64,
    pub sup_el: f64,
    pub sup_et: f64,
    pub sup_b: f64,
    pub sup_grad_el: f64,
    pub sup_grad_et: f64,
    pub sup_grad_b: f64,
    /// Running maximum of |p| up to time t.
    pub q_t: f64,
    pub total_charge: f64,
    pub fp_iters: u32,
}

impl TimeSeriesRecord {
    pub fn field_sum(&self) -> f64 {
        self.sup_et + self.sup_el + self.sup_b
    }

    pub fn gradient_sum(&self) -> f64 {
        self.sup_grad_et + self.sup_grad_el + self.sup_grad_b
    }
}

/// Largest |p| over markers carrying weight.
pub fn momentum_support(ens: &ParticleEnsemble) -> f64 {
    ens.p
        .iter()
        .zip(&ens.w)
        .filter(|(_, &w)| w != 0.0)
        .map(|(p, _)| p.norm())
        .fold(0.0, f64::max)
}

/// Assemble the record for one time level. `prev_q` carries the running
/// momentum-support maximum; gradient sup norms come from the field
/// state's gradient grids when present (free streaming has none and
/// reports zero).
pub fn record_step(
    moments: &Moments,
    fields: &FieldState,
    ens: &ParticleEnsemble,
    t: f64,
    prev_q: f64,
) -> TimeSeriesRecord {
    let (gel, get, gb) = match &fields.gradients {
        Some(g) => (
            g.grad_e_l.sup_norm(),
            g.grad_e_t.sup_norm(),
            g.grad_b.sup_norm(),
        ),
        None => (0.0, 0.0, 0.0),
    };
    TimeSeriesRecord {
        t,
        sup_rho: moments.rho.sup_norm(),
        sup_j: moments.j.sup_norm(),
        sup_el: fields.e_l.sup_norm(),
        sup_et: fields.e_t.sup_norm(),
        sup_b: fields.b.sup_norm(),
        sup_grad_el: gel,
        sup_grad_et: get,
        sup_grad_b: gb,
        q_t: momentum_support(ens).max(prev_q),
        total_charge: ens.total_weight(),
        fp_iters: fields.fixed_point_iters,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingBranch {
    Fields,
    Gradients,
}

/// The smallest alpha for which the free-streaming condition holds on
/// [0, a]: fields bounded by alpha (1+t)^(-3/2) and gradients by
/// alpha (1+t)^(-5/2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreeStreamReport {
    pub alpha: f64,
    pub a: f64,
    pub binding_time: f64,
    pub binding_branch: BindingBranch,
}

pub fn extract_alpha(series: &[TimeSeriesRecord], a: f64) -> Result<FreeStreamReport> {
    if series.is_empty() || series[0].t > 0.0 || series.iter().all(|r| r.t < a) {
        return Err(SimError::EmptySeries);
    }
    let mut alpha = 0.0f64;
    let mut binding_time = 0.0;
    let mut binding_branch = BindingBranch::Fields;
    for rec in series.iter().filter(|r| r.t <= a) {
        let field_need = rec.field_sum() * (1.0 + rec.t).powf(1.5);
        let grad_need = rec.gradient_sum() * (1.0 + rec.t).powf(2.5);
        if field_need > alpha {
            alpha = field_need;
            binding_time = rec.t;
            binding_branch = BindingBranch::Fields;
        }
        if grad_need > alpha {
            alpha = grad_need;
            binding_time = rec.t;
            binding_branch = BindingBranch::Gradients;
        }
    }
    Ok(FreeStreamReport {
        alpha,
        a,
        binding_time,
        binding_branch,
    })
}
