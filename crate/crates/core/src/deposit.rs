//! Cloud-in-cell deposition of particle moments onto the grid.
//!
//! Trilinear weights sum to one, so the deposited charge equals the summed
//! marker weight exactly (up to rounding). Accumulation is parallel over
//! output components with a fixed marker order per component, which keeps
//! results independent of the thread count.

use crate::error::{Result, SimError};
use crate::grid::GridField;
use crate::kinematics::relativistic_velocity;
use crate::math::Vec3;
use crate::particles::ParticleEnsemble;
use rayon::prelude::*;

/// Velocity moments of the marker ensemble: charge density rho, current
/// density j and the second moment M = integral of f v (x) v dp, stored as
/// 9 scalar fields (row-major tensor components).
#[derive(Debug, Clone)]
pub struct Moments {
    pub rho: GridField,
    pub j: GridField,
    pub m: GridField,
}

impl Moments {
    pub fn zeros(extent: f64, n: usize) -> Self {
        Moments {
            rho: GridField::scalar(extent, n),
            j: GridField::vector(extent, n),
            m: GridField::zeros(extent, n, 9),
        }
    }
}

struct Stencils {
    base: Vec<[usize; 3]>,
    frac: Vec<[f64; 3]>,
}

fn compute_stencils(
    ens: &ParticleEnsemble,
    template: &GridField,
    t: f64,
) -> Result<Stencils> {
    let mut base = vec![[0usize; 3]; ens.len()];
    let mut frac = vec![[0f64; 3]; ens.len()];
    let h = template.spacing();
    let limit = template.extent - h;
    let results: Vec<Option<usize>> = base
        .par_iter_mut()
        .zip(frac.par_iter_mut())
        .enumerate()
        .map(|(i, (b, f))| match template.cic_stencil(ens.x[i]) {
            Some((bb, ff)) => {
                *b = bb;
                *f = ff;
                None
            }
            None => Some(i),
        })
        .collect();
    if let Some(bad) = results.into_iter().flatten().next() {
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
    Ok(Stencils { base, frac })
}

fn scatter_component(
    out: &mut [f64],
    n: usize,
    stencils: &Stencils,
    values: impl Fn(usize) -> f64 + Sync,
    inv_cell_volume: f64,
) {
    for i in 0..stencils.base.len() {
        let v = values(i) * inv_cell_volume;
        for (node, w) in GridField::stencil_nodes(n, stencils.base[i], stencils.frac[i]) {
            out[node] += v * w;
        }
    }
}

/// Deposit charge, current, and second moment. Errors if any marker's CIC
/// stencil leaves the grid.
pub fn deposit_moments(
    ens: &ParticleEnsemble,
    template: &GridField,
    t: f64,
) -> Result<Moments> {
    deposit_moments_impl(ens, template, t, true)
}

/// Charge and current only; the second moment stays zero. Field-free runs
/// never consume M, and it is two thirds of the deposit cost.
pub fn deposit_charge_current(
    ens: &ParticleEnsemble,
    template: &GridField,
    t: f64,
) -> Result<Moments> {
    deposit_moments_impl(ens, template, t, false)
}

fn deposit_moments_impl(
    ens: &ParticleEnsemble,
    template: &GridField,
    t: f64,
    include_stress: bool,
) -> Result<Moments> {
    let n = template.n;
    let stencils = compute_stencils(ens, template, t)?;
    let vel: Vec<Vec3> = ens.p.par_iter().map(|&p| relativistic_velocity(p)).collect();
    let inv_vol = 1.0 / template.spacing().powi(3);

    let mut moments = Moments::zeros(template.extent, n);
    // (field, component-within-field) pairs flattened so rayon can hand one
    // output plane to each task.
    let mut planes: Vec<(&mut [f64], usize)> = Vec::new();
    planes.push((moments.rho.comp_mut(0), 100));
    {
        let j = &mut moments.j;
        // Split borrow: each component slice is disjoint.
        let (j0, rest) = j.data_mut().split_at_mut(n * n * n);
        let (j1, j2) = rest.split_at_mut(n * n * n);
        planes.push((j0, 0));
        planes.push((j1, 1));
        planes.push((j2, 2));
    }
    if include_stress {
        let mdata = moments.m.data_mut();
        let nn = n * n * n;
        let mut rest = mdata;
        for c in 0..9 {
            let (head, tail) = rest.split_at_mut(nn);
            planes.push((head, 10 + c));
            rest = tail;
        }
    }

    planes.into_par_iter().for_each(|(out, tag)| match tag {
        100 => scatter_component(out, n, &stencils, |i| ens.w[i], inv_vol),
        c @ 0..=2 => scatter_component(out, n, &stencils, |i| ens.w[i] * vel[i][c], inv_vol),
        c => {
            let (row, col) = ((c - 10) / 3, (c - 10) % 3);
            // v_row * v_col first: multiplication commutes bitwise, so the
            // deposited tensor is exactly symmetric.
            scatter_component(
                out,
                n,
                &stencils,
                |i| ens.w[i] * (vel[i][row] * vel[i][col]),
                inv_vol,
            )
        }
    });
    Ok(moments)
}

/// Deposit one vector value per marker (used for the force-moment source
/// G2, where the value is the per-marker Lorentz response).
pub fn deposit_vector_values(
    ens: &ParticleEnsemble,
    values: &[Vec3],
    template: &GridField,
    t: f64,
) -> Result<GridField> {
    assert_eq!(values.len(), ens.len());
    let n = template.n;
    let stencils = compute_stencils(ens, template, t)?;
    let inv_vol = 1.0 / template.spacing().powi(3);
    let mut out = GridField::vector(template.extent, n);
    let nn = n * n * n;
    let (c0, rest) = out.data_mut().split_at_mut(nn);
    let (c1, c2) = rest.split_at_mut(nn);
    [(c0, 0usize), (c1, 1), (c2, 2)]
        .into_par_iter()
        .for_each(|(plane, c)| {
            scatter_component(plane, n, &stencils, |i| values[i][c], inv_vol)
        });
    Ok(out)
}
