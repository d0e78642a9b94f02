//! Run configuration: the flat `key = value` format, validation, and the
//! named-stream RNG splitting scheme.

use crate::error::{Result, SimError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Darwin,
    FreeStream,
    Electrostatic,
    RadialReference,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "darwin" => Ok(Mode::Darwin),
            "free_stream" => Ok(Mode::FreeStream),
            "electrostatic" => Ok(Mode::Electrostatic),
            "radial_reference" => Ok(Mode::RadialReference),
            other => Err(format!(
                "unknown mode '{other}' (expected darwin, free_stream, electrostatic or radial_reference)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Darwin => "darwin",
            Mode::FreeStream => "free_stream",
            Mode::Electrostatic => "electrostatic",
            Mode::RadialReference => "radial_reference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Initial spatial support radius R0.
    pub r0: f64,
    /// Initial momentum support radius P0.
    pub p0: f64,
    /// Amplitude of the initial datum (sup of f0 before gradient normalization).
    pub amplitude: f64,
    /// Cells per axis; power of two >= 16.
    pub grid_n: usize,
    /// Physical half-extent of the cubic box.
    pub box_half_width: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Number of quasi-random lattice points drawn over the phase-space box;
    /// markers with zero initial density are discarded, so the ensemble is
    /// smaller than this.
    pub particle_count: usize,
    pub mode: Mode,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: u32,
    pub seed: u64,
    /// Floor parameter for the momentum-Jacobian check.
    pub beta: f64,
    /// Markers carrying a variational tape (0 disables tracking).
    pub tracked_markers: usize,
    /// Record diagnostics every this many steps.
    pub record_every: usize,
    /// Snapshot cadence in steps; 0 selects ceil(t_end / (10 dt)).
    pub snapshot_every: usize,
    /// Mirror markers across the 48 signed permutations and momentum
    /// reversal (96 images per base point). Used for radial configurations.
    pub symmetrize_markers: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            r0: 1.0,
            p0: 1.0,
            amplitude: 1e-3,
            grid_n: 32,
            box_half_width: 0.0, // 0 means derive r0 + t_end + margin
            dt: 0.1,
            t_end: 1.0,
            particle_count: 100_000,
            mode: Mode::Darwin,
            fixed_point_tol: 1e-8,
            fixed_point_max_iter: 20,
            seed: 1,
            beta: 0.5,
            tracked_markers: 0,
            record_every: 1,
            snapshot_every: 0,
            symmetrize_markers: false,
        }
    }
}

impl SimConfig {
    /// Grid spacing h = 2 * box_half_width / grid_n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.box_half_width / self.grid_n as f64
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn snapshot_stride(&self) -> usize {
        if self.snapshot_every > 0 {
            self.snapshot_every
        } else {
            (self.t_end / (10.0 * self.dt)).ceil().max(1.0) as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.r0 > 0.0) {
            return fail(format!("r0 must be positive, got {}", self.r0));
        }
        if !(self.p0 > 0.0) {
            return fail(format!("p0 must be positive, got {}", self.p0));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return fail(format!(
                "amplitude must lie in (0, 1], got {}",
                self.amplitude
            ));
        }
        if self.grid_n < 16 || !self.grid_n.is_power_of_two() {
            return fail(format!(
                "grid_n must be a power of two >= 16, got {}",
                self.grid_n
            ));
        }
        if !(self.dt > 0.0) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) {
            return fail(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if self.particle_count == 0 {
            return fail("particle_count must be at least 1".to_string());
        }
        // Finite propagation speed: |v| < 1, so supp f(t) stays inside
        // B_{r0 + t}. The box must cover it with room for the CIC stencil.
        let needed = self.r0 + self.t_end;
        if self.box_half_width < needed {
            return fail(format!(
                "box_half_width = {} cannot contain the support: need at least r0 + t_end = {}",
                self.box_half_width, needed
            ));
        }
        if !(self.fixed_point_tol > 0.0) {
            return fail(format!(
                "fixed_point_tol must be positive, got {}",
                self.fixed_point_tol
            ));
        }
        if self.fixed_point_max_iter == 0 {
            return fail("fixed_point_max_iter must be at least 1".to_string());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.record_every == 0 {
            return fail("record_every must be at least 1".to_string());
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown keys are errors; missing
    /// keys fall back to defaults. `#` starts a comment.
    pub fn parse_key_values(text: &str) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        let mut box_set = false;
        let known: BTreeSet<&str> = KNOWN_KEYS.iter().copied().collect();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::InvalidConfig(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !known.contains(key) {
                return Err(SimError::InvalidConfig(format!(
                    "line {}: unknown key '{}'",
                    lineno + 1,
                    key
                )));
            }
            apply_key(&mut cfg, key, value, lineno + 1)?;
            if key == "box_half_width" {
                box_set = true;
            }
        }
        if !box_set {
            cfg.box_half_width = cfg.r0 + cfg.t_end + 4.0 * (cfg.r0 + cfg.t_end) / cfg.grid_n as f64;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse_key_values(&text)
    }

    /// Deterministic per-purpose RNG derived from the single config seed.
    pub fn rng_stream(&self, purpose: &str) -> ChaCha8Rng {
        rng_stream(self.seed, purpose)
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "r0",
    "p0",
    "amplitude",
    "grid_n",
    "box_half_width",
    "dt",
    "t_end",
    "particle_count",
    "mode",
    "fixed_point_tol",
    "fixed_point_max_iter",
    "seed",
    "beta",
    "tracked_markers",
    "record_every",
    "snapshot_every",
    "symmetrize_markers",
];

fn apply_key(cfg: &mut SimConfig, key: &str, value: &str, lineno: usize) -> Result<()> {
    fn parse<T: FromStr>(value: &str, key: &str, lineno: usize) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        value.parse::<T>().map_err(|e| {
            SimError::InvalidConfig(format!("line {lineno}: bad value for '{key}': {e}"))
        })
    }
    match key {
        "r0" => cfg.r0 = parse(value, key, lineno)?,
        "p0" => cfg.p0 = parse(value, key, lineno)?,
        "amplitude" => cfg.amplitude = parse(value, key, lineno)?,
        "grid_n" => cfg.grid_n = parse(value, key, lineno)?,
        "box_half_width" => cfg.box_half_width = parse(value, key, lineno)?,
        "dt" => cfg.dt = parse(value, key, lineno)?,
        "t_end" => cfg.t_end = parse(value, key, lineno)?,
        "particle_count" => cfg.particle_count = parse(value, key, lineno)?,
        "mode" => cfg.mode = parse(value, key, lineno)?,
        "fixed_point_tol" => cfg.fixed_point_tol = parse(value, key, lineno)?,
        "fixed_point_max_iter" => cfg.fixed_point_max_iter = parse(value, key, lineno)?,
        "seed" => cfg.seed = parse(value, key, lineno)?,
        "beta" => cfg.beta = parse(value, key, lineno)?,
        "tracked_markers" => cfg.tracked_markers = parse(value, key, lineno)?,
        "record_every" => cfg.record_every = parse(value, key, lineno)?,
        "snapshot_every" => cfg.snapshot_every = parse(value, key, lineno)?,
        "symmetrize_markers" => cfg.symmetrize_markers = parse(value, key, lineno)?,
        _ => unreachable!("key list checked by caller"),
    }
    Ok(())
}

/// Split a seed into an independent stream identified by name. FNV-1a over
/// the name keeps the mapping stable across refactors.
pub fn rng_stream(seed: u64, purpose: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in purpose.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    key[16..24].copy_from_slice(&seed.wrapping_mul(0x9e3779b97f4a7c15).to_le_bytes());
    key[24..32].copy_from_slice(&h.rotate_left(32).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
