//! Bit-stable output formats: the diagnostics CSV, binary field
//! snapshots, JSON manifests, and the study-configuration file.

use crate::config::SimConfig;
use crate::diagnostics::TimeSeriesRecord;
use crate::error::{Result, SimError};
use crate::grid::GridField;
use crate::sim::{RunManifest, StudySpec, SweepVariable};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub const CSV_HEADER: &str =
    "t,sup_rho,sup_j,sup_el,sup_et,sup_b,sup_grad_el,sup_grad_et,sup_grad_b,q_t,total_charge,fp_iters";

const SNAPSHOT_MAGIC: &[u8; 4] = b"VDGF";
const SNAPSHOT_VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write the time series: fixed header, one row per record, every value in
/// scientific notation with 17 significant digits.
pub fn write_timeseries(series: &[TimeSeriesRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let fmt = |v: f64| format!("{v:.16e}");
    writeln!(w, "{CSV_HEADER}").map_err(|e| io_err(path, e))?;
    for r in series {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.sup_rho),
            fmt(r.sup_j),
            fmt(r.sup_el),
            fmt(r.sup_et),
            fmt(r.sup_b),
            fmt(r.sup_grad_el),
            fmt(r.sup_grad_et),
            fmt(r.sup_grad_b),
            fmt(r.q_t),
            fmt(r.total_charge),
            fmt(r.fp_iters as f64),
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => {
            return Err(SimError::Malformed {
                path: path.display().to_string(),
                reason: "missing or unexpected CSV header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SimError::Malformed {
                path: path.display().to_string(),
                reason: format!("row {}: {e}", no + 2),
            })?;
        if fields.len() != 12 {
            return Err(SimError::Malformed {
                path: path.display().to_string(),
                reason: format!("row {}: expected 12 columns, got {}", no + 2, fields.len()),
            });
        }
        out.push(TimeSeriesRecord {
            t: fields[0],
            sup_rho: fields[1],
            sup_j: fields[2],
            sup_el: fields[3],
            sup_et: fields[4],
            sup_b: fields[5],
            sup_grad_el: fields[6],
            sup_grad_et: fields[7],
            sup_grad_b: fields[8],
            q_t: fields[9],
            total_charge: fields[10],
            fp_iters: fields[11] as u32,
        });
    }
    Ok(out)
}

/// Binary snapshot: magic `VDGF`, version u32, n u32, components u32,
/// extent f64, then component-major row-major f64 samples, little-endian.
pub fn write_snapshot(field: &GridField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(SNAPSHOT_MAGIC).map_err(|e| io_err(path, e))?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    w.write_all(&(field.n as u32).to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    w.write_all(&(field.components as u32).to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    w.write_all(&field.extent.to_le_bytes())
        .map_err(|e| io_err(path, e))?;
    for v in field.data() {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<GridField> {
    let mut file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|e| io_err(path, e))?;
    let malformed = |reason: &str| SimError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    if buf.len() < 24 || &buf[0..4] != SNAPSHOT_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let components = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    let extent = f64::from_le_bytes(buf[16..24].try_into().unwrap());
    let expected = components * n * n * n;
    if buf.len() != 24 + 8 * expected {
        return Err(malformed("truncated sample block"));
    }
    let mut field = GridField::zeros(extent, n, components);
    for (i, chunk) in buf[24..].chunks_exact(8).enumerate() {
        field.data_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(field)
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, json).map_err(|e| io_err(path, e))
}

/// Study configuration: the SimConfig keys plus `sweep_variable` and
/// `sweep_values` (comma-separated).
pub fn parse_study(text: &str) -> Result<StudySpec> {
    let mut base_lines = Vec::new();
    let mut variable = None;
    let mut values = None;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            base_lines.push(raw.to_string());
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            match key.trim() {
                "sweep_variable" => {
                    variable = Some(match value.trim() {
                        "amplitude" => SweepVariable::Amplitude,
                        "grid_n" => SweepVariable::GridN,
                        "particle_count" => SweepVariable::ParticleCount,
                        other => {
                            return Err(SimError::InvalidConfig(format!(
                                "unknown sweep_variable '{other}'"
                            )))
                        }
                    });
                    continue;
                }
                "sweep_values" => {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        value.trim().split(',').map(|v| v.trim().parse()).collect();
                    values = Some(parsed.map_err(|e| {
                        SimError::InvalidConfig(format!("bad sweep_values: {e}"))
                    })?);
                    continue;
                }
                _ => {}
            }
        }
        base_lines.push(raw.to_string());
    }
    let base = SimConfig::parse_key_values(&base_lines.join("\n"))?;
    let spec = StudySpec {
        base,
        variable: variable.ok_or_else(|| {
            SimError::InvalidConfig("study file needs a sweep_variable key".into())
        })?,
        values: values
            .ok_or_else(|| SimError::InvalidConfig("study file needs a sweep_values key".into()))?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn study_from_file(path: &Path) -> Result<StudySpec> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_study(&text)
}
