use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("marker {index} left the box at t = {t}: position ({x}, {y}, {z}) exceeds usable half-width {limit} (increase box_half_width)")]
    MarkerOutsideBox {
        index: usize,
        t: f64,
        x: f64,
        y: f64,
        z: f64,
        limit: f64,
    },

    #[error("grid/kernel mismatch: field has n = {field_n}, extent = {field_extent}; kernel built for n = {kernel_n}, extent = {kernel_extent}")]
    KernelMismatch {
        field_n: usize,
        field_extent: f64,
        kernel_n: usize,
        kernel_extent: f64,
    },

    #[error("transverse-field fixed point did not converge in {max_iter} iterations (residual history: {history:?})")]
    FixedPointDiverged { max_iter: u32, history: Vec<f64> },

    #[error("decay fit window [{lo}, {hi}] contains nonpositive values (noise floor reached; shrink the window)")]
    NonpositiveFitValues { lo: f64, hi: f64 },

    #[error("time series is empty or does not cover the requested interval")]
    EmptySeries,

    #[error("invalid Gronwall problem: {0}")]
    InvalidGronwallProblem(String),

    #[error("study requires at least 3 sweep values, got {0}")]
    DegenerateSweep(usize),

    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, SimError>;
