use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("coefficient {value} is not inside the open unit disk")]
    OutsideDisk { value: Complex64 },

    #[error("radius bound {r} is invalid: {reason}")]
    InvalidRadius { r: f64, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{name} = {value} is outside the admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("level mismatch: need level >= {need}, got {got}")]
    LevelMismatch { need: u32, got: u32 },

    #[error("coefficient window covers [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] is required")]
    WindowTooShort {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("window offset {0} is not aligned to the even block grid")]
    Misaligned(i64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spectral parameter {0} is not on the unit circle")]
    NotUnimodular(Complex64),

    #[error("matrix is singular")]
    Singular,

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("band search found {found} bands, expected {expected} (grid {grid})")]
    BandCount {
        expected: usize,
        found: usize,
        grid: usize,
    },

    #[error("every gap of the spectrum is closed")]
    NoOpenGaps,

    #[error("|Δ(z)| = {delta_abs} exceeds 2: z is off the spectrum")]
    OffSpectrum { delta_abs: f64 },

    #[error("z is within {margin:e} of a band edge (|Δ| = {delta_abs})")]
    NearBandEdge { delta_abs: f64, margin: f64 },

    #[error("discriminant is not real on the circle (max |Im Δ| = {0:e})")]
    NotReal(f64),

    #[error("null vector residual {0:e} too large")]
    Residual(f64),

    #[error("budget infeasible at stage {stage}: {detail}")]
    Infeasible { stage: u32, detail: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}
