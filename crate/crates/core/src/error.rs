//! Crate-wide error type.
//!
//! Variants split into two families used by the CLI exit-code mapping:
//! input problems (bad files, invalid arguments, infeasible configurations)
//! and numerical problems (degenerate statistics, failed convergence).

use chrono::NaiveDate;

/// Every fallible operation in this crate returns this error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column '{column}': {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    #[error("duplicate date {date} (lines {first_line} and {second_line})")]
    DuplicateDate {
        date: NaiveDate,
        first_line: u64,
        second_line: u64,
    },

    #[error("dates must be strictly increasing: line {line} has {date}, which does not follow {previous}")]
    NonIncreasingDate {
        line: u64,
        date: NaiveDate,
        previous: NaiveDate,
    },

    #[error("no rows with matching dates between the two inputs")]
    EmptyIntersection,

    #[error("survey date {date} precedes every benchmark date")]
    NoPrecedingBenchmark { date: NaiveDate },

    #[error("sample size {sample} exceeds population size {population}")]
    SampleExceedsPopulation { sample: u64, population: u64 },

    #[error("census: recorded set covers the whole population, deficiency is zero")]
    Census,

    #[error("degenerate benchmark: population sd is zero, so the defect correlation is undefined")]
    DegenerateBenchmark,

    #[error("sensitivity factor {factor} moves the benchmark mean to {scaled}, outside the valid range for a binary outcome")]
    SensitivityOutOfRange { factor: f64, scaled: f64 },

    #[error("effective sample size {n_eff} is outside (0, {population}]")]
    EffectiveSizeOutOfRange { n_eff: f64, population: u64 },

    #[error("relative difference undefined: the earlier wave mean is zero")]
    RelativeDiffUndefined,

    #[error("joint-variance shortcut produced a negative value ({value}); use the exact method for this table")]
    NegativeVariance { value: f64 },

    #[error("infeasible cell specification: {0}")]
    InfeasibleCells(String),

    #[error("degenerate recording: mechanism recorded {recorded} of {total} units")]
    DegenerateRecording { recorded: usize, total: usize },

    #[error("constant series: {0}")]
    ConstantSeries(String),

    #[error("non-finite value at {date}")]
    NonFinite { date: NaiveDate },

    #[error("non-invertible fit: slope is zero, the mean cannot be mapped back to a covariate value")]
    FlatFit,

    #[error("fit did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("model-assisted value {value} falls outside (0, 1); the fitted bridge does not extrapolate this far")]
    AssistedOutOfRange { value: f64 },

    #[error("series too short: {len} points, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("exact enumeration infeasible for {len} points (limit {limit})")]
    EnumerationInfeasible { len: usize, limit: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("report schema mismatch: found '{found}', expected '{expected}'")]
    SchemaMismatch { found: String, expected: String },

    #[error("bad report: {0}")]
    BadReport(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    /// The CLI maps these to a distinct exit code.
    #[must_use]
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateBenchmark
                | Error::NegativeVariance { .. }
                | Error::FlatFit
                | Error::NoConvergence { .. }
                | Error::AssistedOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
