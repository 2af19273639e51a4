//! defect-lens: selection-bias diagnostics for big-but-biased samples.
//!
//! A very large convenience sample can be far less informative than its
//! size suggests: a whisper of correlation between who answers and what
//! they answer shifts the estimate by more than the nominal sampling error
//! admits. This crate decomposes the realized estimation error of a sample
//! mean against a population benchmark into three factors (a data quality
//! correlation, a data quantity ratio, and a problem difficulty scale),
//! prices the damage as an effective sample size, and builds the related
//! diagnostics a survey methodologist reaches for next:
//!
//! - [`decomp`]: the exact error identity, effective sample sizes, and
//!   sensitivity sweeps against scaled benchmarks.
//! - [`estimands`]: the same machinery for wave-over-wave differences,
//!   relative differences, and subgroup contrasts.
//! - [`assist`]: beta-regression model assistance that blends a biased
//!   sample with an auxiliary benchmark-calibrated prediction.
//! - [`changepoint`]: a Bayesian scan for regime shifts in short rate
//!   series, with an exact enumerator for validation.
//! - [`simlab`]: finite-population generators and selection mechanisms
//!   that make every identity testable against ground truth.
//! - [`io`]: CSV series ingestion, alignment, and report emission.
//!
//! Everything stochastic takes an explicit seed and is reproducible bit
//! for bit; [`DEFAULT_SEED`] is used when none is given.

pub mod assist;
pub mod changepoint;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod estimands;
pub mod io;
pub mod numerics;
pub mod simlab;

/// Default RNG seed shared by every stochastic entry point.
pub const DEFAULT_SEED: u64 = 20_210_516;

pub use assist::{
    assisted_series, beta_loglik, beta_loglik_grad, fit_beta_regression, invert_mean,
    model_assisted_estimate, AssistOptions, AssistedAnalysis, AssistedRow, BetaFit, BetaParams,
    PairedSeries,
};
pub use changepoint::{
    bcp_posterior, detect_intervals, exact_posterior, ChangePointConfig, ChangePointResult,
    ENUM_LIMIT,
};
pub use decomp::{
    decompose, effective_sample_size, effective_sample_size_exact, finite_population_moments,
    mse_biased, mse_srs, sensitivity_sweep, BenchmarkPoint, Decomposition, Outcome,
    SurveySnapshot, DEFAULT_FACTORS,
};
pub use error::{Error, Result};
pub use estimands::{
    diff_error_decomposed, diff_neff, diff_neff_decomposed, diff_neff_finite,
    reldiff_error, reldiff_error_decomposed, reldiff_neff, reldiff_neff_decomposed,
    reldiff_neff_finite, subgroup_decompose, subgroup_sigma, wave_decompositions,
    SigmaMethod, SubgroupTable, WavePair, WavePoint,
};
pub use simlab::{
    apply_selection, exact_ddc, generate_population, mc_mse_srs, subgroup_exact_ddc,
    verify_identity, verify_subgroup_identity, FinitePopulation, SelectionMechanism,
    SubgroupSpec,
};
