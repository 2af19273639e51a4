//! Error decomposition for estimates built from non-probability data.
//!
//! The actual error of a sample mean against its finite-population target
//! factors exactly into three terms:
//!
//! ```text
//! estimate - truth = ddc * sqrt((N - n) / n) * sigma
//! ```
//!
//! where `ddc` is the correlation between the outcome and the recording
//! indicator over the full population (data quality), `sqrt((N - n) / n)`
//! grows with the unrecorded share (data quantity), and `sigma` is the
//! population standard deviation (problem difficulty). The decomposition
//! turns a headline estimate plus a benchmark into a defect measurement, and
//! the defect in turn prices the sample: the effective sample size is the
//! simple random sample size with the same mean squared error.

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Measurement scale of the outcome. Binary outcomes carry range checks and
/// an implied standard deviation; continuous outcomes do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Binary,
    Continuous,
}

impl Outcome {
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Binary => "binary",
            Outcome::Continuous => "continuous",
        }
    }
}

/// Ground truth for one date: the full-population mean and spread.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPoint {
    pub date: NaiveDate,
    pub population_size: u64,
    pub population_mean: f64,
    pub population_sd: f64,
    pub outcome: Outcome,
}

impl BenchmarkPoint {
    /// Binary benchmark; the sd is implied, `sqrt(mean * (1 - mean))`.
    pub fn binary(date: NaiveDate, population_size: u64, population_mean: f64) -> Result<Self> {
        Self::new(date, population_size, population_mean, None, Outcome::Binary)
    }

    /// Continuous benchmark with an explicitly measured sd.
    pub fn continuous(
        date: NaiveDate,
        population_size: u64,
        population_mean: f64,
        population_sd: f64,
    ) -> Result<Self> {
        Self::new(
            date,
            population_size,
            population_mean,
            Some(population_sd),
            Outcome::Continuous,
        )
    }

    /// General constructor. A missing sd is derived for binary outcomes and
    /// rejected for continuous ones.
    pub fn new(
        date: NaiveDate,
        population_size: u64,
        population_mean: f64,
        population_sd: Option<f64>,
        outcome: Outcome,
    ) -> Result<Self> {
        if population_size == 0 {
            return Err(Error::InvalidInput("population size must be positive".into()));
        }
        if !population_mean.is_finite() {
            return Err(Error::InvalidInput("population mean must be finite".into()));
        }
        if outcome == Outcome::Binary && !(0.0..=1.0).contains(&population_mean) {
            return Err(Error::InvalidInput(format!(
                "binary population mean {population_mean} outside [0, 1]"
            )));
        }
        let population_sd = match population_sd {
            Some(sd) => {
                if !sd.is_finite() || sd < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "population sd {sd} must be a non-negative real"
                    )));
                }
                sd
            }
            None => match outcome {
                Outcome::Binary => (population_mean * (1.0 - population_mean)).sqrt(),
                Outcome::Continuous => {
                    return Err(Error::InvalidInput(
                        "continuous benchmark needs an explicit population sd".into(),
                    ))
                }
            },
        };
        Ok(BenchmarkPoint {
            date,
            population_size,
            population_mean,
            population_sd,
            outcome,
        })
    }

    /// The same point with its mean scaled by `factor`, as used by the
    /// benchmark-uncertainty sweep. Binary outcomes re-derive the sd and
    /// reject factors that push the mean out of [0, 1]; continuous outcomes
    /// keep their measured sd.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sensitivity factor {factor} must be a positive real"
            )));
        }
        let scaled = factor * self.population_mean;
        match self.outcome {
            Outcome::Binary => {
                if !(0.0..=1.0).contains(&scaled) {
                    return Err(Error::SensitivityOutOfRange { factor, scaled });
                }
                Self::new(self.date, self.population_size, scaled, None, Outcome::Binary)
            }
            Outcome::Continuous => Self::new(
                self.date,
                self.population_size,
                scaled,
                Some(self.population_sd),
                Outcome::Continuous,
            ),
        }
    }
}

/// One published estimate: a sample mean, its claimed size, and a label
/// identifying the source series.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveySnapshot {
    pub date: NaiveDate,
    pub sample_size: u64,
    pub sample_mean: f64,
    pub label: String,
}

impl SurveySnapshot {
    pub fn new(
        date: NaiveDate,
        sample_size: u64,
        sample_mean: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::InvalidInput("sample size must be positive".into()));
        }
        if !sample_mean.is_finite() {
            return Err(Error::InvalidInput("sample mean must be finite".into()));
        }
        Ok(SurveySnapshot {
            date,
            sample_size,
            sample_mean,
            label: label.into(),
        })
    }
}

/// The three factors of the error identity plus the effective sample sizes
/// they imply. `estimation_error == ddc * data_deficiency * problem_difficulty`
/// holds by construction (residual below 1e-12).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub estimation_error: f64,
    pub ddc: f64,
    pub data_deficiency: f64,
    pub problem_difficulty: f64,
    /// Large-population approximation; infinite exactly when `ddc == 0`.
    pub n_eff_approx: f64,
    /// Finite-population form; never exceeds the population size.
    pub n_eff_exact: f64,
    /// Benchmark scaling this row was computed under (1 outside sweeps).
    pub sensitivity_factor: f64,
}

/// Mean and standard deviation of a finite population, both with
/// denominator `N`. This is the variance convention the error identity
/// needs; the sample-variance denominator `N - 1` would break it.
pub fn finite_population_moments(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty population".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite outcome value {bad}")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Splits the estimation error of `survey` against `bench` into defect,
/// deficiency, and difficulty, and prices the sample in effective units.
pub fn decompose(survey: &SurveySnapshot, bench: &BenchmarkPoint) -> Result<Decomposition> {
    let n = survey.sample_size;
    let big_n = bench.population_size;
    if n > big_n {
        return Err(Error::SampleExceedsPopulation {
            sample: n,
            population: big_n,
        });
    }
    if n == big_n {
        return Err(Error::Census);
    }
    if bench.outcome == Outcome::Binary && !(0.0..=1.0).contains(&survey.sample_mean) {
        return Err(Error::InvalidInput(format!(
            "binary sample mean {} outside [0, 1]",
            survey.sample_mean
        )));
    }
    if bench.population_sd == 0.0 {
        return Err(Error::DegenerateBenchmark);
    }

    let estimation_error = survey.sample_mean - bench.population_mean;
    let data_deficiency = ((big_n - n) as f64 / n as f64).sqrt();
    let problem_difficulty = bench.population_sd;
    let ddc = estimation_error / (data_deficiency * problem_difficulty);
    let n_eff_approx = effective_sample_size(ddc, n, big_n)?;
    let n_eff_exact = effective_sample_size_exact(ddc, n, big_n)?;
    Ok(Decomposition {
        estimation_error,
        ddc,
        data_deficiency,
        problem_difficulty,
        n_eff_approx,
        n_eff_exact,
        sensitivity_factor: 1.0,
    })
}

fn check_sizes(sample: u64, population: u64) -> Result<()> {
    if sample == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    if sample > population {
        return Err(Error::SampleExceedsPopulation {
            sample,
            population,
        });
    }
    if sample == population {
        return Err(Error::Census);
    }
    Ok(())
}

/// Large-population effective sample size: `(n / (N - n)) / ddc^2`.
/// Infinite exactly when the defect correlation is zero.
pub fn effective_sample_size(ddc: f64, sample: u64, population: u64) -> Result<f64> {
    check_sizes(sample, population)?;
    if !ddc.is_finite() {
        return Err(Error::InvalidInput(format!("ddc {ddc} must be finite")));
    }
    if ddc == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sample as f64 / (population - sample) as f64 / (ddc * ddc))
}

/// Finite-population effective sample size. With
/// `A = (n / (N - n)) / ddc^2` this is `A / ((A - 1) / N + 1)`, which tends
/// to `A` for small samples and saturates at `N` as the defect vanishes.
pub fn effective_sample_size_exact(ddc: f64, sample: u64, population: u64) -> Result<f64> {
    let a = effective_sample_size(ddc, sample, population)?;
    let big_n = population as f64;
    if a.is_infinite() {
        return Ok(big_n);
    }
    Ok(a / ((a - 1.0) / big_n + 1.0))
}

/// Mean squared error of the mean of a simple random sample of (possibly
/// fractional) size `n_eff` drawn from a population of size `population`
/// with standard deviation `sigma`.
pub fn mse_srs(n_eff: f64, population: u64, sigma: f64) -> Result<f64> {
    if population < 2 {
        return Err(Error::InvalidInput(
            "population must have at least two units".into(),
        ));
    }
    if !(n_eff > 0.0 && n_eff <= population as f64) {
        return Err(Error::EffectiveSizeOutOfRange {
            n_eff,
            population,
        });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "sigma {sigma} must be a non-negative real"
        )));
    }
    let big_n = population as f64;
    Ok((big_n - n_eff) / n_eff * sigma * sigma / (big_n - 1.0))
}

/// Mean squared error of the biased mean under the recording mechanism,
/// with the squared defect correlation plugged in for its expectation:
/// `ddc^2 * ((N - n) / n) * sigma^2`.
pub fn mse_biased(ddc: f64, sample: u64, population: u64, sigma: f64) -> Result<f64> {
    check_sizes(sample, population)?;
    if !ddc.is_finite() {
        return Err(Error::InvalidInput(format!("ddc {ddc} must be finite")));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "sigma {sigma} must be a non-negative real"
        )));
    }
    let ratio = (population - sample) as f64 / sample as f64;
    Ok(ddc * ddc * ratio * sigma * sigma)
}

/// Re-runs the decomposition under each benchmark scaling in `factors`,
/// pricing how much of the conclusion survives benchmark uncertainty.
/// Factors that push a binary mean outside [0, 1] are rejected, never
/// clipped.
pub fn sensitivity_sweep(
    survey: &SurveySnapshot,
    bench: &BenchmarkPoint,
    factors: &[f64],
) -> Result<Vec<Decomposition>> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("no sensitivity factors given".into()));
    }
    let mut out = Vec::with_capacity(factors.len());
    for &factor in factors {
        let scaled = bench.scaled(factor)?;
        let mut d = decompose(survey, &scaled)?;
        d.sensitivity_factor = factor;
        out.push(d);
    }
    Ok(out)
}

/// The factor sweep used when none is requested explicitly.
pub const DEFAULT_FACTORS: [f64; 5] = [0.9, 0.95, 1.0, 1.05, 1.1];
