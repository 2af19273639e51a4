//! Finite-population oracles.
//!
//! Everything downstream of this module works from published summary
//! statistics. Here the full population is held in memory, so the defect
//! correlation, the error identity, and the effective-sample-size pricing
//! can be computed exactly and checked against their summary-level
//! counterparts. All randomness flows through explicit seeds; the same seed
//! always reproduces the same population and the same recorded set.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decomp::finite_population_moments;
use crate::error::{Error, Result};
use crate::numerics::logistic;

/// A fully enumerated population: one outcome per unit, an optional
/// subgroup flag per unit, and an optional recording indicator per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePopulation {
    pub outcomes: Vec<f64>,
    pub subgroup: Option<Vec<bool>>,
    pub recorded: Option<Vec<bool>>,
}

impl FinitePopulation {
    pub fn new(
        outcomes: Vec<f64>,
        subgroup: Option<Vec<bool>>,
        recorded: Option<Vec<bool>>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("empty population".into()));
        }
        if let Some(bad) = outcomes.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite outcome {bad}")));
        }
        for (name, flags) in [("subgroup", &subgroup), ("recorded", &recorded)] {
            if let Some(f) = flags {
                if f.len() != outcomes.len() {
                    return Err(Error::InvalidInput(format!(
                        "{name} flags have length {} but there are {} outcomes",
                        f.len(),
                        outcomes.len()
                    )));
                }
            }
        }
        Ok(FinitePopulation {
            outcomes,
            subgroup,
            recorded,
        })
    }

    #[must_use]
    pub fn size(&self) -> usize {
        self.outcomes.len()
    }

    pub fn recorded_mask(&self) -> Result<&[bool]> {
        self.recorded
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("population has no recorded set".into()))
    }

    pub fn recorded_count(&self) -> Result<usize> {
        Ok(self.recorded_mask()?.iter().filter(|&&r| r).count())
    }

    /// Mean of the recorded units only.
    pub fn sample_mean(&self) -> Result<f64> {
        let mask = self.recorded_mask()?;
        let n = mask.iter().filter(|&&r| r).count();
        if n == 0 {
            return Err(Error::DegenerateRecording {
                recorded: 0,
                total: self.size(),
            });
        }
        let sum: f64 = self
            .outcomes
            .iter()
            .zip(mask)
            .filter(|(_, &r)| r)
            .map(|(y, _)| y)
            .sum();
        Ok(sum / n as f64)
    }

    /// Per-unit subgroup contrast `y* = y` in the flagged group and
    /// `y* = -y` outside it, so the population mean of `y*` is the
    /// between-group gap weighted by group shares.
    pub fn contrast_outcomes(&self) -> Result<Vec<f64>> {
        let flags = self
            .subgroup
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("population has no subgroup flags".into()))?;
        Ok(self
            .outcomes
            .iter()
            .zip(flags)
            .map(|(&y, &g)| if g { y } else { -y })
            .collect())
    }
}

/// Joint targets for a binary population with a subgroup: the fraction of
/// units in the flagged group and the fraction that are both flagged and
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgroupSpec {
    pub share: f64,
    pub joint: f64,
}

/// How units enter the recorded set.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionMechanism {
    /// Every subset of the given size equally likely.
    Srs { sample_size: usize },
    /// Unit `i` recorded with probability `logistic(alpha + beta * y_i)`,
    /// independently. `beta != 0` ties recording to the outcome.
    OutcomeLogistic { alpha: f64, beta: f64 },
    /// A deterministic recorded set, for replaying worked examples.
    FixedSet { indices: Vec<usize> },
}

/// Builds a binary population hitting `prevalence` (and, when given, the
/// subgroup targets) to the nearest unit, then shuffles unit order with the
/// seed. Counts are deterministic; only the arrangement is random.
pub fn generate_population(
    size: usize,
    prevalence: f64,
    subgroup: Option<SubgroupSpec>,
    seed: u64,
) -> Result<FinitePopulation> {
    if size == 0 {
        return Err(Error::InvalidInput("population size must be positive".into()));
    }
    if !(0.0..=1.0).contains(&prevalence) {
        return Err(Error::InvalidInput(format!(
            "prevalence {prevalence} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size as f64;
    match subgroup {
        None => {
            let ones = (n * prevalence).round() as usize;
            let mut outcomes = vec![1.0; ones];
            outcomes.resize(size, 0.0);
            outcomes.shuffle(&mut rng);
            FinitePopulation::new(outcomes, None, None)
        }
        Some(SubgroupSpec { share, joint }) => {
            if !(0.0..=1.0).contains(&share) {
                return Err(Error::InvalidInput(format!(
                    "group share {share} outside [0, 1]"
                )));
            }
            if !(0.0..=1.0).contains(&joint) {
                return Err(Error::InvalidInput(format!(
                    "joint fraction {joint} outside [0, 1]"
                )));
            }
            let n11 = (n * joint).round() as i64;
            let n1x = (n * prevalence).round() as i64;
            let nx1 = (n * share).round() as i64;
            let n10 = n1x - n11;
            let n01 = nx1 - n11;
            let n00 = size as i64 - n11 - n10 - n01;
            if n10 < 0 || n01 < 0 {
                return Err(Error::InfeasibleCells(format!(
                    "joint fraction {joint} exceeds min(prevalence, share) = {}",
                    prevalence.min(share)
                )));
            }
            if n00 < 0 {
                return Err(Error::InfeasibleCells(format!(
                    "joint fraction {joint} below prevalence + share - 1 = {}",
                    prevalence + share - 1.0
                )));
            }
            let mut cells: Vec<(f64, bool)> = Vec::with_capacity(size);
            cells.extend(std::iter::repeat((1.0, true)).take(n11 as usize));
            cells.extend(std::iter::repeat((1.0, false)).take(n10 as usize));
            cells.extend(std::iter::repeat((0.0, true)).take(n01 as usize));
            cells.extend(std::iter::repeat((0.0, false)).take(n00 as usize));
            cells.shuffle(&mut rng);
            let (outcomes, flags) = cells.into_iter().unzip();
            FinitePopulation::new(outcomes, Some(flags), None)
        }
    }
}

/// Applies a recording mechanism, returning the population with its
/// recorded set filled in.
pub fn apply_selection(
    pop: &FinitePopulation,
    mechanism: &SelectionMechanism,
    seed: u64,
) -> Result<FinitePopulation> {
    let size = pop.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = match mechanism {
        SelectionMechanism::Srs { sample_size } => {
            if *sample_size == 0 || *sample_size > size {
                return Err(Error::InvalidInput(format!(
                    "srs sample size {sample_size} outside [1, {size}]"
                )));
            }
            let chosen = rand::seq::index::sample(&mut rng, size, *sample_size);
            let mut mask = vec![false; size];
            for i in chosen {
                mask[i] = true;
            }
            mask
        }
        SelectionMechanism::OutcomeLogistic { alpha, beta } => {
            if !alpha.is_finite() || !beta.is_finite() {
                return Err(Error::InvalidInput(
                    "logistic mechanism needs finite coefficients".into(),
                ));
            }
            let mask: Vec<bool> = pop
                .outcomes
                .iter()
                .map(|&y| rng.random::<f64>() < logistic(alpha + beta * y))
                .collect();
            let recorded = mask.iter().filter(|&&r| r).count();
            if recorded == 0 || recorded == size {
                return Err(Error::DegenerateRecording {
                    recorded,
                    total: size,
                });
            }
            mask
        }
        SelectionMechanism::FixedSet { indices } => {
            if indices.is_empty() {
                return Err(Error::InvalidInput("fixed recorded set is empty".into()));
            }
            let mut mask = vec![false; size];
            for &i in indices {
                if i >= size {
                    return Err(Error::InvalidInput(format!(
                        "recorded index {i} outside population of size {size}"
                    )));
                }
                if mask[i] {
                    return Err(Error::InvalidInput(format!("recorded index {i} repeated")));
                }
                mask[i] = true;
            }
            if indices.len() == size {
                return Err(Error::DegenerateRecording {
                    recorded: size,
                    total: size,
                });
            }
            mask
        }
    };
    let mut out = pop.clone();
    out.recorded = Some(mask);
    Ok(out)
}

fn pearson_with_mask(values: &[f64], mask: &[bool]) -> Result<f64> {
    let size = values.len();
    let recorded = mask.iter().filter(|&&r| r).count();
    if recorded == 0 || recorded == size {
        return Err(Error::DegenerateRecording {
            recorded,
            total: size,
        });
    }
    let (y_mean, y_sd) = finite_population_moments(values)?;
    if y_sd == 0.0 {
        return Err(Error::ConstantSeries(
            "outcome has zero variance, defect correlation undefined".into(),
        ));
    }
    let f = recorded as f64 / size as f64;
    let r_sd = (f * (1.0 - f)).sqrt();
    let cov: f64 = values
        .iter()
        .zip(mask)
        .map(|(&y, &r)| (y - y_mean) * ((r as u8 as f64) - f))
        .sum::<f64>()
        / size as f64;
    Ok(cov / (y_sd * r_sd))
}

/// The defect correlation computed from complete data: the population
/// correlation (denominator `N`) between the outcome and the recording
/// indicator.
pub fn exact_ddc(pop: &FinitePopulation) -> Result<f64> {
    pearson_with_mask(&pop.outcomes, pop.recorded_mask()?)
}

/// Same defect correlation on the subgroup contrast `y*` instead of `y`.
pub fn subgroup_exact_ddc(pop: &FinitePopulation) -> Result<f64> {
    let star = pop.contrast_outcomes()?;
    pearson_with_mask(&star, pop.recorded_mask()?)
}

fn identity_residual(values: &[f64], mask: &[bool]) -> Result<f64> {
    let size = values.len();
    let recorded = mask.iter().filter(|&&r| r).count();
    let rho = pearson_with_mask(values, mask)?;
    let (pop_mean, pop_sd) = finite_population_moments(values)?;
    let rec_sum: f64 = values.iter().zip(mask).filter(|(_, &r)| r).map(|(y, _)| y).sum();
    let rec_mean = rec_sum / recorded as f64;
    let deficiency = ((size - recorded) as f64 / recorded as f64).sqrt();
    Ok((rec_mean - pop_mean) - rho * deficiency * pop_sd)
}

/// Residual of the error identity on complete data:
/// `(recorded mean - population mean) - ddc * sqrt((N - n) / n) * sigma`.
/// Zero up to rounding for every population and recorded set.
pub fn verify_identity(pop: &FinitePopulation) -> Result<f64> {
    identity_residual(&pop.outcomes, pop.recorded_mask()?)
}

/// The same residual on the subgroup contrast scale, where the identity is
/// equally exact.
pub fn verify_subgroup_identity(pop: &FinitePopulation) -> Result<f64> {
    let star = pop.contrast_outcomes()?;
    identity_residual(&star, pop.recorded_mask()?)
}

/// Monte Carlo mean squared error of the mean of a simple random sample of
/// size `sample_size` from `pop`. Replicates are independently seeded
/// streams of the base seed, so they can be reproduced in any order.
pub fn mc_mse_srs(
    pop: &FinitePopulation,
    sample_size: usize,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    let size = pop.size();
    if sample_size == 0 || sample_size > size {
        return Err(Error::InvalidInput(format!(
            "srs sample size {sample_size} outside [1, {size}]"
        )));
    }
    if replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    if sample_size == size {
        return Ok(0.0);
    }
    let (pop_mean, _) = finite_population_moments(&pop.outcomes)?;
    let mut acc = 0.0;
    for rep in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let idx = rand::seq::index::sample(&mut rng, size, sample_size);
        let mean: f64 =
            idx.iter().map(|i| pop.outcomes[i]).sum::<f64>() / sample_size as f64;
        let err = mean - pop_mean;
        acc += err * err;
    }
    Ok(acc / replicates as f64)
}
