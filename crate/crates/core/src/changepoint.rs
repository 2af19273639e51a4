//! Bayesian change-point scanning for short rate series.
//!
//! The series is modeled as piecewise constant in time plus normal noise: a
//! partition into contiguous blocks, a mean per block. Conjugate priors
//! (uniform change probability on [0, p0], uniform signal-to-noise ratio
//! `w = sigma^2 / (sigma^2 + sigma0^2)` on [0, w0], flat grand mean, scale
//! prior on the noise variance) integrate out in closed form, leaving each
//! partition with weight
//!
//! ```text
//! f(rho) ∝ Ip(b) * Iw(b, W, B)
//! Ip(b)       = integral over p in [0, p0] of p^(b-1) (1-p)^(T-b)
//! Iw(b, W, B) = integral over w in [0, w0] of w^((b-1)/2) / (W + w B)^((T-1)/2)
//! ```
//!
//! where `b` counts blocks, `W` is the within-block sum of squares and `B`
//! the between-block sum of squares (`W + B` is the total). Both integrals
//! are evaluated by one fixed Gauss-Legendre rule in log space, so the
//! Gibbs sampler and the exact enumerator score partitions identically and
//! their agreement can be tested without quadrature slack.
//!
//! A Gibbs sweep flips one change indicator at a time using the exact
//! conditional odds; change probabilities are post-burn-in indicator
//! frequencies, and fitted values average the shrinkage estimate
//! `(1 - wh) * block_mean + wh * grand_mean` with `wh = E[w | partition]`.
//! Perfectly fitting partitions (`W = 0` on noise-free steps) would make
//! the weight integral diverge, so `W` is floored at a relative epsilon of
//! the total sum of squares on both evaluation paths. A series with zero
//! total variation carries no signal at all: weights reduce to the prior
//! and fitted values stay at the constant.

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{gl_on_interval, log_sum_exp, logistic};
use crate::DEFAULT_SEED;

/// Longest series the exact enumerator will accept (2^(len-1) partitions).
pub const ENUM_LIMIT: usize = 14;

/// Relative floor applied to the within-block sum of squares.
const W_FLOOR_REL: f64 = 1e-12;

/// Tuning of the scan. `iterations` counts kept sweeps, after `burn_in`
/// discarded ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointConfig {
    pub p0: f64,
    pub w0: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for ChangePointConfig {
    fn default() -> Self {
        ChangePointConfig {
            p0: 0.2,
            w0: 0.2,
            iterations: 5000,
            burn_in: 500,
            seed: DEFAULT_SEED,
            threshold: 0.6,
        }
    }
}

impl ChangePointConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(Error::InvalidInput(format!("p0 {} outside (0, 1]", self.p0)));
        }
        if !(self.w0 > 0.0 && self.w0 <= 1.0) {
            return Err(Error::InvalidInput(format!("w0 {} outside (0, 1]", self.w0)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("need at least one kept sweep".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Posterior summary of the scan, aligned with the input series.
/// `probabilities[0]` is zero by convention: the first point opens a block,
/// it cannot be a change.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointResult {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub posterior_means: Vec<f64>,
    pub intervals: Vec<(NaiveDate, NaiveDate)>,
}

fn validate_series(series: &[(NaiveDate, f64)]) -> Result<()> {
    if series.len() < 3 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: 3,
        });
    }
    for &(date, v) in series {
        if !v.is_finite() {
            return Err(Error::NonFinite { date });
        }
    }
    for w in series.windows(2) {
        if w[0].0 >= w[1].0 {
            return Err(Error::InvalidInput(format!(
                "dates must be strictly increasing: {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared partition scoring
// ---------------------------------------------------------------------------

struct PartitionModel {
    t: usize,
    prefix_sum: Vec<f64>,
    prefix_sq: Vec<f64>,
    grand_mean: f64,
    w_floor: f64,
    degenerate: bool,
    half_tm1: f64,
    w0: f64,
    /// ln Ip(b) for b in 1..=t (index 0 unused).
    log_ip: Vec<f64>,
    /// Quadrature for Iw on [0, w0], pre-logged.
    w_nodes: Vec<f64>,
    w_log_nodes: Vec<f64>,
    w_log_weights: Vec<f64>,
}

impl PartitionModel {
    fn new(values: &[f64], p0: f64, w0: f64) -> Self {
        let t = values.len();
        let mut prefix_sum = vec![0.0; t + 1];
        let mut prefix_sq = vec![0.0; t + 1];
        for (i, &v) in values.iter().enumerate() {
            prefix_sum[i + 1] = prefix_sum[i] + v;
            prefix_sq[i + 1] = prefix_sq[i] + v * v;
        }
        let grand_mean = prefix_sum[t] / t as f64;
        let total_ss = (prefix_sq[t] - prefix_sum[t] * grand_mean).max(0.0);
        let degenerate = total_ss <= f64::EPSILON * prefix_sq[t].max(1.0);

        let (p_nodes, p_weights) = gl_on_interval(p0);
        let tf = t as f64;
        let mut log_ip = vec![f64::NEG_INFINITY; t + 1];
        let mut terms = vec![0.0; p_nodes.len()];
        for (b, slot) in log_ip.iter_mut().enumerate().skip(1) {
            let bf = b as f64;
            for (k, term) in terms.iter_mut().enumerate() {
                *term = p_weights[k].ln()
                    + (bf - 1.0) * p_nodes[k].ln()
                    + (tf - bf) * (1.0 - p_nodes[k]).ln();
            }
            *slot = log_sum_exp(&terms);
        }

        let (w_nodes, w_weights) = gl_on_interval(w0);
        let w_log_nodes = w_nodes.iter().map(|&x| x.ln()).collect();
        let w_log_weights = w_weights.iter().map(|&x| x.ln()).collect();
        PartitionModel {
            t,
            prefix_sum,
            prefix_sq,
            grand_mean,
            w_floor: W_FLOOR_REL * total_ss,
            degenerate,
            half_tm1: (t as f64 - 1.0) / 2.0,
            w0,
            log_ip,
            w_nodes,
            w_log_nodes,
            w_log_weights,
        }
    }

    /// Within and between contributions of the block [l, r).
    fn block(&self, l: usize, r: usize) -> (f64, f64) {
        let len = (r - l) as f64;
        let sum = self.prefix_sum[r] - self.prefix_sum[l];
        let sq = self.prefix_sq[r] - self.prefix_sq[l];
        let within = (sq - sum * sum / len).max(0.0);
        let dev = sum - len * self.grand_mean;
        (within, dev * dev / len)
    }

    fn block_mean(&self, l: usize, r: usize) -> f64 {
        (self.prefix_sum[r] - self.prefix_sum[l]) / (r - l) as f64
    }

    /// ln Iw with the exponent implied by `b` blocks.
    fn log_iw(&self, b: usize, within: f64, between: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let w_f = within.max(self.w_floor);
        let half_bm1 = (b as f64 - 1.0) / 2.0;
        let mut terms = [0.0f64; crate::numerics::GL_NODES];
        for k in 0..self.w_nodes.len() {
            terms[k] = self.w_log_weights[k] + half_bm1 * self.w_log_nodes[k]
                - self.half_tm1 * (w_f + self.w_nodes[k] * between).ln();
        }
        log_sum_exp(&terms)
    }

    fn log_weight(&self, b: usize, within: f64, between: f64) -> f64 {
        self.log_ip[b] + self.log_iw(b, within, between)
    }

    /// Posterior mean of the shrinkage ratio `w` given the partition.
    fn shrinkage(&self, b: usize, within: f64, between: f64) -> f64 {
        if self.degenerate {
            return self.w0 / 2.0;
        }
        (self.log_iw(b + 2, within, between) - self.log_iw(b, within, between)).exp()
    }

    /// (blocks, within, between) for the partition given by sorted starts
    /// (which must begin with 0).
    fn partition_stats(&self, starts: &[usize]) -> (usize, f64, f64) {
        let mut within = 0.0;
        let mut between = 0.0;
        for (i, &l) in starts.iter().enumerate() {
            let r = starts.get(i + 1).copied().unwrap_or(self.t);
            let (w, b) = self.block(l, r);
            within += w;
            between += b;
        }
        (starts.len(), within, between)
    }
}

// ---------------------------------------------------------------------------
// Gibbs sampler
// ---------------------------------------------------------------------------

/// Scans the series by Gibbs sampling over per-position change indicators.
/// Deterministic given the seed: the same configuration reproduces the same
/// probabilities bit for bit.
pub fn bcp_posterior(
    series: &[(NaiveDate, f64)],
    config: &ChangePointConfig,
) -> Result<ChangePointResult> {
    validate_series(series)?;
    config.validate()?;
    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    let t = values.len();
    let model = PartitionModel::new(&values, config.p0, config.w0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut starts: std::collections::BTreeSet<usize> = [0].into();
    let mut counts = vec![0u64; t];
    let mut mean_acc = vec![0.0f64; t];
    let total_sweeps = config.burn_in + config.iterations;

    for sweep in 0..total_sweeps {
        // Fresh totals each sweep cap the drift of incremental updates.
        let start_vec: Vec<usize> = starts.iter().copied().collect();
        let (mut blocks, mut within, mut between) = model.partition_stats(&start_vec);

        for i in 1..t {
            let l = *starts.range(..i).next_back().expect("0 is always a start");
            let r = starts.range(i + 1..).next().copied().unwrap_or(t);
            let (w_merged, b_merged) = model.block(l, r);
            let (w_la, b_la) = model.block(l, i);
            let (w_rb, b_rb) = model.block(i, r);
            let w_split = w_la + w_rb;
            let b_split = b_la + b_rb;
            let is_split = starts.contains(&i);
            let (w_rest, b_rest, blocks_merged) = if is_split {
                (within - w_split, between - b_split, blocks - 1)
            } else {
                (within - w_merged, between - b_merged, blocks)
            };
            let lw_split = model.log_weight(
                blocks_merged + 1,
                (w_rest + w_split).max(0.0),
                (b_rest + b_split).max(0.0),
            );
            let lw_merged = model.log_weight(
                blocks_merged,
                (w_rest + w_merged).max(0.0),
                (b_rest + b_merged).max(0.0),
            );
            let p_split = logistic(lw_split - lw_merged);
            let split = rng.random::<f64>() < p_split;
            if split != is_split {
                if split {
                    starts.insert(i);
                    blocks = blocks_merged + 1;
                    within = (w_rest + w_split).max(0.0);
                    between = (b_rest + b_split).max(0.0);
                } else {
                    starts.remove(&i);
                    blocks = blocks_merged;
                    within = (w_rest + w_merged).max(0.0);
                    between = (b_rest + b_merged).max(0.0);
                }
            }
        }

        if sweep < config.burn_in {
            continue;
        }
        let start_vec: Vec<usize> = starts.iter().copied().collect();
        let (blocks, within, between) = model.partition_stats(&start_vec);
        let shrink = model.shrinkage(blocks, within, between);
        for (j, &l) in start_vec.iter().enumerate() {
            let r = start_vec.get(j + 1).copied().unwrap_or(t);
            if j > 0 {
                counts[l] += 1;
            }
            let fitted = (1.0 - shrink) * model.block_mean(l, r) + shrink * model.grand_mean;
            for slot in mean_acc.iter_mut().take(r).skip(l) {
                *slot += fitted;
            }
        }
    }

    let kept = config.iterations as f64;
    let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / kept).collect();
    let posterior_means: Vec<f64> = mean_acc.iter().map(|&s| s / kept).collect();
    let dates: Vec<NaiveDate> = series.iter().map(|&(d, _)| d).collect();
    let intervals = detect_intervals(&dates, &probabilities, config.threshold)?;
    Ok(ChangePointResult {
        dates,
        values,
        probabilities,
        posterior_means,
        intervals,
    })
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

/// Scores every partition of a short series and returns the exact posterior
/// under the same weights the sampler uses. Feasible up to [`ENUM_LIMIT`]
/// points.
pub fn exact_posterior(
    series: &[(NaiveDate, f64)],
    config: &ChangePointConfig,
) -> Result<ChangePointResult> {
    validate_series(series)?;
    config.validate()?;
    let t = series.len();
    if t > ENUM_LIMIT {
        return Err(Error::EnumerationInfeasible {
            len: t,
            limit: ENUM_LIMIT,
        });
    }
    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    let model = PartitionModel::new(&values, config.p0, config.w0);

    let masks = 1usize << (t - 1);
    let mut log_weights = Vec::with_capacity(masks);
    let mut starts = Vec::with_capacity(t);
    for mask in 0..masks {
        starts.clear();
        starts.push(0);
        for i in 1..t {
            if mask & (1 << (i - 1)) != 0 {
                starts.push(i);
            }
        }
        let (b, w, btw) = model.partition_stats(&starts);
        log_weights.push(model.log_weight(b, w, btw));
    }
    let log_z = log_sum_exp(&log_weights);

    let mut probabilities = vec![0.0f64; t];
    let mut posterior_means = vec![0.0f64; t];
    for (mask, lw) in log_weights.iter().enumerate() {
        let weight = (lw - log_z).exp();
        if weight == 0.0 {
            continue;
        }
        starts.clear();
        starts.push(0);
        for i in 1..t {
            if mask & (1 << (i - 1)) != 0 {
                starts.push(i);
                probabilities[i] += weight;
            }
        }
        let (b, w, btw) = model.partition_stats(&starts);
        let shrink = model.shrinkage(b, w, btw);
        for (j, &l) in starts.iter().enumerate() {
            let r = starts.get(j + 1).copied().unwrap_or(t);
            let fitted = (1.0 - shrink) * model.block_mean(l, r) + shrink * model.grand_mean;
            for slot in posterior_means.iter_mut().take(r).skip(l) {
                *slot += weight * fitted;
            }
        }
    }

    let dates: Vec<NaiveDate> = series.iter().map(|&(d, _)| d).collect();
    let intervals = detect_intervals(&dates, &probabilities, config.threshold)?;
    Ok(ChangePointResult {
        dates,
        values,
        probabilities,
        posterior_means,
        intervals,
    })
}

/// Maximal runs of positions whose change probability exceeds the
/// threshold, reported as inclusive date spans.
pub fn detect_intervals(
    dates: &[NaiveDate],
    probabilities: &[f64],
    threshold: f64,
) -> Result<Vec<(NaiveDate, NaiveDate)>> {
    if dates.len() != probabilities.len() {
        return Err(Error::InvalidInput(format!(
            "{} dates but {} probabilities",
            dates.len(),
            probabilities.len()
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    if let Some(p) = probabilities
        .iter()
        .find(|p| !(0.0..=1.0).contains(*p))
    {
        return Err(Error::InvalidInput(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let mut intervals = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > threshold {
            open.get_or_insert(i);
        } else if let Some(s) = open.take() {
            intervals.push((dates[s], dates[i - 1]));
        }
    }
    if let Some(s) = open {
        intervals.push((dates[s], dates[dates.len() - 1]));
    }
    Ok(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series_from(values: &[f64]) -> Vec<(NaiveDate, f64)> {
        values.iter().enumerate().map(|(i, &v)| (day(i), v)).collect()
    }

    fn quick_config(seed: u64) -> ChangePointConfig {
        ChangePointConfig {
            iterations: 2000,
            burn_in: 200,
            seed,
            ..ChangePointConfig::default()
        }
    }

    #[test]
    fn validation_errors() {
        let short = series_from(&[1.0, 2.0]);
        assert!(matches!(
            bcp_posterior(&short, &ChangePointConfig::default()),
            Err(Error::SeriesTooShort { .. })
        ));
        let mut bad = series_from(&[1.0, 2.0, 3.0]);
        bad[1].1 = f64::NAN;
        assert!(matches!(
            bcp_posterior(&bad, &ChangePointConfig::default()),
            Err(Error::NonFinite { .. })
        ));
        let cfg = ChangePointConfig {
            p0: 0.0,
            ..ChangePointConfig::default()
        };
        assert!(bcp_posterior(&series_from(&[1.0, 2.0, 3.0]), &cfg).is_err());
        let cfg = ChangePointConfig {
            threshold: 1.0,
            ..ChangePointConfig::default()
        };
        assert!(bcp_posterior(&series_from(&[1.0, 2.0, 3.0]), &cfg).is_err());
        let long = series_from(&vec![0.5; 15]);
        assert!(matches!(
            exact_posterior(&long, &ChangePointConfig::default()),
            Err(Error::EnumerationInfeasible { len: 15, limit: 14 })
        ));
    }

    #[test]
    fn partition_stats_split_total_ss() {
        let values: Vec<f64> = (0..20).map(|i| ((i * 37) % 11) as f64 * 0.13).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let total_ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let model = PartitionModel::new(&values, 0.2, 0.2);
        for starts in [
            vec![0],
            vec![0, 7],
            vec![0, 3, 9, 15],
            (0..20).collect::<Vec<_>>(),
        ] {
            let (_, within, between) = model.partition_stats(&starts);
            assert!(
                (within + between - total_ss).abs() < 1e-9 * total_ss.max(1.0),
                "W + B must equal total SS: {within} + {between} vs {total_ss}"
            );
        }
    }

    #[test]
    fn constant_series_stays_quiet() {
        let series = series_from(&vec![0.37; 24]);
        let res = bcp_posterior(&series, &quick_config(1)).unwrap();
        assert_eq!(res.probabilities[0], 0.0);
        assert!(res.intervals.is_empty());
        for (&p, &m) in res.probabilities.iter().zip(&res.posterior_means) {
            assert!(p < 0.6, "probability {p} on a flat series");
            assert!((m - 0.37).abs() < 1e-12, "fitted {m}");
        }
    }

    #[test]
    fn clean_step_is_found_and_localized() {
        let mut values = vec![0.0; 60];
        for (i, v) in values.iter_mut().enumerate() {
            if i >= 30 {
                *v = 1.0;
            }
            *v += if i % 2 == 0 { 0.01 } else { -0.01 };
        }
        let series = series_from(&values);
        let res = bcp_posterior(&series, &quick_config(7)).unwrap();
        assert!(
            res.probabilities[30] > 0.9,
            "step probability {}",
            res.probabilities[30]
        );
        for (i, &p) in res.probabilities.iter().enumerate() {
            if i != 30 {
                assert!(p < 0.5, "position {i} has stray probability {p}");
            }
        }
        assert_eq!(res.intervals, vec![(day(30), day(30))]);
        let lo: f64 = res.posterior_means[..30].iter().sum::<f64>() / 30.0;
        let hi: f64 = res.posterior_means[30..].iter().sum::<f64>() / 30.0;
        assert!((lo - 0.0).abs() < 0.05, "low level {lo}");
        assert!((hi - 1.0).abs() < 0.05, "high level {hi}");
    }

    #[test]
    fn same_seed_reproduces_bits() {
        let values: Vec<f64> = (0..25)
            .map(|i| if i < 12 { 0.2 } else { 0.5 } + ((i * 13) % 7) as f64 * 0.01)
            .collect();
        let series = series_from(&values);
        let a = bcp_posterior(&series, &quick_config(99)).unwrap();
        let b = bcp_posterior(&series, &quick_config(99)).unwrap();
        for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.posterior_means.iter().zip(&b.posterior_means) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn sampler_tracks_exact_enumeration() {
        let values = [0.30, 0.31, 0.29, 0.30, 0.52, 0.53, 0.51, 0.52, 0.50];
        let series = series_from(&values);
        let cfg = ChangePointConfig {
            iterations: 4000,
            burn_in: 400,
            seed: 5,
            ..ChangePointConfig::default()
        };
        let exact = exact_posterior(&series, &cfg).unwrap();
        let sampled = bcp_posterior(&series, &cfg).unwrap();
        let tv = exact
            .probabilities
            .iter()
            .zip(&sampled.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(tv < 0.05, "total variation gap {tv}");
        let mean_gap = exact
            .posterior_means
            .iter()
            .zip(&sampled.posterior_means)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(mean_gap < 0.02, "posterior mean gap {mean_gap}");
    }

    #[test]
    fn enumeration_is_reversal_symmetric() {
        let values = [0.1, 0.4, 0.2, 0.8, 0.7, 0.3, 0.9, 0.5];
        let series = series_from(&values);
        let rev_values: Vec<f64> = values.iter().rev().copied().collect();
        let rev_series = series_from(&rev_values);
        let cfg = ChangePointConfig::default();
        let fwd = exact_posterior(&series, &cfg).unwrap();
        let rev = exact_posterior(&rev_series, &cfg).unwrap();
        // A change between positions i-1 and i maps to one between mirrored
        // neighbors: prob_fwd[i] == prob_rev[t - i].
        let t = values.len();
        for i in 1..t {
            let diff = (fwd.probabilities[i] - rev.probabilities[t - i]).abs();
            assert!(diff < 1e-9, "position {i}: {diff}");
        }
        for i in 0..t {
            let diff = (fwd.posterior_means[i] - rev.posterior_means[t - 1 - i]).abs();
            assert!(diff < 1e-9, "fitted {i}: {diff}");
        }
    }

    #[test]
    fn noise_free_step_enumerates_cleanly() {
        // W = 0 for the true split: the floor keeps weights finite and the
        // split still dominates.
        let values = [0.2, 0.2, 0.2, 0.2, 0.7, 0.7, 0.7, 0.7];
        let series = series_from(&values);
        let res = exact_posterior(&series, &ChangePointConfig::default()).unwrap();
        assert!(res.probabilities[4] > 0.99, "got {}", res.probabilities[4]);
        for (i, &p) in res.probabilities.iter().enumerate() {
            assert!(p.is_finite(), "position {i} not finite");
        }
    }

    #[test]
    fn interval_extraction_fixture() {
        let dates: Vec<NaiveDate> = (0..5).map(day).collect();
        let probs = [0.1, 0.7, 0.8, 0.2, 0.9];
        let intervals = detect_intervals(&dates, &probs, 0.6).unwrap();
        assert_eq!(intervals, vec![(day(1), day(2)), (day(4), day(4))]);
        assert!(detect_intervals(&dates, &probs[..4], 0.6).is_err());
        assert!(detect_intervals(&dates, &[0.1, 0.2, 1.3, 0.0, 0.0], 0.6).is_err());
    }
}
