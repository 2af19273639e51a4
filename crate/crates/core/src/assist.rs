//! Model-assisted estimation through a paired proxy.
//!
//! A small accurate survey publishes two proportions per wave (here called
//! the covariate `a` and the response `b`; in the motivating use they are
//! hesitancy and uptake). A beta regression with logit mean link,
//!
//! ```text
//! b_t ~ Beta(mu_t, phi),   logit(mu_t) = beta0 + beta1 * a_t
//! ```
//!
//! in the mean/precision parameterization, learns the bridge between the
//! two quantities. A benchmark measures the response in the whole
//! population; inverting the bridge at the benchmark value predicts the
//! covariate among units a big survey never recorded. Blending that
//! prediction with the big survey's own sample,
//!
//! ```text
//! assisted = (n * sample_mean + (N - n) * predicted) / N
//! ```
//!
//! trades the big survey's selection defect for the proxy model's error,
//! which is usually a good trade and is priced here by re-running the
//! decomposition on both versions.
//!
//! The likelihood is maximized by Newton steps on `(beta0, beta1, ln phi)`
//! with analytic gradient and Hessian, step halving, and an explicit
//! convergence flag. Standard errors come from the inverse observed
//! information at the optimum.

use chrono::NaiveDate;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::decomp::{decompose, BenchmarkPoint, Decomposition, SurveySnapshot};
use crate::error::{Error, Result};
use crate::numerics::{invert3, logistic, logit, solve3, trigamma};

/// Two aligned proportion series from one survey, with optional per-wave
/// sample sizes. Values may touch 0 or 1; the fit compresses boundary
/// responses before taking logs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub dates: Vec<NaiveDate>,
    pub covariate: Vec<f64>,
    pub response: Vec<f64>,
    pub sample_sizes: Option<Vec<u64>>,
}

impl PairedSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        covariate: Vec<f64>,
        response: Vec<f64>,
        sample_sizes: Option<Vec<u64>>,
    ) -> Result<Self> {
        let t = dates.len();
        if t < 3 {
            return Err(Error::SeriesTooShort { len: t, min: 3 });
        }
        if covariate.len() != t || response.len() != t {
            return Err(Error::InvalidInput(format!(
                "column lengths differ: {} dates, {} covariate, {} response",
                t,
                covariate.len(),
                response.len()
            )));
        }
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput(format!(
                    "dates must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (name, col) in [("covariate", &covariate), ("response", &response)] {
            if let Some(v) = col.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidInput(format!(
                    "{name} value {v} outside [0, 1]"
                )));
            }
        }
        if let Some(ns) = &sample_sizes {
            if ns.len() != t {
                return Err(Error::InvalidInput(format!(
                    "sample-size column has {} entries for {} dates",
                    ns.len(),
                    t
                )));
            }
            if ns.iter().any(|&n| n == 0) {
                return Err(Error::InvalidInput("sample sizes must be positive".into()));
            }
        }
        Ok(PairedSeries {
            dates,
            covariate,
            response,
            sample_sizes,
        })
    }

    /// Responses with exact 0s and 1s pulled inside the open interval via
    /// `(y * (T - 1) + 0.5) / T`; interior values pass through untouched.
    #[must_use]
    pub fn compressed_response(&self) -> Vec<f64> {
        let t = self.response.len() as f64;
        self.response
            .iter()
            .map(|&y| {
                if y == 0.0 || y == 1.0 {
                    (y * (t - 1.0) + 0.5) / t
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Mean-link coefficients and precision of the beta regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub beta0: f64,
    pub beta1: f64,
    pub phi: f64,
}

/// Fitted bridge, with an honest convergence flag: when false, the
/// parameters are the best point reached, not a stationary point.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFit {
    pub beta0: f64,
    pub beta1: f64,
    pub phi: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Squared correlation between the logit of the (compressed) responses
    /// and the fitted linear predictor; zero when either side is constant.
    pub pseudo_r2: f64,
    /// Standard errors for (beta0, beta1, phi) from the inverse observed
    /// information; NaN entries when the information matrix is singular or
    /// the coefficient was not estimated.
    pub std_errors: [f64; 3],
}

impl BetaFit {
    #[must_use]
    pub fn params(&self) -> BetaParams {
        BetaParams {
            beta0: self.beta0,
            beta1: self.beta1,
            phi: self.phi,
        }
    }

    /// Fitted mean at a covariate value.
    #[must_use]
    pub fn predict_mean(&self, covariate: f64) -> f64 {
        logistic(self.beta0 + self.beta1 * covariate)
    }
}

fn check_loglik_inputs(params: &BetaParams, covariate: &[f64], response: &[f64]) -> Result<()> {
    if !(params.phi.is_finite() && params.phi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "precision {} must be a positive real",
            params.phi
        )));
    }
    if !params.beta0.is_finite() || !params.beta1.is_finite() {
        return Err(Error::InvalidInput("coefficients must be finite".into()));
    }
    if covariate.len() != response.len() || covariate.is_empty() {
        return Err(Error::InvalidInput(
            "covariate and response must be non-empty and equally long".into(),
        ));
    }
    if let Some(v) = response.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::InvalidInput(format!(
            "response value {v} not strictly inside (0, 1); compress boundary values first"
        )));
    }
    if let Some(v) = covariate.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite covariate {v}")));
    }
    Ok(())
}

/// Log-likelihood of the beta regression at `params`. Negative infinity
/// when the linear predictor saturates the mean in floating point.
pub fn beta_loglik(params: &BetaParams, covariate: &[f64], response: &[f64]) -> Result<f64> {
    check_loglik_inputs(params, covariate, response)?;
    Ok(loglik_raw(params, covariate, response))
}

fn loglik_raw(params: &BetaParams, covariate: &[f64], response: &[f64]) -> f64 {
    let phi = params.phi;
    let mut acc = 0.0;
    for (&a, &y) in covariate.iter().zip(response) {
        let mu = logistic(params.beta0 + params.beta1 * a);
        if mu <= 0.0 || mu >= 1.0 {
            return f64::NEG_INFINITY;
        }
        acc += ln_gamma(phi) - ln_gamma(mu * phi) - ln_gamma((1.0 - mu) * phi)
            + (mu * phi - 1.0) * y.ln()
            + ((1.0 - mu) * phi - 1.0) * (1.0 - y).ln();
    }
    if acc.is_nan() {
        f64::NEG_INFINITY
    } else {
        acc
    }
}

/// Analytic gradient of the log-likelihood in `(beta0, beta1, phi)`.
pub fn beta_loglik_grad(
    params: &BetaParams,
    covariate: &[f64],
    response: &[f64],
) -> Result<[f64; 3]> {
    check_loglik_inputs(params, covariate, response)?;
    let g = grad_raw(params, covariate, response);
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::InvalidInput(
            "gradient undefined: the linear predictor saturates the mean".into(),
        ))
    }
}

fn grad_raw(params: &BetaParams, covariate: &[f64], response: &[f64]) -> [f64; 3] {
    let phi = params.phi;
    let mut g = [0.0f64; 3];
    for (&a, &y) in covariate.iter().zip(response) {
        let mu = logistic(params.beta0 + params.beta1 * a);
        let m = mu * (1.0 - mu);
        let y_star = logit(y);
        let mu_star = digamma(mu * phi) - digamma((1.0 - mu) * phi);
        let d_eta = phi * (y_star - mu_star) * m;
        g[0] += d_eta;
        g[1] += d_eta * a;
        g[2] += digamma(phi) - mu * digamma(mu * phi) - (1.0 - mu) * digamma((1.0 - mu) * phi)
            + mu * y.ln()
            + (1.0 - mu) * (1.0 - y).ln();
    }
    g
}

fn hessian_raw(params: &BetaParams, covariate: &[f64], response: &[f64]) -> [[f64; 3]; 3] {
    let phi = params.phi;
    let mut h = [[0.0f64; 3]; 3];
    for (&a, &y) in covariate.iter().zip(response) {
        let mu = logistic(params.beta0 + params.beta1 * a);
        let m = mu * (1.0 - mu);
        let y_star = logit(y);
        let t1 = trigamma(mu * phi);
        let t0 = trigamma((1.0 - mu) * phi);
        let mu_star = digamma(mu * phi) - digamma((1.0 - mu) * phi);
        // d^2 l / d eta^2
        let h_ee = phi * m * (-phi * (t1 + t0) * m + (y_star - mu_star) * (1.0 - 2.0 * mu));
        // d^2 l / d eta d phi
        let h_ep = m * ((y_star - mu_star) - phi * (t1 * mu - t0 * (1.0 - mu)));
        // d^2 l / d phi^2
        let h_pp = trigamma(phi) - mu * mu * t1 - (1.0 - mu) * (1.0 - mu) * t0;
        h[0][0] += h_ee;
        h[0][1] += h_ee * a;
        h[1][1] += h_ee * a * a;
        h[0][2] += h_ep;
        h[1][2] += h_ep * a;
        h[2][2] += h_pp;
    }
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];
    h
}

const GRAD_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 200;
const LN_PHI_BOUND: f64 = 18.420_680_743_952_367; // phi in [1e-8, 1e8]

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Maximizes the beta-regression likelihood on the series. A constant
/// covariate drops to an intercept-only fit with `beta1 = 0`. Never fails
/// on non-convergence: the flag on the result records it.
pub fn fit_beta_regression(series: &PairedSeries) -> Result<BetaFit> {
    let response = series.compressed_response();
    let covariate = &series.covariate;
    let t = response.len() as f64;

    let cov_min = covariate.iter().copied().fold(f64::INFINITY, f64::min);
    let cov_max = covariate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope_identified = (cov_max - cov_min) > 1e-12 * cov_max.abs().max(1.0);

    // Least squares of logit(y) on the covariate seeds the coefficients; a
    // moment match of the residual spread against mu(1-mu)/(1+phi) seeds
    // the precision.
    let y_star: Vec<f64> = response.iter().map(|&y| logit(y)).collect();
    let a_mean = covariate.iter().sum::<f64>() / t;
    let ys_mean = y_star.iter().sum::<f64>() / t;
    let mut b1 = 0.0;
    if slope_identified {
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (&a, &ys) in covariate.iter().zip(&y_star) {
            sxx += (a - a_mean) * (a - a_mean);
            sxy += (a - a_mean) * (ys - ys_mean);
        }
        b1 = sxy / sxx;
    }
    let b0 = ys_mean - b1 * a_mean;
    let mut resid_sq = 0.0;
    let mut spread = 0.0;
    for (&a, &y) in covariate.iter().zip(&response) {
        let mu = logistic(b0 + b1 * a);
        resid_sq += (y - mu) * (y - mu);
        spread += mu * (1.0 - mu);
    }
    let phi0 = if resid_sq > 0.0 {
        (spread / resid_sq - 1.0).clamp(0.5, 1e4)
    } else {
        1e4
    };

    // Newton iterations on (beta0, beta1, tau = ln phi).
    let mut theta = [b0, b1, phi0.ln()];
    let active = [true, slope_identified, true];
    let mut best = theta;
    let mut best_ll = loglik_raw(
        &BetaParams {
            beta0: theta[0],
            beta1: theta[1],
            phi: theta[2].exp(),
        },
        covariate,
        &response,
    );
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERS {
        iterations = iter;
        let phi = theta[2].exp();
        let params = BetaParams {
            beta0: theta[0],
            beta1: theta[1],
            phi,
        };
        let g = grad_raw(&params, covariate, &response);
        let grad_norm = g
            .iter()
            .zip(&active)
            .filter(|(_, &on)| on)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        if grad_norm < GRAD_TOL && best_ll.is_finite() {
            converged = true;
            break;
        }

        let h = hessian_raw(&params, covariate, &response);
        // Reparameterize the precision row/column to tau = ln phi.
        let mut ht = [
            [h[0][0], h[0][1], h[0][2] * phi],
            [h[1][0], h[1][1], h[1][2] * phi],
            [h[2][0] * phi, h[2][1] * phi, h[2][2] * phi * phi + g[2] * phi],
        ];
        let mut gt = [g[0], g[1], g[2] * phi];
        for i in 0..3 {
            if !active[i] {
                gt[i] = 0.0;
                for j in 0..3 {
                    ht[i][j] = 0.0;
                    ht[j][i] = 0.0;
                }
                ht[i][i] = -1.0;
            }
        }
        let newton = solve3(ht, [-gt[0], -gt[1], -gt[2]]);
        let mut step = match newton {
            Some(d) if d[0] * gt[0] + d[1] * gt[1] + d[2] * gt[2] > 0.0 => d,
            // Hessian not usable as a descent metric here; fall back to a
            // bounded gradient step.
            _ => {
                let scale = 0.5 / gt.iter().map(|v| v.abs()).fold(1.0, f64::max);
                [gt[0] * scale, gt[1] * scale, gt[2] * scale]
            }
        };
        // Predicted gain of the full step; for a Newton step this is half
        // the Newton decrement, an estimate of the loglik gap left.
        let expected_gain =
            0.5 * (step[0] * gt[0] + step[1] * gt[1] + step[2] * gt[2]);
        let mut improved = false;
        for _ in 0..40 {
            let mut cand = [
                theta[0] + step[0],
                theta[1] + step[1],
                (theta[2] + step[2]).clamp(-LN_PHI_BOUND, LN_PHI_BOUND),
            ];
            if !active[1] {
                cand[1] = 0.0;
            }
            let ll = loglik_raw(
                &BetaParams {
                    beta0: cand[0],
                    beta1: cand[1],
                    phi: cand[2].exp(),
                },
                covariate,
                &response,
            );
            if ll.is_finite() && ll > best_ll {
                theta = cand;
                best = cand;
                best_ll = ll;
                improved = true;
                break;
            }
            for s in &mut step {
                *s *= 0.5;
            }
        }
        if !improved {
            // Stalled. When the predicted gain is below what the loglik can
            // resolve in floating point, this is the numerical optimum even
            // though the raw gradient tolerance was not met; otherwise (for
            // example pinned at the precision bound with a live gradient)
            // the flag stays honest.
            if best_ll.is_finite() && expected_gain <= 1e-8 * (1.0 + best_ll.abs()) {
                converged = true;
            }
            break;
        }
    }

    let phi = best[2].exp();
    let params = BetaParams {
        beta0: best[0],
        beta1: best[1],
        phi,
    };
    let h = hessian_raw(&params, covariate, &response);
    let mut info = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            info[i][j] = -h[i][j];
        }
    }
    let std_errors = match invert3(info) {
        Some(inv) => {
            let mut se = [f64::NAN; 3];
            for (i, s) in se.iter_mut().enumerate() {
                if active[i] && inv[i][i] > 0.0 {
                    *s = inv[i][i].sqrt();
                }
            }
            se
        }
        None => [f64::NAN; 3],
    };

    let eta: Vec<f64> = covariate.iter().map(|&a| best[0] + best[1] * a).collect();
    let r = pearson(&y_star, &eta);
    Ok(BetaFit {
        beta0: best[0],
        beta1: best[1],
        phi,
        loglik: best_ll,
        converged,
        iterations,
        pseudo_r2: r * r,
        std_errors,
    })
}

/// Covariate value whose fitted mean equals `response_mean`: the bridge run
/// backwards, `(logit(m) - beta0) / beta1`.
pub fn invert_mean(fit: &BetaFit, response_mean: f64) -> Result<f64> {
    if !(response_mean > 0.0 && response_mean < 1.0) {
        return Err(Error::InvalidInput(format!(
            "response mean {response_mean} not strictly inside (0, 1)"
        )));
    }
    if fit.beta1.abs() < 1e-12 {
        return Err(Error::FlatFit);
    }
    Ok((logit(response_mean) - fit.beta0) / fit.beta1)
}

/// Blend of the recorded sample mean with a model prediction for the
/// unrecorded remainder: `(n * sample + (N - n) * predicted) / N`.
pub fn model_assisted_estimate(
    sample_mean: f64,
    sample_size: u64,
    predicted_mean: f64,
    population_size: u64,
) -> Result<f64> {
    if sample_size == 0 || population_size == 0 {
        return Err(Error::InvalidInput("sizes must be positive".into()));
    }
    if sample_size > population_size {
        return Err(Error::SampleExceedsPopulation {
            sample: sample_size,
            population: population_size,
        });
    }
    if !sample_mean.is_finite() || !predicted_mean.is_finite() {
        return Err(Error::InvalidInput("means must be finite".into()));
    }
    let n = sample_size as f64;
    let big_n = population_size as f64;
    Ok((n * sample_mean + (big_n - n) * predicted_mean) / big_n)
}

// ---------------------------------------------------------------------------
// Whole-series workflow
// ---------------------------------------------------------------------------

/// Options for the series workflow.
#[derive(Debug, Clone, PartialEq)]
pub struct AssistOptions {
    /// Benchmark scalings applied to the derived reference value.
    pub factors: Vec<f64>,
    /// Fit the covariate on the response and predict forward, instead of
    /// fitting the response on the covariate and inverting.
    pub direct_fit: bool,
    /// Sample size used for target waves that lack their own.
    pub target_fallback_n: Option<u64>,
    /// Sample size used for reference waves that lack their own.
    pub reference_fallback_n: Option<u64>,
}

impl Default for AssistOptions {
    fn default() -> Self {
        AssistOptions {
            factors: crate::decomp::DEFAULT_FACTORS.to_vec(),
            direct_fit: false,
            target_fallback_n: None,
            reference_fallback_n: None,
        }
    }
}

/// One target wave priced under one benchmark scaling, before and after
/// assistance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssistedRow {
    pub date: NaiveDate,
    pub factor: f64,
    /// Benchmark response (the population measurement) at this date.
    pub bench_response: f64,
    /// Covariate value the bridge predicts for unrecorded units.
    pub predicted_covariate: f64,
    /// Assisted value of the reference survey, used as the working
    /// benchmark for the covariate scale (after scaling by `factor`).
    pub reference_assisted: f64,
    pub original_estimate: f64,
    pub assisted_estimate: f64,
    pub original: Decomposition,
    pub assisted: Decomposition,
}

/// Full output of the workflow: the fitted bridge and one row per
/// (date, factor).
#[derive(Debug, Clone, PartialEq)]
pub struct AssistedAnalysis {
    pub fit: BetaFit,
    pub rows: Vec<AssistedRow>,
    /// Target dates dropped because no reference wave or benchmark point
    /// preceded them.
    pub skipped_dates: Vec<NaiveDate>,
}

fn latest_not_after<T>(dates: &[NaiveDate], items: &[T], cutoff: NaiveDate) -> Option<usize> {
    match dates.binary_search(&cutoff) {
        Ok(i) => Some(i),
        Err(0) => None,
        Err(i) => Some(i - 1),
    }
    .filter(|&i| i < items.len())
}

fn wave_n(series: &PairedSeries, idx: usize, fallback: Option<u64>, who: &str) -> Result<u64> {
    if let Some(ns) = &series.sample_sizes {
        return Ok(ns[idx]);
    }
    fallback.ok_or_else(|| {
        Error::InvalidInput(format!(
            "{who} sample sizes unavailable: add an n column or pass a fallback size"
        ))
    })
}

/// Runs the workflow: fit the bridge on the reference series, predict the
/// covariate for unrecorded units from each benchmark point, assist both
/// surveys, and price the target against the (scaled) assisted reference.
pub fn assisted_series(
    target: &PairedSeries,
    reference: &PairedSeries,
    benchmark: &[BenchmarkPoint],
    options: &AssistOptions,
) -> Result<AssistedAnalysis> {
    if benchmark.is_empty() {
        return Err(Error::InvalidInput("empty benchmark series".into()));
    }
    if options.factors.is_empty() {
        return Err(Error::InvalidInput("no sensitivity factors given".into()));
    }
    let fit = if options.direct_fit {
        let swapped = PairedSeries::new(
            reference.dates.clone(),
            reference.response.clone(),
            reference.covariate.clone(),
            reference.sample_sizes.clone(),
        )?;
        fit_beta_regression(&swapped)?
    } else {
        fit_beta_regression(reference)?
    };

    let bench_dates: Vec<NaiveDate> = benchmark.iter().map(|b| b.date).collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for (idx, &date) in target.dates.iter().enumerate() {
        let (Some(bi), Some(ri)) = (
            latest_not_after(&bench_dates, benchmark, date),
            latest_not_after(&reference.dates, &reference.covariate, date),
        ) else {
            skipped.push(date);
            continue;
        };
        let bench = &benchmark[bi];
        let big_n = bench.population_size;

        let predicted = if options.direct_fit {
            fit.predict_mean(bench.population_mean)
        } else {
            invert_mean(&fit, bench.population_mean)?
        };
        if !(predicted > 0.0 && predicted < 1.0) {
            return Err(Error::AssistedOutOfRange { value: predicted });
        }

        let n_ref = wave_n(reference, ri, options.reference_fallback_n, "reference")?;
        let reference_assisted = model_assisted_estimate(
            reference.covariate[ri],
            n_ref.min(big_n),
            predicted,
            big_n,
        )?;
        if !(reference_assisted > 0.0 && reference_assisted < 1.0) {
            return Err(Error::AssistedOutOfRange {
                value: reference_assisted,
            });
        }

        let n_target = wave_n(target, idx, options.target_fallback_n, "target")?;
        let original_estimate = target.covariate[idx];
        let assisted_estimate =
            model_assisted_estimate(original_estimate, n_target.min(big_n), predicted, big_n)?;

        let working_bench = BenchmarkPoint::binary(date, big_n, reference_assisted)?;
        for &factor in &options.factors {
            let scaled = working_bench.scaled(factor)?;
            let original_survey =
                SurveySnapshot::new(date, n_target, original_estimate, "original")?;
            let assisted_survey =
                SurveySnapshot::new(date, n_target, assisted_estimate, "assisted")?;
            let mut original = decompose(&original_survey, &scaled)?;
            original.sensitivity_factor = factor;
            let mut assisted = decompose(&assisted_survey, &scaled)?;
            assisted.sensitivity_factor = factor;
            rows.push(AssistedRow {
                date,
                factor,
                bench_response: bench.population_mean,
                predicted_covariate: predicted,
                reference_assisted: scaled.population_mean,
                original_estimate,
                assisted_estimate,
                original,
                assisted,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(AssistedAnalysis {
        fit,
        rows,
        skipped_dates: skipped,
    })
}
