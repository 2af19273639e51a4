//! C ABI for the selection-bias diagnostics library.
//!
//! Conventions: functions that return [`DlStatus`] write their results
//! through out-pointers and never allocate; constructors return an opaque
//! handle, or null on failure, and every handle has a matching `_free`
//! function. After any failure, `dl_last_error_message` returns a
//! NUL-terminated description kept in thread-local storage; the pointer
//! stays valid until the next failing call on the same thread.
//!
//! Series functions take plain value arrays. Wave order is positional
//! (element `i` is wave `i`), so callers never pass calendar dates across
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::slice;

use chrono::NaiveDate;
use defect_lens::{
    bcp_posterior, decompose, fit_beta_regression, BenchmarkPoint, BetaFit, ChangePointConfig,
    ChangePointResult, Error, PairedSeries, SurveySnapshot,
};

// ---------------------------------------------------------------------------
// Status codes and error reporting
// ---------------------------------------------------------------------------

/// Result code of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument failed validation; see `dl_last_error_message`.
    InvalidInput = 2,
    /// The inputs were well formed but numerically degenerate (zero
    /// benchmark spread, non-convergence, out-of-range blend).
    Numerical = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let stored = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> DlStatus {
    let status = if err.is_numerical() {
        DlStatus::Numerical
    } else {
        DlStatus::InvalidInput
    };
    set_error(err.to_string());
    status
}

fn null_argument(name: &str) -> DlStatus {
    set_error(format!("argument '{name}' is null"));
    DlStatus::NullPointer
}

/// Description of the most recent failure on this thread, or null when the
/// last call succeeded. The pointer is owned by the library and stays
/// valid until the next failing `dl_` call on the same thread.
#[no_mangle]
pub extern "C" fn dl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// Positional series get synthetic consecutive dates; only their order
// matters to the underlying computations.
fn day_zero() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

fn synthetic_dates(len: usize) -> Vec<NaiveDate> {
    (0..len)
        .map(|i| day_zero() + chrono::Days::new(i as u64))
        .collect()
}

/// Builds a slice from a C array after the null check.
///
/// # Safety
/// `ptr` must point to `len` readable `f64` values when non-null.
unsafe fn values_from<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], DlStatus> {
    if ptr.is_null() {
        return Err(null_argument(name));
    }
    if len == 0 {
        set_error(format!("argument '{name}' has zero length"));
        return Err(DlStatus::InvalidInput);
    }
    Ok(unsafe { slice::from_raw_parts(ptr, len) })
}

// ---------------------------------------------------------------------------
// Error decomposition
// ---------------------------------------------------------------------------

/// One decomposed survey-vs-benchmark comparison.
///
/// `n_eff_approx` is `+INFINITY` when the defect correlation is exactly
/// zero; `n_eff_exact` is then the population size.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlDecomposition {
    /// Survey mean minus benchmark mean.
    pub estimation_error: f64,
    /// Defect correlation between outcome and recording.
    pub ddc: f64,
    /// sqrt((N - n) / n).
    pub data_deficiency: f64,
    /// Benchmark standard deviation.
    pub problem_difficulty: f64,
    /// Equivalent simple-random-sample size, large-N form.
    pub n_eff_approx: f64,
    /// Equivalent simple-random-sample size, finite-N form.
    pub n_eff_exact: f64,
}

/// Decomposes the error of a survey mean against a full-population
/// benchmark.
///
/// Pass a negative `population_sd` to treat the outcome as binary and
/// derive the benchmark spread from its mean; a non-negative value is used
/// as the continuous-outcome standard deviation.
///
/// # Safety
/// `out` must be null or a valid pointer to a `DlDecomposition`.
#[no_mangle]
pub unsafe extern "C" fn dl_decompose(
    sample_size: u64,
    sample_mean: f64,
    population_size: u64,
    population_mean: f64,
    population_sd: f64,
    out: *mut DlDecomposition,
) -> DlStatus {
    clear_error();
    if out.is_null() {
        return null_argument("out");
    }
    let date = day_zero();
    let bench = if population_sd < 0.0 {
        BenchmarkPoint::binary(date, population_size, population_mean)
    } else {
        BenchmarkPoint::continuous(date, population_size, population_mean, population_sd)
    };
    let result = bench.and_then(|bench| {
        let survey = SurveySnapshot::new(date, sample_size, sample_mean, "ffi")?;
        decompose(&survey, &bench)
    });
    match result {
        Ok(d) => {
            unsafe {
                *out = DlDecomposition {
                    estimation_error: d.estimation_error,
                    ddc: d.ddc,
                    data_deficiency: d.data_deficiency,
                    problem_difficulty: d.problem_difficulty,
                    n_eff_approx: d.n_eff_approx,
                    n_eff_exact: d.n_eff_exact,
                };
            }
            DlStatus::Ok
        }
        Err(err) => status_of(&err),
    }
}

// ---------------------------------------------------------------------------
// Beta-regression bridge
// ---------------------------------------------------------------------------

/// Opaque fitted bridge between a covariate and a (0, 1) response.
pub struct DlBetaFit {
    inner: BetaFit,
}

/// Fits the logit-mean beta regression of `response` on `covariate`
/// (`len` paired observations, `len >= 3`, values in [0, 1]).
///
/// Returns an owned handle, or null on failure (see
/// `dl_last_error_message`). Release it with `dl_beta_fit_free`.
///
/// # Safety
/// `covariate` and `response` must be null or point to `len` readable
/// `f64` values each.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_new(
    covariate: *const f64,
    response: *const f64,
    len: usize,
) -> *mut DlBetaFit {
    clear_error();
    let covariate = match unsafe { values_from(covariate, len, "covariate") } {
        Ok(v) => v,
        Err(_) => return std::ptr::null_mut(),
    };
    let response = match unsafe { values_from(response, len, "response") } {
        Ok(v) => v,
        Err(_) => return std::ptr::null_mut(),
    };
    let fitted = PairedSeries::new(
        synthetic_dates(len),
        covariate.to_vec(),
        response.to_vec(),
        None,
    )
    .and_then(|series| fit_beta_regression(&series));
    match fitted {
        Ok(inner) => Box::into_raw(Box::new(DlBetaFit { inner })),
        Err(err) => {
            status_of(&err);
            std::ptr::null_mut()
        }
    }
}

/// Writes the fitted intercept, slope, and precision.
///
/// # Safety
/// `fit` must be a live handle from `dl_beta_fit_new`; out-pointers must
/// be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_coefficients(
    fit: *const DlBetaFit,
    beta0: *mut f64,
    beta1: *mut f64,
    phi: *mut f64,
) -> DlStatus {
    clear_error();
    if fit.is_null() {
        return null_argument("fit");
    }
    if beta0.is_null() || beta1.is_null() || phi.is_null() {
        return null_argument("beta0/beta1/phi");
    }
    let fit = unsafe { &*fit };
    unsafe {
        *beta0 = fit.inner.beta0;
        *beta1 = fit.inner.beta1;
        *phi = fit.inner.phi;
    }
    DlStatus::Ok
}

/// Writes 1 when the optimizer met its convergence test, else 0.
///
/// # Safety
/// `fit` must be a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_converged(
    fit: *const DlBetaFit,
    out: *mut i32,
) -> DlStatus {
    clear_error();
    if fit.is_null() {
        return null_argument("fit");
    }
    if out.is_null() {
        return null_argument("out");
    }
    unsafe { *out = i32::from((*fit).inner.converged) };
    DlStatus::Ok
}

/// Writes the squared correlation between the logit response and the
/// fitted linear predictor.
///
/// # Safety
/// `fit` must be a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_pseudo_r2(
    fit: *const DlBetaFit,
    out: *mut f64,
) -> DlStatus {
    clear_error();
    if fit.is_null() {
        return null_argument("fit");
    }
    if out.is_null() {
        return null_argument("out");
    }
    unsafe { *out = (*fit).inner.pseudo_r2 };
    DlStatus::Ok
}

/// Writes the fitted mean response at `covariate`.
///
/// # Safety
/// `fit` must be a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_predict(
    fit: *const DlBetaFit,
    covariate: f64,
    out: *mut f64,
) -> DlStatus {
    clear_error();
    if fit.is_null() {
        return null_argument("fit");
    }
    if out.is_null() {
        return null_argument("out");
    }
    if !covariate.is_finite() {
        set_error(format!("covariate {covariate} must be finite"));
        return DlStatus::InvalidInput;
    }
    unsafe { *out = (*fit).inner.predict_mean(covariate) };
    DlStatus::Ok
}

/// Releases a fit handle. Null is a no-op; a handle must not be used
/// after it is freed.
///
/// # Safety
/// `fit` must be null or a handle from `dl_beta_fit_new` that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn dl_beta_fit_free(fit: *mut DlBetaFit) {
    if !fit.is_null() {
        drop(unsafe { Box::from_raw(fit) });
    }
}

// ---------------------------------------------------------------------------
// Change-point scan
// ---------------------------------------------------------------------------

/// Opaque change-point posterior over a positional series.
pub struct DlChangePoints {
    inner: ChangePointResult,
    intervals: Vec<(usize, usize)>,
}

/// Scans `values` (`len >= 3`) for change points with the Gibbs sampler.
///
/// Positions are 0-based indexes into `values`. Pass `p0 = 0.2`,
/// `w0 = 0.2`, `iterations = 5000`, `burn_in = 500`, `threshold = 0.6`
/// for the default configuration. Identical arguments produce identical
/// results. Returns an owned handle, or null on failure; release it with
/// `dl_changepoints_free`.
///
/// # Safety
/// `values` must be null or point to `len` readable `f64` values.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoint_scan(
    values: *const f64,
    len: usize,
    p0: f64,
    w0: f64,
    iterations: u64,
    burn_in: u64,
    seed: u64,
    threshold: f64,
) -> *mut DlChangePoints {
    clear_error();
    let values = match unsafe { values_from(values, len, "values") } {
        Ok(v) => v,
        Err(_) => return std::ptr::null_mut(),
    };
    let series: Vec<(NaiveDate, f64)> = synthetic_dates(len)
        .into_iter()
        .zip(values.iter().copied())
        .collect();
    let config = ChangePointConfig {
        p0,
        w0,
        iterations: iterations as usize,
        burn_in: burn_in as usize,
        seed,
        threshold,
    };
    match bcp_posterior(&series, &config) {
        Ok(inner) => {
            let zero = day_zero();
            let to_index =
                |d: NaiveDate| usize::try_from((d - zero).num_days()).unwrap_or(0);
            let intervals = inner
                .intervals
                .iter()
                .map(|&(start, end)| (to_index(start), to_index(end)))
                .collect();
            Box::into_raw(Box::new(DlChangePoints { inner, intervals }))
        }
        Err(err) => {
            status_of(&err);
            std::ptr::null_mut()
        }
    }
}

/// Number of scanned positions, or 0 for a null handle.
///
/// # Safety
/// `scan` must be null or a live handle from `dl_changepoint_scan`.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_len(scan: *const DlChangePoints) -> usize {
    if scan.is_null() {
        0
    } else {
        unsafe { (*scan).inner.values.len() }
    }
}

fn changepoint_field(
    scan: *const DlChangePoints,
    index: usize,
    out: *mut f64,
    pick: impl Fn(&ChangePointResult) -> &[f64],
) -> DlStatus {
    clear_error();
    if scan.is_null() {
        return null_argument("scan");
    }
    if out.is_null() {
        return null_argument("out");
    }
    let result = unsafe { &(*scan).inner };
    let field = pick(result);
    match field.get(index) {
        Some(&v) => {
            unsafe { *out = v };
            DlStatus::Ok
        }
        None => {
            set_error(format!(
                "index {index} out of range for {} positions",
                field.len()
            ));
            DlStatus::InvalidInput
        }
    }
}

/// Writes the posterior change probability at `index`.
///
/// # Safety
/// `scan` must be a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_probability(
    scan: *const DlChangePoints,
    index: usize,
    out: *mut f64,
) -> DlStatus {
    changepoint_field(scan, index, out, |r| &r.probabilities)
}

/// Writes the posterior mean of the series level at `index`.
///
/// # Safety
/// `scan` must be a live handle; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_posterior_mean(
    scan: *const DlChangePoints,
    index: usize,
    out: *mut f64,
) -> DlStatus {
    changepoint_field(scan, index, out, |r| &r.posterior_means)
}

/// Number of detected intervals, or 0 for a null handle.
///
/// # Safety
/// `scan` must be null or a live handle from `dl_changepoint_scan`.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_interval_count(
    scan: *const DlChangePoints,
) -> usize {
    if scan.is_null() {
        0
    } else {
        unsafe { (*scan).intervals.len() }
    }
}

/// Writes the inclusive positional bounds of detected interval `index`.
///
/// # Safety
/// `scan` must be a live handle; `start` and `end` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_interval(
    scan: *const DlChangePoints,
    index: usize,
    start: *mut usize,
    end: *mut usize,
) -> DlStatus {
    clear_error();
    if scan.is_null() {
        return null_argument("scan");
    }
    if start.is_null() || end.is_null() {
        return null_argument("start/end");
    }
    let intervals = unsafe { &(*scan).intervals };
    match intervals.get(index) {
        Some(&(s, e)) => {
            unsafe {
                *start = s;
                *end = e;
            }
            DlStatus::Ok
        }
        None => {
            set_error(format!(
                "index {index} out of range for {} intervals",
                intervals.len()
            ));
            DlStatus::InvalidInput
        }
    }
}

/// Releases a scan handle. Null is a no-op; a handle must not be used
/// after it is freed.
///
/// # Safety
/// `scan` must be null or a handle from `dl_changepoint_scan` that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn dl_changepoints_free(scan: *mut DlChangePoints) {
    if !scan.is_null() {
        drop(unsafe { Box::from_raw(scan) });
    }
}
