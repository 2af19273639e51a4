//! Exercises the C ABI through the exported symbols and checks the
//! committed header. Everything here calls the `extern "C"` functions the
//! way a C client would: raw pointers in, status codes out.

use std::ffi::CStr;
use std::process::Command;

use defect_lens_ffi::{
    dl_beta_fit_coefficients, dl_beta_fit_converged, dl_beta_fit_free, dl_beta_fit_new,
    dl_beta_fit_predict, dl_beta_fit_pseudo_r2, dl_changepoint_scan, dl_changepoints_free,
    dl_changepoints_interval, dl_changepoints_interval_count, dl_changepoints_len,
    dl_changepoints_posterior_mean, dl_changepoints_probability, dl_decompose,
    dl_last_error_message, dl_version, DlDecomposition, DlStatus,
};

fn last_error() -> String {
    let ptr = dl_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_owned()
}

fn zeroed_decomposition() -> DlDecomposition {
    DlDecomposition {
        estimation_error: 0.0,
        ddc: 0.0,
        data_deficiency: 0.0,
        problem_difficulty: 0.0,
        n_eff_approx: 0.0,
        n_eff_exact: 0.0,
    }
}

// ---------------------------------------------------------------------------
// Version and error plumbing
// ---------------------------------------------------------------------------

#[test]
fn version_is_a_static_string() {
    let ptr = dl_version();
    assert!(!ptr.is_null());
    let version = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn decompose_reports_null_and_validation_errors() {
    let status = unsafe { dl_decompose(100, 0.5, 1000, 0.4, -1.0, std::ptr::null_mut()) };
    assert_eq!(status, DlStatus::NullPointer);
    assert!(last_error().contains("out"));

    let mut out = zeroed_decomposition();
    let status = unsafe { dl_decompose(0, 0.5, 1000, 0.4, -1.0, &mut out) };
    assert_eq!(status, DlStatus::InvalidInput);
    assert!(last_error().contains("positive"));

    // A constant binary benchmark has zero spread, so the defect
    // correlation is undefined: numerical, not invalid.
    let status = unsafe { dl_decompose(100, 0.1, 1000, 0.0, -1.0, &mut out) };
    assert_eq!(status, DlStatus::Numerical);

    // Success clears the sticky message.
    let status = unsafe { dl_decompose(100, 0.5, 1000, 0.4, -1.0, &mut out) };
    assert_eq!(status, DlStatus::Ok);
    assert!(dl_last_error_message().is_null());
}

// ---------------------------------------------------------------------------
// Decomposition values
// ---------------------------------------------------------------------------

#[test]
fn decompose_matches_the_library() {
    // Large electorate-style comparison: a huge survey that is still worth
    // only a handful of random respondents.
    let mut out = zeroed_decomposition();
    let status = unsafe { dl_decompose(234_000, 0.5292, 255_000_000, 0.4007, -1.0, &mut out) };
    assert_eq!(status, DlStatus::Ok);

    assert!((out.estimation_error - 0.1285).abs() < 1e-12);
    assert!((out.data_deficiency - 32.996).abs() < 5e-3);
    assert!((out.problem_difficulty - 0.49).abs() < 5e-3);
    assert!((out.ddc - 0.00795).abs() < 5e-5);
    assert!((out.n_eff_approx - 14.5).abs() < 0.1);
    assert!(out.n_eff_exact < out.n_eff_approx);
    assert!((out.n_eff_exact - out.n_eff_approx).abs() < 1e-4);

    // An explicit sd switches to the continuous path.
    let mut cont = zeroed_decomposition();
    let status = unsafe { dl_decompose(234_000, 0.5292, 255_000_000, 0.4007, 0.9, &mut cont) };
    assert_eq!(status, DlStatus::Ok);
    assert!((cont.problem_difficulty - 0.9).abs() < 1e-15);
    assert!(cont.ddc.abs() < out.ddc.abs());
}

// ---------------------------------------------------------------------------
// Beta-regression handles
// ---------------------------------------------------------------------------

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn beta_fit_handle_round_trip() {
    let t = 40;
    let covariate: Vec<f64> = (0..t).map(|i| i as f64 / (t - 1) as f64).collect();
    // Alternating wobble keeps the response off the exact curve so the
    // precision estimate stays finite.
    let response: Vec<f64> = covariate
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let wobble = if i % 2 == 0 { 0.003 } else { -0.003 };
            logistic(-0.5 + 1.5 * x) + wobble
        })
        .collect();

    let fit = unsafe { dl_beta_fit_new(covariate.as_ptr(), response.as_ptr(), t) };
    assert!(!fit.is_null(), "fit failed: {}", last_error());

    let mut converged = 0i32;
    assert_eq!(
        unsafe { dl_beta_fit_converged(fit, &mut converged) },
        DlStatus::Ok
    );
    assert_eq!(converged, 1);

    let (mut b0, mut b1, mut phi) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { dl_beta_fit_coefficients(fit, &mut b0, &mut b1, &mut phi) },
        DlStatus::Ok
    );
    assert!((b0 - -0.5).abs() < 0.05, "beta0 {b0}");
    assert!((b1 - 1.5).abs() < 0.05, "beta1 {b1}");
    assert!(phi > 100.0, "phi {phi}");

    let mut r2 = 0.0;
    assert_eq!(unsafe { dl_beta_fit_pseudo_r2(fit, &mut r2) }, DlStatus::Ok);
    assert!(r2 > 0.95, "pseudo r2 {r2}");

    // The prediction is the fitted curve evaluated at the covariate.
    let mut predicted = 0.0;
    assert_eq!(
        unsafe { dl_beta_fit_predict(fit, 0.5, &mut predicted) },
        DlStatus::Ok
    );
    assert!((predicted - logistic(b0 + 0.5 * b1)).abs() < 1e-12);

    let status = unsafe { dl_beta_fit_predict(fit, f64::NAN, &mut predicted) };
    assert_eq!(status, DlStatus::InvalidInput);

    unsafe { dl_beta_fit_free(fit) };
    unsafe { dl_beta_fit_free(std::ptr::null_mut()) };
}

#[test]
fn beta_fit_rejects_bad_series() {
    let fit = unsafe { dl_beta_fit_new(std::ptr::null(), std::ptr::null(), 5) };
    assert!(fit.is_null());
    assert!(last_error().contains("covariate"));

    let short = [0.2, 0.4];
    let fit = unsafe { dl_beta_fit_new(short.as_ptr(), short.as_ptr(), short.len()) };
    assert!(fit.is_null());
    assert!(last_error().contains('3'));

    let covariate = [0.1, 0.2, 0.3, 0.4];
    let response = [0.5, 0.6, 1.4, 0.7];
    let fit = unsafe { dl_beta_fit_new(covariate.as_ptr(), response.as_ptr(), 4) };
    assert!(fit.is_null());
    assert!(last_error().contains("1.4"));
}

// ---------------------------------------------------------------------------
// Change-point handles
// ---------------------------------------------------------------------------

fn step_series() -> Vec<f64> {
    let mut values = Vec::with_capacity(12);
    for i in 0..12 {
        let level = if i < 6 { 0.30 } else { 0.50 };
        let wobble = if i % 2 == 0 { 0.004 } else { -0.004 };
        values.push(level + wobble);
    }
    values
}

#[test]
fn changepoint_scan_finds_the_step() {
    let values = step_series();
    let scan = unsafe {
        dl_changepoint_scan(values.as_ptr(), values.len(), 0.2, 0.2, 4000, 400, 99, 0.6)
    };
    assert!(!scan.is_null(), "scan failed: {}", last_error());
    assert_eq!(unsafe { dl_changepoints_len(scan) }, 12);

    let mut probabilities = [0.0; 12];
    for (i, slot) in probabilities.iter_mut().enumerate() {
        assert_eq!(
            unsafe { dl_changepoints_probability(scan, i, slot) },
            DlStatus::Ok
        );
    }
    // The first position can never be a change; the step dominates.
    assert_eq!(probabilities[0], 0.0);
    assert!(probabilities[6] > 0.6, "step probability {}", probabilities[6]);
    let spurious = probabilities
        .iter()
        .enumerate()
        .filter(|&(i, _)| !(5..=7).contains(&i))
        .map(|(_, &p)| p)
        .fold(0.0f64, f64::max);
    assert!(spurious < 0.5, "spurious probability {spurious}");

    let mut low = 0.0;
    let mut high = 0.0;
    assert_eq!(
        unsafe { dl_changepoints_posterior_mean(scan, 0, &mut low) },
        DlStatus::Ok
    );
    assert_eq!(
        unsafe { dl_changepoints_posterior_mean(scan, 11, &mut high) },
        DlStatus::Ok
    );
    assert!((low - 0.30).abs() < 0.05, "posterior mean {low}");
    assert!((high - 0.50).abs() < 0.05, "posterior mean {high}");

    assert_eq!(unsafe { dl_changepoints_interval_count(scan) }, 1);
    let (mut start, mut end) = (0usize, 0usize);
    assert_eq!(
        unsafe { dl_changepoints_interval(scan, 0, &mut start, &mut end) },
        DlStatus::Ok
    );
    assert!(start <= 6 && 6 <= end, "interval [{start}, {end}]");

    let mut out = 0.0;
    let status = unsafe { dl_changepoints_probability(scan, 12, &mut out) };
    assert_eq!(status, DlStatus::InvalidInput);
    assert!(last_error().contains("out of range"));

    unsafe { dl_changepoints_free(scan) };
    unsafe { dl_changepoints_free(std::ptr::null_mut()) };
}

#[test]
fn changepoint_scan_is_deterministic() {
    let values = step_series();
    let run = || unsafe {
        let scan =
            dl_changepoint_scan(values.as_ptr(), values.len(), 0.2, 0.2, 2000, 200, 7, 0.6);
        assert!(!scan.is_null());
        let len = dl_changepoints_len(scan);
        let mut bits = Vec::with_capacity(2 * len);
        for i in 0..len {
            let mut p = 0.0;
            let mut m = 0.0;
            assert_eq!(dl_changepoints_probability(scan, i, &mut p), DlStatus::Ok);
            assert_eq!(dl_changepoints_posterior_mean(scan, i, &mut m), DlStatus::Ok);
            bits.push(p.to_bits());
            bits.push(m.to_bits());
        }
        dl_changepoints_free(scan);
        bits
    };
    assert_eq!(run(), run());
}

#[test]
fn changepoint_scan_rejects_bad_input() {
    let scan = unsafe { dl_changepoint_scan(std::ptr::null(), 5, 0.2, 0.2, 100, 10, 1, 0.6) };
    assert!(scan.is_null());
    assert!(last_error().contains("values"));

    let with_nan = [0.3, f64::NAN, 0.4, 0.5];
    let scan = unsafe {
        dl_changepoint_scan(with_nan.as_ptr(), with_nan.len(), 0.2, 0.2, 100, 10, 1, 0.6)
    };
    assert!(scan.is_null());
    assert!(!dl_last_error_message().is_null());
}

// ---------------------------------------------------------------------------
// Header
// ---------------------------------------------------------------------------

#[test]
fn committed_header_is_current_and_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/defect_lens.h");
    let text = std::fs::read_to_string(header).expect("header missing; run cargo build");
    for symbol in [
        "DEFECT_LENS_H",
        "DL_STATUS_OK",
        "dl_decompose",
        "dl_beta_fit_new",
        "dl_changepoint_scan",
        "dl_last_error_message",
    ] {
        assert!(text.contains(symbol), "header lost {symbol}");
    }

    let Ok(probe) = Command::new("cc").arg("--version").output() else {
        eprintln!("cc unavailable; skipping syntax check");
        return;
    };
    if !probe.status.success() {
        eprintln!("cc unavailable; skipping syntax check");
        return;
    }

    let dir = tempfile::tempdir().unwrap();
    let main_c = dir.path().join("probe.c");
    std::fs::write(
        &main_c,
        "#include \"defect_lens.h\"\nint main(void) { return (int)DL_STATUS_OK; }\n",
    )
    .unwrap();
    let output = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&main_c)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "header failed C syntax check:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}
