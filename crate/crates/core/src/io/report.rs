//! Structured analysis reports: a versioned JSON document plus a flat CSV
//! table, both written deterministically so identical runs produce
//! byte-identical files.
//!
//! JSON cannot carry IEEE infinities, and effective sample sizes are
//! legitimately infinite when the observed error is exactly zero. The
//! [`ExtReal`] wrapper therefore serializes a finite value as
//! `{"value": x, "infinite": false}` and an infinite one as
//! `{"value": null, "infinite": true}`; an undefined value (degenerate
//! standard errors) is `null` with the flag false. CSV cells render
//! infinities as the literal `inf`. Finite floats go through Rust's
//! shortest round-trip formatting, so parse(emit(x)) returns x bit for
//! bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::changepoint::ChangePointResult;
use crate::decomp::Decomposition;
use crate::error::{Error, Result};

/// Version stamp carried by every report.
pub const SCHEMA_VERSION: &str = "defect-lens/1";

/// A real number extended with an infinity flag so it survives JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtReal {
    pub value: Option<f64>,
    pub infinite: bool,
}

impl ExtReal {
    /// Wraps a float, routing infinities to the flag and NaN to a bare
    /// null.
    #[must_use]
    pub fn new(x: f64) -> Self {
        if x.is_infinite() {
            ExtReal {
                value: None,
                infinite: true,
            }
        } else if x.is_nan() {
            ExtReal {
                value: None,
                infinite: false,
            }
        } else {
            ExtReal {
                value: Some(x),
                infinite: false,
            }
        }
    }

    /// Recovers the float, mapping the flag back to positive infinity.
    #[must_use]
    pub fn get(self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.value.unwrap_or(f64::NAN)
        }
    }

    fn csv_cell(self) -> String {
        if self.infinite {
            "inf".to_string()
        } else {
            match self.value {
                Some(v) => fmt_float(v),
                None => String::new(),
            }
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::new(x)
    }
}

/// Shortest decimal that round-trips to the same float; infinities as
/// "inf"/"-inf".
#[must_use]
pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

// ---------------------------------------------------------------------------
// Report blocks
// ---------------------------------------------------------------------------

/// Everything needed to rerun the analysis: seed, outcome mode, factor
/// list, and free-form flag echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, String>,
}

/// One decomposition, flattened for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompRow {
    pub date: NaiveDate,
    pub label: String,
    pub sensitivity_factor: f64,
    pub estimation_error: f64,
    pub ddc: f64,
    pub data_deficiency: f64,
    pub problem_difficulty: f64,
    pub n_eff_approx: ExtReal,
    pub n_eff_exact: f64,
}

impl DecompRow {
    #[must_use]
    pub fn new(date: NaiveDate, label: &str, d: &Decomposition) -> Self {
        DecompRow {
            date,
            label: label.to_string(),
            sensitivity_factor: d.sensitivity_factor,
            estimation_error: d.estimation_error,
            ddc: d.ddc,
            data_deficiency: d.data_deficiency,
            problem_difficulty: d.problem_difficulty,
            n_eff_approx: ExtReal::new(d.n_eff_approx),
            n_eff_exact: d.n_eff_exact,
        }
    }

    fn csv_cells(&self) -> Vec<String> {
        vec![
            self.date.to_string(),
            self.label.clone(),
            fmt_float(self.sensitivity_factor),
            fmt_float(self.estimation_error),
            fmt_float(self.ddc),
            fmt_float(self.data_deficiency),
            fmt_float(self.problem_difficulty),
            self.n_eff_approx.csv_cell(),
            fmt_float(self.n_eff_exact),
        ]
    }
}

/// One wave-over-wave difference estimand evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    /// Date of the later wave.
    pub date: NaiveDate,
    pub observed_change: f64,
    pub true_change: f64,
    pub diff_error: f64,
    pub n_eff: ExtReal,
    pub n_eff_finite: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposed_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposed_n_eff: Option<ExtReal>,
}

/// One scanned point of a change-point analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointRow {
    pub date: NaiveDate,
    pub value: f64,
    pub probability: f64,
    pub posterior_mean: f64,
    pub in_interval: bool,
}

/// An inclusive span of dates whose change probability stays above the
/// detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DateInterval {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Change-point results: per-date rows plus the detected spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointBlock {
    pub rows: Vec<ChangePointRow>,
    pub intervals: Vec<DateInterval>,
}

impl ChangePointBlock {
    #[must_use]
    pub fn from_result(result: &ChangePointResult) -> Self {
        let intervals: Vec<DateInterval> = result
            .intervals
            .iter()
            .map(|&(start, end)| DateInterval { start, end })
            .collect();
        let rows = result
            .dates
            .iter()
            .enumerate()
            .map(|(i, &date)| ChangePointRow {
                date,
                value: result.values[i],
                probability: result.probabilities[i],
                posterior_mean: result.posterior_means[i],
                in_interval: intervals
                    .iter()
                    .any(|iv| iv.start <= date && date <= iv.end),
            })
            .collect();
        ChangePointBlock { rows, intervals }
    }
}

/// Fitted bridge-model parameters echoed into assisted reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBlock {
    pub beta0: f64,
    pub beta1: f64,
    pub phi: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub pseudo_r2: f64,
    pub std_errors: [ExtReal; 3],
}

impl FitBlock {
    #[must_use]
    pub fn from_fit(fit: &crate::assist::BetaFit) -> Self {
        FitBlock {
            beta0: fit.beta0,
            beta1: fit.beta1,
            phi: fit.phi,
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
            pseudo_r2: fit.pseudo_r2,
            std_errors: [
                ExtReal::new(fit.std_errors[0]),
                ExtReal::new(fit.std_errors[1]),
                ExtReal::new(fit.std_errors[2]),
            ],
        }
    }
}

/// One simulation replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub replicate: u64,
    pub recorded: u64,
    pub sample_mean: f64,
    pub exact_ddc: f64,
    pub identity_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup_ddc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup_residual: Option<f64>,
}

/// The versioned report emitted by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub config: ConfigEcho,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<DecompRow>,
    /// Sensitivity sweep keyed by the factor's decimal rendering
    /// ("0.9", ..., "1.1").
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<DecompRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<Vec<DiffRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub changepoint: Option<ChangePointBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Vec<SimulationRow>>,
}

impl Report {
    #[must_use]
    pub fn new(command: &str, config: ConfigEcho) -> Self {
        Report {
            schema: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config,
            warnings: Vec::new(),
            rows: Vec::new(),
            sweep: BTreeMap::new(),
            diff: None,
            fit: None,
            changepoint: None,
            simulation: None,
        }
    }

    /// The sweep key for a factor.
    #[must_use]
    pub fn factor_key(factor: f64) -> String {
        fmt_float(factor)
    }
}

// ---------------------------------------------------------------------------
// Emission and parsing
// ---------------------------------------------------------------------------

/// Which files [`emit_report`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Json,
    Csv,
    #[default]
    Both,
}

/// Writes `{command}.json` and/or `{command}.csv` into `dir`, returning
/// the paths written.
pub fn emit_report(report: &Report, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join(format!("{}.json", report.command));
        let mut body = serde_json::to_string_pretty(report)
            .map_err(|e| Error::BadReport(e.to_string()))?;
        body.push('\n');
        std::fs::write(&path, body).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = dir.join(format!("{}.csv", report.command));
        std::fs::write(&path, csv_body(report)?).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a report back, verifying the schema version.
pub fn parse_report(path: &Path) -> Result<Report> {
    let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let report: Report =
        serde_json::from_str(&body).map_err(|e| Error::BadReport(e.to_string()))?;
    if report.schema != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch {
            found: report.schema,
            expected: SCHEMA_VERSION.to_string(),
        });
    }
    Ok(report)
}

/// Renders the flat table for a report. The layout follows the command;
/// decomposition-style commands emit one row per (date, factor, label).
pub fn csv_body(report: &Report) -> Result<String> {
    let (header, rows): (&[&str], Vec<Vec<String>>) = match report.command.as_str() {
        "diff" => {
            let rows = report.diff.as_ref().ok_or_else(|| {
                Error::BadReport("diff report carries no diff block".into())
            })?;
            (
                &[
                    "date",
                    "observed_change",
                    "true_change",
                    "diff_error",
                    "n_eff",
                    "n_eff_finite",
                    "decomposed_error",
                    "decomposed_n_eff",
                ],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.date.to_string(),
                            fmt_float(r.observed_change),
                            fmt_float(r.true_change),
                            fmt_float(r.diff_error),
                            r.n_eff.csv_cell(),
                            fmt_float(r.n_eff_finite),
                            r.decomposed_error.map(fmt_float).unwrap_or_default(),
                            r.decomposed_n_eff.map(ExtReal::csv_cell).unwrap_or_default(),
                        ]
                    })
                    .collect(),
            )
        }
        "changepoint" => {
            let block = report.changepoint.as_ref().ok_or_else(|| {
                Error::BadReport("changepoint report carries no changepoint block".into())
            })?;
            (
                &[
                    "date",
                    "value",
                    "probability",
                    "posterior_mean",
                    "in_interval",
                ],
                block
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.date.to_string(),
                            fmt_float(r.value),
                            fmt_float(r.probability),
                            fmt_float(r.posterior_mean),
                            r.in_interval.to_string(),
                        ]
                    })
                    .collect(),
            )
        }
        "simulate" => {
            let rows = report.simulation.as_ref().ok_or_else(|| {
                Error::BadReport("simulate report carries no simulation block".into())
            })?;
            (
                &[
                    "replicate",
                    "recorded",
                    "sample_mean",
                    "exact_ddc",
                    "identity_residual",
                    "subgroup_ddc",
                    "subgroup_residual",
                ],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.replicate.to_string(),
                            r.recorded.to_string(),
                            fmt_float(r.sample_mean),
                            fmt_float(r.exact_ddc),
                            fmt_float(r.identity_residual),
                            r.subgroup_ddc.map(fmt_float).unwrap_or_default(),
                            r.subgroup_residual.map(fmt_float).unwrap_or_default(),
                        ]
                    })
                    .collect(),
            )
        }
        // decompose, subgroup, assist: the sweep flattened in factor order.
        _ => {
            let mut rows = Vec::new();
            if report.sweep.is_empty() {
                rows.extend(report.rows.iter().map(DecompRow::csv_cells));
            } else {
                for factor in &report.config.factors {
                    let key = Report::factor_key(*factor);
                    let block = report.sweep.get(&key).ok_or_else(|| {
                        Error::BadReport(format!("sweep block '{key}' missing"))
                    })?;
                    rows.extend(block.iter().map(DecompRow::csv_cells));
                }
            }
            (
                &[
                    "date",
                    "label",
                    "sensitivity_factor",
                    "estimation_error",
                    "ddc",
                    "data_deficiency",
                    "problem_difficulty",
                    "n_eff_approx",
                    "n_eff_exact",
                ],
                rows,
            )
        }
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(header)
        .and_then(|()| rows.iter().try_for_each(|r| writer.write_record(r)))
        .map_err(|e| Error::BadReport(e.to_string()))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::BadReport(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::BadReport(e.to_string()))
}

/// Renders warnings for terminal display.
#[must_use]
pub fn format_warnings(warnings: &[String]) -> String {
    let mut out = String::new();
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{decompose, BenchmarkPoint, SurveySnapshot};

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn sample_decomp() -> Decomposition {
        let survey =
            SurveySnapshot::new(date("2021-04-02"), 234_000, 0.5292, "survey").unwrap();
        let bench = BenchmarkPoint::binary(date("2021-04-02"), 255_000_000, 0.4007).unwrap();
        decompose(&survey, &bench).unwrap()
    }

    fn sample_report() -> Report {
        let d = sample_decomp();
        let row = DecompRow::new(date("2021-04-02"), "survey", &d);
        let mut report = Report::new(
            "decompose",
            ConfigEcho {
                seed: crate::DEFAULT_SEED,
                outcome: "binary".to_string(),
                factors: vec![0.9, 0.95, 1.0, 1.05, 1.1],
                flags: BTreeMap::new(),
            },
        );
        report.rows = vec![row.clone()];
        for factor in [0.9, 0.95, 1.0, 1.05, 1.1] {
            let mut r = row.clone();
            r.sensitivity_factor = factor;
            report.sweep.insert(Report::factor_key(factor), vec![r]);
        }
        report
    }

    #[test]
    fn ext_real_covers_all_three_states() {
        let finite = ExtReal::new(14.54);
        assert_eq!(finite.value, Some(14.54));
        assert!(!finite.infinite);
        assert_eq!(finite.get(), 14.54);
        assert_eq!(finite.csv_cell(), "14.54");

        let infinite = ExtReal::new(f64::INFINITY);
        assert_eq!(infinite.value, None);
        assert!(infinite.infinite);
        assert_eq!(infinite.get(), f64::INFINITY);
        assert_eq!(infinite.csv_cell(), "inf");

        let undefined = ExtReal::new(f64::NAN);
        assert_eq!(undefined.value, None);
        assert!(!undefined.infinite);
        assert!(undefined.get().is_nan());
        assert_eq!(undefined.csv_cell(), "");
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1 + 0.2, 1.0 / 3.0, 1e-300, 255_000_000.0, 0.4007] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(0.95), "0.95");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();
        let written = emit_report(&report, dir.path(), ReportFormat::Json).unwrap();
        assert_eq!(written.len(), 1);
        let back = parse_report(&written[0]).unwrap();
        assert_eq!(back.schema, SCHEMA_VERSION);
        assert_eq!(back.rows.len(), 1);
        let (a, b) = (&report.rows[0], &back.rows[0]);
        assert_eq!(a.estimation_error.to_bits(), b.estimation_error.to_bits());
        assert_eq!(a.ddc.to_bits(), b.ddc.to_bits());
        assert_eq!(a.data_deficiency.to_bits(), b.data_deficiency.to_bits());
        assert_eq!(a.problem_difficulty.to_bits(), b.problem_difficulty.to_bits());
        assert_eq!(
            a.n_eff_approx.get().to_bits(),
            b.n_eff_approx.get().to_bits()
        );
        assert_eq!(a.n_eff_exact.to_bits(), b.n_eff_exact.to_bits());
        assert_eq!(report, back);
    }

    #[test]
    fn sweep_keys_match_the_default_factors() {
        let report = sample_report();
        let keys: Vec<&str> = report.sweep.keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["0.9", "0.95", "1", "1.05", "1.1"]);
    }

    #[test]
    fn emission_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();
        emit_report(&report, dir.path(), ReportFormat::Both).unwrap();
        let json1 = std::fs::read(dir.path().join("decompose.json")).unwrap();
        let csv1 = std::fs::read(dir.path().join("decompose.csv")).unwrap();
        emit_report(&report, dir.path(), ReportFormat::Both).unwrap();
        let json2 = std::fs::read(dir.path().join("decompose.json")).unwrap();
        let csv2 = std::fs::read(dir.path().join("decompose.csv")).unwrap();
        assert_eq!(json1, json2);
        assert_eq!(csv1, csv2);
    }

    #[test]
    fn infinite_n_eff_renders_as_inf_cell() {
        let mut report = sample_report();
        report.sweep.clear();
        report.config.factors.clear();
        report.rows[0].n_eff_approx = ExtReal::new(f64::INFINITY);
        let body = csv_body(&report).unwrap();
        let line = body.lines().nth(1).unwrap();
        assert!(line.contains(",inf,"), "{line}");
    }

    #[test]
    fn csv_flattens_sweep_in_factor_order() {
        let report = sample_report();
        let body = csv_body(&report).unwrap();
        let factors: Vec<&str> = body
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap())
            .collect();
        assert_eq!(factors, vec!["0.9", "0.95", "1", "1.05", "1.1"]);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = sample_report();
        report.schema = "defect-lens/0".to_string();
        let path = dir.path().join("decompose.json");
        std::fs::write(&path, serde_json::to_string(&report).unwrap()).unwrap();
        assert!(matches!(
            parse_report(&path),
            Err(Error::SchemaMismatch { .. })
        ));
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(parse_report(&path), Err(Error::BadReport(_))));
    }

    #[test]
    fn changepoint_block_flags_interval_membership() {
        let result = ChangePointResult {
            dates: (0..4)
                .map(|i| date("2021-05-01") + chrono::Days::new(7 * i))
                .collect(),
            values: vec![0.1, 0.1, 0.5, 0.5],
            probabilities: vec![0.0, 0.05, 0.95, 0.1],
            posterior_means: vec![0.1, 0.1, 0.5, 0.5],
            intervals: vec![(date("2021-05-15"), date("2021-05-15"))],
        };
        let block = ChangePointBlock::from_result(&result);
        assert_eq!(
            block
                .rows
                .iter()
                .map(|r| r.in_interval)
                .collect::<Vec<_>>(),
            vec![false, false, true, false]
        );
    }
}
