//! CSV ingestion, date alignment, and report emission.
//!
//! Three input schemas, all UTF-8 with a header row, columns matched by
//! case-insensitive name, dates in ISO-8601:
//!
//! - survey: `date,n,ybar[,label]` with `ybar` the sample proportion or
//!   mean and `n` the sample size;
//! - benchmark: `date,N,count|ybar[,sd]` with either a raw `count`
//!   (converted to `ybar = count / N`) or a ready mean; binary outcomes
//!   derive the sd from the mean unless an `sd` column overrides it,
//!   continuous outcomes require one;
//! - paired: `date,a,b[,n]` carrying the covariate `a` and response `b`
//!   of a linked two-question series.
//!
//! Dates must be strictly increasing; duplicates are reported with both
//! offending line numbers. Alignment joins survey dates to benchmark
//! dates either exactly or by nearest preceding date, and cumulative
//! benchmark series can be differenced into incident form with negative
//! increments flagged as warnings rather than errors (downward revisions
//! happen in real benchmark feeds).

pub mod report;

pub use report::{
    emit_report, fmt_float, parse_report, ChangePointBlock, ChangePointRow, ConfigEcho,
    DecompRow, DiffRow, ExtReal, FitBlock, Report, ReportFormat, SimulationRow,
    SCHEMA_VERSION,
};

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;

use crate::assist::PairedSeries;
use crate::decomp::{BenchmarkPoint, Outcome, SurveySnapshot};
use crate::error::{Error, Result};

/// Which input schema a file is parsed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Survey,
    Benchmark,
    Paired,
}

/// A parsed input file.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesFile {
    Survey(Vec<SurveySnapshot>),
    Benchmark(Vec<BenchmarkPoint>),
    Paired(PairedSeries),
}

impl SeriesFile {
    /// Unwraps a survey file; errors otherwise.
    pub fn into_survey(self) -> Result<Vec<SurveySnapshot>> {
        match self {
            SeriesFile::Survey(rows) => Ok(rows),
            _ => Err(Error::InvalidInput("expected a survey file".into())),
        }
    }

    /// Unwraps a benchmark file; errors otherwise.
    pub fn into_benchmark(self) -> Result<Vec<BenchmarkPoint>> {
        match self {
            SeriesFile::Benchmark(rows) => Ok(rows),
            _ => Err(Error::InvalidInput("expected a benchmark file".into())),
        }
    }

    /// Unwraps a paired file; errors otherwise.
    pub fn into_paired(self) -> Result<PairedSeries> {
        match self {
            SeriesFile::Paired(series) => Ok(series),
            _ => Err(Error::InvalidInput("expected a paired file".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct RawTable {
    /// lowercase header name -> column index
    columns: HashMap<String, usize>,
    /// (line number, cells)
    rows: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        .clone();
    let mut columns = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        let clean = name.trim_start_matches('\u{feff}').trim().to_lowercase();
        columns.insert(clean, i);
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            Error::Parse {
                line,
                column: "row".into(),
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no data rows in {}",
            path.display()
        )));
    }
    Ok(RawTable { columns, rows })
}

impl RawTable {
    fn column(&self, name: &str) -> Result<usize> {
        self.columns.get(name).copied().ok_or_else(|| {
            Error::InvalidInput(format!("missing column '{name}'"))
        })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }
}

fn cell<'a>(record: &'a csv::StringRecord, idx: usize, line: u64, column: &str) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| Error::Parse {
        line,
        column: column.into(),
        message: "missing cell".into(),
    })
}

fn parse_date(record: &csv::StringRecord, idx: usize, line: u64) -> Result<NaiveDate> {
    let raw = cell(record, idx, line, "date")?;
    raw.parse::<NaiveDate>().map_err(|_| Error::Parse {
        line,
        column: "date".into(),
        message: format!("'{raw}' is not an ISO-8601 date"),
    })
}

fn parse_f64(record: &csv::StringRecord, idx: usize, line: u64, column: &str) -> Result<f64> {
    let raw = cell(record, idx, line, column)?;
    let value: f64 = raw.parse().map_err(|_| Error::Parse {
        line,
        column: column.into(),
        message: format!("'{raw}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            column: column.into(),
            message: format!("'{raw}' is not finite"),
        });
    }
    Ok(value)
}

fn parse_u64(record: &csv::StringRecord, idx: usize, line: u64, column: &str) -> Result<u64> {
    let raw = cell(record, idx, line, column)?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        column: column.into(),
        message: format!("'{raw}' is not a nonnegative integer"),
    })
}

/// Enforces strictly increasing dates, reporting duplicates with both line
/// numbers.
fn check_date_order(dates: &[(u64, NaiveDate)]) -> Result<()> {
    for pair in dates.windows(2) {
        let (first_line, prev) = pair[0];
        let (second_line, next) = pair[1];
        if next == prev {
            return Err(Error::DuplicateDate {
                date: prev,
                first_line,
                second_line,
            });
        }
        if next < prev {
            return Err(Error::NonIncreasingDate {
                line: second_line,
                date: next,
                previous: prev,
            });
        }
    }
    Ok(())
}

/// Parses one CSV file under the given schema. The outcome mode decides
/// whether means are range-checked as proportions and whether a benchmark
/// needs an explicit sd.
pub fn parse_series(path: &Path, kind: SeriesKind, outcome: Outcome) -> Result<SeriesFile> {
    let table = read_table(path)?;
    match kind {
        SeriesKind::Survey => parse_survey(&table, outcome).map(SeriesFile::Survey),
        SeriesKind::Benchmark => parse_benchmark(&table, outcome).map(SeriesFile::Benchmark),
        SeriesKind::Paired => parse_paired(&table).map(SeriesFile::Paired),
    }
}

fn parse_survey(table: &RawTable, outcome: Outcome) -> Result<Vec<SurveySnapshot>> {
    let date_col = table.column("date")?;
    let n_col = table.column("n")?;
    let ybar_col = table.column("ybar")?;
    let label_col = table.optional_column("label");
    let mut out = Vec::with_capacity(table.rows.len());
    let mut dates = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let date = parse_date(record, date_col, *line)?;
        let n = parse_u64(record, n_col, *line, "n")?;
        let ybar = parse_f64(record, ybar_col, *line, "ybar")?;
        if outcome == Outcome::Binary && !(0.0..=1.0).contains(&ybar) {
            return Err(Error::Parse {
                line: *line,
                column: "ybar".into(),
                message: format!("{ybar} outside [0, 1] for a binary outcome"),
            });
        }
        let label = match label_col {
            Some(idx) => {
                let raw = cell(record, idx, *line, "label")?;
                if raw.is_empty() { "survey" } else { raw }
            }
            None => "survey",
        };
        dates.push((*line, date));
        out.push(SurveySnapshot::new(date, n, ybar, label)?);
    }
    check_date_order(&dates)?;
    Ok(out)
}

fn parse_benchmark(table: &RawTable, outcome: Outcome) -> Result<Vec<BenchmarkPoint>> {
    let date_col = table.column("date")?;
    let n_col = table.column("n")?;
    let count_col = table.optional_column("count");
    let ybar_col = table.optional_column("ybar");
    let sd_col = table.optional_column("sd");
    if count_col.is_none() && ybar_col.is_none() {
        return Err(Error::InvalidInput(
            "benchmark needs a 'count' or 'ybar' column".into(),
        ));
    }
    if outcome == Outcome::Continuous && sd_col.is_none() {
        return Err(Error::InvalidInput(
            "continuous benchmarks need an 'sd' column".into(),
        ));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    let mut dates = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let date = parse_date(record, date_col, *line)?;
        let big_n = parse_u64(record, n_col, *line, "n")?;
        let ybar = match (count_col, ybar_col) {
            (Some(idx), _) if !cell(record, idx, *line, "count")?.is_empty() => {
                let count = parse_f64(record, idx, *line, "count")?;
                if count < 0.0 || count > big_n as f64 {
                    return Err(Error::Parse {
                        line: *line,
                        column: "count".into(),
                        message: format!("count {count} outside [0, N={big_n}]"),
                    });
                }
                count / big_n as f64
            }
            (_, Some(idx)) => parse_f64(record, idx, *line, "ybar")?,
            _ => {
                return Err(Error::Parse {
                    line: *line,
                    column: "count".into(),
                    message: "empty count and no ybar column".into(),
                })
            }
        };
        if outcome == Outcome::Binary && !(0.0..=1.0).contains(&ybar) {
            return Err(Error::Parse {
                line: *line,
                column: "ybar".into(),
                message: format!("{ybar} outside [0, 1] for a binary outcome"),
            });
        }
        let sd = match sd_col {
            Some(idx) => {
                let raw = cell(record, idx, *line, "sd")?;
                if raw.is_empty() {
                    None
                } else {
                    Some(parse_f64(record, idx, *line, "sd")?)
                }
            }
            None => None,
        };
        if outcome == Outcome::Continuous && sd.is_none() {
            return Err(Error::Parse {
                line: *line,
                column: "sd".into(),
                message: "continuous benchmarks need an sd value".into(),
            });
        }
        dates.push((*line, date));
        out.push(BenchmarkPoint::new(date, big_n, ybar, sd, outcome)?);
    }
    check_date_order(&dates)?;
    Ok(out)
}

fn parse_paired(table: &RawTable) -> Result<PairedSeries> {
    let date_col = table.column("date")?;
    let a_col = table.column("a")?;
    let b_col = table.column("b")?;
    let n_col = table.optional_column("n");
    let mut dates = Vec::with_capacity(table.rows.len());
    let mut lined = Vec::with_capacity(table.rows.len());
    let mut covariate = Vec::with_capacity(table.rows.len());
    let mut response = Vec::with_capacity(table.rows.len());
    let mut sizes = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let date = parse_date(record, date_col, *line)?;
        let a = parse_f64(record, a_col, *line, "a")?;
        let b = parse_f64(record, b_col, *line, "b")?;
        for (column, value) in [("a", a), ("b", b)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Parse {
                    line: *line,
                    column: column.into(),
                    message: format!("{value} outside [0, 1]"),
                });
            }
        }
        if let Some(idx) = n_col {
            sizes.push(parse_u64(record, idx, *line, "n")?);
        }
        lined.push((*line, date));
        dates.push(date);
        covariate.push(a);
        response.push(b);
    }
    check_date_order(&lined)?;
    let sizes = if n_col.is_some() { Some(sizes) } else { None };
    PairedSeries::new(dates, covariate, response, sizes)
}

// ---------------------------------------------------------------------------
// Gap benchmarks
// ---------------------------------------------------------------------------

/// One benchmark point for a subgroup-gap analysis: the population size,
/// the true between-group gap, and the flagged group's population share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub date: NaiveDate,
    pub population_size: u64,
    pub gap: f64,
    pub share: f64,
}

/// Parses the gap-benchmark schema `date,N,gap,share`.
pub fn parse_gap_series(path: &Path) -> Result<Vec<GapPoint>> {
    let table = read_table(path)?;
    let date_col = table.column("date")?;
    let n_col = table.column("n")?;
    let gap_col = table.column("gap")?;
    let share_col = table.column("share")?;
    let mut out = Vec::with_capacity(table.rows.len());
    let mut dates = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let date = parse_date(record, date_col, *line)?;
        let population_size = parse_u64(record, n_col, *line, "n")?;
        if population_size < 2 {
            return Err(Error::Parse {
                line: *line,
                column: "n".into(),
                message: "population must hold both groups".into(),
            });
        }
        let gap = parse_f64(record, gap_col, *line, "gap")?;
        let share = parse_f64(record, share_col, *line, "share")?;
        if !(share > 0.0 && share < 1.0) {
            return Err(Error::Parse {
                line: *line,
                column: "share".into(),
                message: format!("share {share} outside (0, 1)"),
            });
        }
        dates.push((*line, date));
        out.push(GapPoint {
            date,
            population_size,
            gap,
            share,
        });
    }
    check_date_order(&dates)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// How survey dates are joined to benchmark dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignPolicy {
    /// Match only equal dates.
    Exact,
    /// Match each survey date to the latest benchmark date on or before it.
    #[default]
    NearestPreceding,
}

/// Result of a join: the matched pairs plus every survey date that found
/// no partner (reported, never silently dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub pairs: Vec<(SurveySnapshot, BenchmarkPoint)>,
    pub unmatched: Vec<NaiveDate>,
}

/// Joins a survey series to a benchmark series under the given policy.
pub fn align(
    survey: &[SurveySnapshot],
    bench: &[BenchmarkPoint],
    policy: AlignPolicy,
) -> Result<Aligned> {
    if survey.is_empty() {
        return Err(Error::InvalidInput("empty survey series".into()));
    }
    if bench.is_empty() {
        return Err(Error::InvalidInput("empty benchmark series".into()));
    }
    let bench_dates: Vec<NaiveDate> = bench.iter().map(|b| b.date).collect();
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for snap in survey {
        let hit = match policy {
            AlignPolicy::Exact => bench_dates.binary_search(&snap.date).ok(),
            AlignPolicy::NearestPreceding => match bench_dates.binary_search(&snap.date) {
                Ok(i) => Some(i),
                Err(0) => None,
                Err(i) => Some(i - 1),
            },
        };
        match hit {
            Some(i) => pairs.push((snap.clone(), bench[i].clone())),
            None => unmatched.push(snap.date),
        }
    }
    if pairs.is_empty() {
        return match policy {
            AlignPolicy::Exact => Err(Error::EmptyIntersection),
            AlignPolicy::NearestPreceding => Err(Error::NoPrecedingBenchmark {
                date: unmatched[0],
            }),
        };
    }
    Ok(Aligned { pairs, unmatched })
}

// ---------------------------------------------------------------------------
// Cumulative to incident
// ---------------------------------------------------------------------------

/// First-differences a cumulative series. Each increment is dated at the
/// later point. Negative increments (downward revisions) produce warnings,
/// not errors.
pub fn to_incident(series: &[(NaiveDate, f64)]) -> Result<(Vec<(NaiveDate, f64)>, Vec<String>)> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: 2,
        });
    }
    let mut out = Vec::with_capacity(series.len() - 1);
    let mut warnings = Vec::new();
    for pair in series.windows(2) {
        let (_, prev) = pair[0];
        let (date, next) = pair[1];
        let delta = next - prev;
        if delta < 0.0 {
            warnings.push(format!(
                "negative increment {delta} at {date}: possible benchmark revision"
            ));
        }
        out.push((date, delta));
    }
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn survey_schema_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "survey.csv",
            "date,n,ybar\n2021-04-02,234000,0.5292\n2021-04-09,230000,0.5310\n",
        );
        let rows = parse_series(&path, SeriesKind::Survey, Outcome::Binary)
            .unwrap()
            .into_survey()
            .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].date, date("2021-04-02"));
        assert_eq!(rows[0].sample_size, 234_000);
        assert!((rows[0].sample_mean - 0.5292).abs() < 1e-15);
        assert_eq!(rows[0].label, "survey");
    }

    #[test]
    fn headers_are_case_insensitive_and_labels_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "survey.csv",
            "Date,N,YBar,Label\n2021-04-02,100,0.5,west\n2021-04-09,100,0.6,\n",
        );
        let rows = parse_series(&path, SeriesKind::Survey, Outcome::Binary)
            .unwrap()
            .into_survey()
            .unwrap();
        assert_eq!(rows[0].label, "west");
        assert_eq!(rows[1].label, "survey");
    }

    #[test]
    fn benchmark_counts_become_proportions() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bench.csv",
            "date,N,count\n2021-05-16,900000000,135000000\n",
        );
        let rows = parse_series(&path, SeriesKind::Benchmark, Outcome::Binary)
            .unwrap()
            .into_benchmark()
            .unwrap();
        assert!((rows[0].population_mean - 0.15).abs() < 1e-15);
        // Binary sd is derived from the mean.
        let want = (0.15f64 * 0.85).sqrt();
        assert!((rows[0].population_sd - want).abs() < 1e-15);
    }

    #[test]
    fn benchmark_rejects_count_above_population() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "bench.csv", "date,N,count\n2021-05-16,100,135\n");
        let err = parse_series(&path, SeriesKind::Benchmark, Outcome::Binary).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn continuous_benchmark_requires_sd() {
        let dir = tempfile::tempdir().unwrap();
        let no_sd = write_file(&dir, "a.csv", "date,N,ybar\n2021-05-16,1000,2.5\n");
        assert!(parse_series(&no_sd, SeriesKind::Benchmark, Outcome::Continuous).is_err());
        let with_sd = write_file(&dir, "b.csv", "date,N,ybar,sd\n2021-05-16,1000,2.5,0.7\n");
        let rows = parse_series(&with_sd, SeriesKind::Benchmark, Outcome::Continuous)
            .unwrap()
            .into_benchmark()
            .unwrap();
        assert_eq!(rows[0].population_sd, 0.7);
    }

    #[test]
    fn empty_file_and_missing_columns_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write_file(&dir, "empty.csv", "date,n,ybar\n");
        let err = parse_series(&empty, SeriesKind::Survey, Outcome::Binary).unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
        let missing = write_file(&dir, "missing.csv", "date,n\n2021-04-02,100\n");
        let err = parse_series(&missing, SeriesKind::Survey, Outcome::Binary).unwrap_err();
        assert!(err.to_string().contains("ybar"), "{err}");
    }

    #[test]
    fn duplicate_date_names_both_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "dup.csv",
            "date,n,ybar\n2021-04-02,100,0.5\n2021-04-02,100,0.6\n",
        );
        let err = parse_series(&path, SeriesKind::Survey, Outcome::Binary).unwrap_err();
        match err {
            Error::DuplicateDate {
                first_line,
                second_line,
                ..
            } => {
                assert_eq!((first_line, second_line), (2, 3));
            }
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let bad_date = write_file(&dir, "d.csv", "date,n,ybar\n04/02/2021,100,0.5\n");
        let err = parse_series(&bad_date, SeriesKind::Survey, Outcome::Binary).unwrap_err();
        assert!(
            matches!(&err, Error::Parse { line: 2, column, .. } if column == "date"),
            "{err}"
        );
        let bad_range = write_file(&dir, "r.csv", "date,n,ybar\n2021-04-02,100,1.5\n");
        let err = parse_series(&bad_range, SeriesKind::Survey, Outcome::Binary).unwrap_err();
        assert!(
            matches!(&err, Error::Parse { line: 2, column, .. } if column == "ybar"),
            "{err}"
        );
        // Continuous mode lifts the range check.
        assert!(parse_series(&bad_range, SeriesKind::Survey, Outcome::Continuous).is_ok());
    }

    #[test]
    fn paired_schema_with_and_without_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let with_n = write_file(
            &dir,
            "p.csv",
            "date,a,b,n\n2021-04-02,0.4,0.3,500\n2021-04-09,0.45,0.28,510\n2021-04-16,0.5,0.25,490\n",
        );
        let series = parse_series(&with_n, SeriesKind::Paired, Outcome::Binary)
            .unwrap()
            .into_paired()
            .unwrap();
        assert_eq!(series.sample_sizes, Some(vec![500, 510, 490]));
        assert_eq!(series.covariate, vec![0.4, 0.45, 0.5]);
        let without_n = write_file(
            &dir,
            "q.csv",
            "date,a,b\n2021-04-02,0.4,0.3\n2021-04-09,0.45,0.28\n2021-04-16,0.5,0.25\n",
        );
        let series = parse_series(&without_n, SeriesKind::Paired, Outcome::Binary)
            .unwrap()
            .into_paired()
            .unwrap();
        assert_eq!(series.sample_sizes, None);
    }

    #[test]
    fn gap_schema_parses_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_file(
            &dir,
            "gap.csv",
            "date,N,gap,share\n2021-04-02,1000000,0.12,0.4\n",
        );
        let rows = parse_gap_series(&good).unwrap();
        assert_eq!(rows[0].population_size, 1_000_000);
        assert!((rows[0].gap - 0.12).abs() < 1e-15);
        assert!((rows[0].share - 0.4).abs() < 1e-15);
        let bad_share = write_file(
            &dir,
            "bad.csv",
            "date,N,gap,share\n2021-04-02,1000000,0.12,1.0\n",
        );
        let err = parse_gap_series(&bad_share).unwrap_err();
        assert!(
            matches!(&err, Error::Parse { column, .. } if column == "share"),
            "{err}"
        );
    }

    #[test]
    fn align_exact_and_nearest() {
        let survey = vec![
            SurveySnapshot::new(date("2021-04-02"), 100, 0.5, "survey").unwrap(),
            SurveySnapshot::new(date("2021-04-09"), 100, 0.6, "survey").unwrap(),
        ];
        let bench = vec![
            BenchmarkPoint::binary(date("2021-03-31"), 1000, 0.40).unwrap(),
            BenchmarkPoint::binary(date("2021-04-09"), 1000, 0.45).unwrap(),
        ];
        let exact = align(&survey, &bench, AlignPolicy::Exact).unwrap();
        assert_eq!(exact.pairs.len(), 1);
        assert_eq!(exact.unmatched, vec![date("2021-04-02")]);
        let nearest = align(&survey, &bench, AlignPolicy::NearestPreceding).unwrap();
        assert_eq!(nearest.pairs.len(), 2);
        assert!(nearest.unmatched.is_empty());
        // The preceding match never looks forward.
        assert_eq!(nearest.pairs[0].1.date, date("2021-03-31"));
        assert_eq!(nearest.pairs[1].1.date, date("2021-04-09"));
    }

    #[test]
    fn align_failures() {
        let survey = vec![SurveySnapshot::new(date("2021-04-02"), 100, 0.5, "survey").unwrap()];
        let late_bench = vec![BenchmarkPoint::binary(date("2021-05-01"), 1000, 0.4).unwrap()];
        assert!(matches!(
            align(&survey, &late_bench, AlignPolicy::NearestPreceding),
            Err(Error::NoPrecedingBenchmark { .. })
        ));
        assert!(matches!(
            align(&survey, &late_bench, AlignPolicy::Exact),
            Err(Error::EmptyIntersection)
        ));
        assert!(align(&survey, &[], AlignPolicy::Exact).is_err());
    }

    #[test]
    fn incident_differences_and_warnings() {
        let series = vec![
            (date("2021-05-01"), 0.15),
            (date("2021-05-08"), 0.20),
            (date("2021-05-15"), 0.28),
        ];
        let (incident, warnings) = to_incident(&series).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(incident.len(), 2);
        assert_eq!(incident[0].0, date("2021-05-08"));
        assert!((incident[0].1 - 0.05).abs() < 1e-15);
        assert!((incident[1].1 - 0.08).abs() < 1e-15);
        // The increments telescope back to last minus first.
        let total: f64 = incident.iter().map(|&(_, v)| v).sum();
        assert!((total - (0.28 - 0.15)).abs() < 1e-12);

        let revised = vec![
            (date("2021-05-01"), 0.20),
            (date("2021-05-08"), 0.18),
            (date("2021-05-15"), 0.25),
        ];
        let (incident, warnings) = to_incident(&revised).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("2021-05-08"), "{}", warnings[0]);
        assert!(incident[0].1 < 0.0);

        assert!(matches!(
            to_incident(&series[..1]),
            Err(Error::SeriesTooShort { len: 1, min: 2 })
        ));
    }

    #[test]
    fn constant_cumulative_series_gives_zero_increments() {
        let series = vec![
            (date("2021-05-01"), 0.4),
            (date("2021-05-08"), 0.4),
            (date("2021-05-15"), 0.4),
        ];
        let (incident, warnings) = to_incident(&series).unwrap();
        assert!(warnings.is_empty());
        assert!(incident.iter().all(|&(_, v)| v == 0.0));
    }
}
