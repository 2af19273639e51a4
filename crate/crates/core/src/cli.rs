//! Command-line front end.
//!
//! Each subcommand runs one analysis pipeline end to end (parse, align,
//! compute, report) and writes `{command}.json` / `{command}.csv` into the
//! output directory. Runs are deterministic: identical arguments, inputs,
//! and seed produce byte-identical reports. The seed resolves in the order
//! explicit `--seed`, then the `DEFECT_LENS_SEED` environment variable,
//! then a fixed default.
//!
//! Exit codes: 0 on success, 1 on input or usage errors, 2 on numerical
//! failures (degenerate benchmarks, non-convergence under `--strict`).

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assist::{assisted_series, beta_loglik_grad, AssistOptions, PairedSeries};
use crate::changepoint::{bcp_posterior, ChangePointConfig};
use crate::decomp::{decompose, Outcome, SurveySnapshot, DEFAULT_FACTORS};
use crate::error::{Error, Result};
use crate::estimands::{
    diff_error_decomposed, diff_neff, diff_neff_decomposed, diff_neff_finite, reldiff_error,
    reldiff_error_decomposed, reldiff_neff, reldiff_neff_decomposed, reldiff_neff_finite,
    subgroup_decompose, SigmaMethod, SubgroupTable, WavePair, WavePoint,
};
use crate::io::{
    align, emit_report, parse_gap_series, parse_series, to_incident, AlignPolicy,
    ChangePointBlock, ConfigEcho, DecompRow, DiffRow, FitBlock, GapPoint, Report,
    ReportFormat, SeriesKind, SimulationRow,
};
use crate::simlab::{
    apply_selection, exact_ddc, generate_population, subgroup_exact_ddc, verify_identity,
    verify_subgroup_identity, SelectionMechanism, SubgroupSpec,
};

/// Selection-bias diagnostics for big-but-biased survey estimates.
#[derive(Debug, Parser)]
#[command(name = "defect-lens", version, about)]
pub struct Cli {
    /// RNG seed for every stochastic step.
    #[arg(
        long,
        global = true,
        env = "DEFECT_LENS_SEED",
        default_value_t = crate::DEFAULT_SEED
    )]
    pub seed: u64,

    /// Directory the report files are written into.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Which report files to write.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    pub format: FormatArg,

    /// Treat outcomes as binary proportions (the default).
    #[arg(long, global = true, conflicts_with = "continuous")]
    pub binary: bool,

    /// Treat outcomes as continuous; benchmarks must carry an sd column.
    #[arg(long, global = true)]
    pub continuous: bool,

    /// Turn non-converged fits into hard errors (exit code 2).
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    fn outcome(&self) -> Outcome {
        if self.continuous {
            Outcome::Continuous
        } else {
            Outcome::Binary
        }
    }

    fn config_echo(&self, factors: Vec<f64>, flags: BTreeMap<String, String>) -> ConfigEcho {
        ConfigEcho {
            seed: self.seed,
            outcome: self.outcome().as_str().to_string(),
            factors,
            flags,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Both,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Both => ReportFormat::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    /// Join only equal dates.
    Exact,
    /// Join each survey date to the latest benchmark on or before it.
    NearestPreceding,
}

impl From<AlignArg> for AlignPolicy {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::Exact => AlignPolicy::Exact,
            AlignArg::NearestPreceding => AlignPolicy::NearestPreceding,
        }
    }
}

impl AlignArg {
    fn as_str(self) -> &'static str {
        match self {
            AlignArg::Exact => "exact",
            AlignArg::NearestPreceding => "nearest-preceding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaArg {
    /// Variance of the signed contrast (the identity-exact choice).
    Exact,
    /// Additive variance composition, for comparison with published gap
    /// analyses.
    Additive,
}

impl From<SigmaArg> for SigmaMethod {
    fn from(s: SigmaArg) -> Self {
        match s {
            SigmaArg::Exact => SigmaMethod::Exact,
            SigmaArg::Additive => SigmaMethod::Additive,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose per-date estimation error against a benchmark.
    Decompose(DecomposeArgs),
    /// Price wave-over-wave changes instead of levels.
    Diff(DiffArgs),
    /// Price a between-group gap against a gap benchmark.
    Subgroup(SubgroupArgs),
    /// Blend a biased survey with a benchmark-calibrated prediction.
    Assist(AssistArgs),
    /// Scan a rate series for change points.
    Changepoint(ChangepointArgs),
    /// Run finite-population oracle simulations.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Survey CSV (date,n,ybar[,label]).
    #[arg(long)]
    pub survey: PathBuf,
    /// Benchmark CSV (date,N,count|ybar[,sd]).
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Benchmark scalings for the sensitivity sweep.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FACTORS)]
    pub factors: Vec<f64>,
    /// How survey dates join benchmark dates.
    #[arg(long, value_enum, default_value_t = AlignArg::NearestPreceding)]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    /// Survey CSV (date,n,ybar[,label]).
    #[arg(long)]
    pub survey: PathBuf,
    /// Benchmark CSV (date,N,count|ybar[,sd]).
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Price relative (proportional) changes instead of absolute ones.
    #[arg(long)]
    pub relative: bool,
    /// Also evaluate the error rebuilt from per-wave defect correlations.
    #[arg(long)]
    pub decomposed: bool,
    /// How survey dates join benchmark dates.
    #[arg(long, value_enum, default_value_t = AlignArg::NearestPreceding)]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct SubgroupArgs {
    /// Survey CSV for the flagged group (date,n,ybar[,label]).
    #[arg(long)]
    pub survey_a: PathBuf,
    /// Survey CSV for the unflagged group (date,n,ybar[,label]).
    #[arg(long)]
    pub survey_b: PathBuf,
    /// Gap benchmark CSV (date,N,gap,share).
    #[arg(long)]
    pub benchmark_gap: PathBuf,
    /// Population fraction with outcome 1 in the flagged group (joint
    /// cell), constant across dates.
    #[arg(long)]
    pub p11: f64,
    /// Which contrast variance prices the gap.
    #[arg(long, value_enum, default_value_t = SigmaArg::Exact)]
    pub sigma: SigmaArg,
    /// Gap scalings for the sensitivity sweep.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FACTORS)]
    pub factors: Vec<f64>,
    /// How survey dates join gap-benchmark dates.
    #[arg(long, value_enum, default_value_t = AlignArg::NearestPreceding)]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct AssistArgs {
    /// Target survey CSV (date,n,ybar[,label]), the biased series to
    /// assist.
    #[arg(long)]
    pub target: PathBuf,
    /// Reference paired CSV (date,a,b[,n]) linking covariate and response.
    #[arg(long)]
    pub probability_survey: PathBuf,
    /// Benchmark CSV (date,N,count|ybar[,sd]) for the response scale.
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Benchmark scalings for the sensitivity sweep.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FACTORS)]
    pub factors: Vec<f64>,
    /// Fit response -> covariate and predict forward instead of inverting.
    #[arg(long)]
    pub direct_fit: bool,
    /// Sample size assumed for reference waves that lack an n column.
    #[arg(long)]
    pub prob_n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ChangepointArgs {
    /// Rate series as a benchmark CSV (date,N,count|ybar[,sd]).
    #[arg(long)]
    pub series: PathBuf,
    /// Difference a cumulative series into incident form first.
    #[arg(long)]
    pub incident: bool,
    /// Upper bound of the uniform prior on the change probability.
    #[arg(long, default_value_t = 0.2)]
    pub p0: f64,
    /// Upper bound of the uniform prior on the signal-to-noise ratio.
    #[arg(long, default_value_t = 0.2)]
    pub w0: f64,
    /// Kept Gibbs sweeps.
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    /// Discarded warm-up sweeps.
    #[arg(long, default_value_t = 500)]
    pub burn: usize,
    /// Change probability above which a date joins a detection interval.
    #[arg(long, default_value_t = 0.6)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Population size.
    #[arg(long)]
    pub n_pop: usize,
    /// Population outcome prevalence.
    #[arg(long)]
    pub prevalence: f64,
    /// Selection mechanism: "srs:SIZE", "logistic:ALPHA,BETA", or
    /// "fixed:I,J,...".
    #[arg(long)]
    pub mechanism: String,
    /// Number of replicates; replicate r draws generation seed
    /// `seed + 2r` and selection seed `seed + 2r + 1`.
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    /// Population share of a flagged subgroup (with --p11 adds contrast
    /// diagnostics).
    #[arg(long, requires = "p11")]
    pub gbar: Option<f64>,
    /// Joint fraction with outcome 1 and flag 1.
    #[arg(long, requires = "gbar")]
    pub p11: Option<f64>,
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Parses argv and runs; returns the process exit code.
#[must_use]
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs the selected subcommand and writes its report files.
pub fn execute(cli: &Cli) -> Result<()> {
    let report = match &cli.command {
        Command::Decompose(args) => run_decompose(cli, args)?,
        Command::Diff(args) => run_diff(cli, args)?,
        Command::Subgroup(args) => run_subgroup(cli, args)?,
        Command::Assist(args) => run_assist(cli, args)?,
        Command::Changepoint(args) => run_changepoint(cli, args)?,
        Command::Simulate(args) => run_simulate(cli, args)?,
    };
    std::fs::create_dir_all(&cli.out).map_err(|source| Error::Io {
        path: cli.out.display().to_string(),
        source,
    })?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let written = emit_report(&report, &cli.out, cli.format.into())?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_decompose(cli: &Cli, args: &DecomposeArgs) -> Result<Report> {
    let outcome = cli.outcome();
    let survey = parse_series(&args.survey, SeriesKind::Survey, outcome)?.into_survey()?;
    let bench = parse_series(&args.benchmark, SeriesKind::Benchmark, outcome)?
        .into_benchmark()?;
    let aligned = align(&survey, &bench, args.align.into())?;

    let mut flags = BTreeMap::new();
    flags.insert("align".to_string(), args.align.as_str().to_string());
    let mut report = Report::new("decompose", cli.config_echo(args.factors.clone(), flags));
    for date in &aligned.unmatched {
        report
            .warnings
            .push(format!("survey date {date} has no benchmark partner; skipped"));
    }

    for (snap, bench_point) in &aligned.pairs {
        let d = decompose(snap, bench_point)?;
        report
            .rows
            .push(DecompRow::new(snap.date, &snap.label, &d));
    }
    for &factor in &args.factors {
        let mut block = Vec::with_capacity(aligned.pairs.len());
        for (snap, bench_point) in &aligned.pairs {
            let scaled = bench_point.scaled(factor)?;
            let mut d = decompose(snap, &scaled)?;
            d.sensitivity_factor = factor;
            block.push(DecompRow::new(snap.date, &snap.label, &d));
        }
        report.sweep.insert(Report::factor_key(factor), block);
    }
    Ok(report)
}

fn run_diff(cli: &Cli, args: &DiffArgs) -> Result<Report> {
    let outcome = cli.outcome();
    let survey = parse_series(&args.survey, SeriesKind::Survey, outcome)?.into_survey()?;
    let bench = parse_series(&args.benchmark, SeriesKind::Benchmark, outcome)?
        .into_benchmark()?;
    let aligned = align(&survey, &bench, args.align.into())?;
    if aligned.pairs.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two aligned waves to difference".into(),
        ));
    }

    let mut flags = BTreeMap::new();
    flags.insert("align".to_string(), args.align.as_str().to_string());
    flags.insert("relative".to_string(), args.relative.to_string());
    flags.insert("decomposed".to_string(), args.decomposed.to_string());
    let mut report = Report::new("diff", cli.config_echo(Vec::new(), flags));
    for date in &aligned.unmatched {
        report
            .warnings
            .push(format!("survey date {date} has no benchmark partner; skipped"));
    }

    let mut rows = Vec::with_capacity(aligned.pairs.len() - 1);
    for window in aligned.pairs.windows(2) {
        let (prev_snap, prev_bench) = &window[0];
        let (curr_snap, curr_bench) = &window[1];
        let pair = WavePair::new(
            WavePoint {
                survey: prev_snap.clone(),
                bench: prev_bench.clone(),
            },
            WavePoint {
                survey: curr_snap.clone(),
                bench: curr_bench.clone(),
            },
        )?;
        let observed_change = curr_snap.sample_mean - prev_snap.sample_mean;
        let true_change = curr_bench.population_mean - prev_bench.population_mean;
        let (diff_err, n_eff, n_eff_finite) = if args.relative {
            (
                reldiff_error(&pair)?,
                reldiff_neff(&pair)?,
                reldiff_neff_finite(&pair)?,
            )
        } else {
            (pair.diff_error(), diff_neff(&pair)?, diff_neff_finite(&pair)?)
        };
        let (decomposed_error, decomposed_n_eff) = if args.decomposed {
            let prev_d = decompose(prev_snap, prev_bench)?;
            let curr_d = decompose(curr_snap, curr_bench)?;
            if args.relative {
                (
                    Some(reldiff_error_decomposed(&pair, prev_d.ddc, curr_d.ddc)?),
                    Some(reldiff_neff_decomposed(&pair, prev_d.ddc, curr_d.ddc)?.into()),
                )
            } else {
                (
                    Some(diff_error_decomposed(&pair, prev_d.ddc, curr_d.ddc)?),
                    Some(diff_neff_decomposed(&pair, prev_d.ddc, curr_d.ddc)?.into()),
                )
            }
        } else {
            (None, None)
        };
        rows.push(DiffRow {
            date: curr_snap.date,
            observed_change,
            true_change,
            diff_error: diff_err,
            n_eff: n_eff.into(),
            n_eff_finite,
            decomposed_error,
            decomposed_n_eff,
        });
    }
    report.diff = Some(rows);
    Ok(report)
}

/// Rebuilds the joint cell table from the flagged-group share, the joint
/// cell `p11`, and the benchmark gap.
fn build_subgroup_table(
    p11: f64,
    gap: &GapPoint,
    flagged: &SurveySnapshot,
    unflagged: &SurveySnapshot,
) -> Result<SubgroupTable> {
    let share = gap.share;
    if !(p11 >= 0.0 && p11 <= share) {
        return Err(Error::InvalidInput(format!(
            "p11 {p11} outside [0, share={share}]"
        )));
    }
    let p01 = share - p11;
    let p10 = (1.0 - share) * (p11 / share - gap.gap);
    let p00 = (1.0 - share) - p10;
    let n_flagged = ((gap.population_size as f64 * share).round() as u64)
        .clamp(1, gap.population_size - 1);
    let n_unflagged = gap.population_size - n_flagged;
    SubgroupTable::new(
        [p11, p10, p01, p00],
        (n_flagged, n_unflagged),
        (flagged.sample_size, unflagged.sample_size),
        (flagged.sample_mean, unflagged.sample_mean),
    )
}

fn run_subgroup(cli: &Cli, args: &SubgroupArgs) -> Result<Report> {
    let outcome = cli.outcome();
    let survey_a = parse_series(&args.survey_a, SeriesKind::Survey, outcome)?.into_survey()?;
    let survey_b = parse_series(&args.survey_b, SeriesKind::Survey, outcome)?.into_survey()?;
    let gaps = parse_gap_series(&args.benchmark_gap)?;
    let method: SigmaMethod = args.sigma.into();

    let mut flags = BTreeMap::new();
    flags.insert("align".to_string(), args.align.as_str().to_string());
    flags.insert("sigma".to_string(), method.as_str().to_string());
    flags.insert("p11".to_string(), crate::io::fmt_float(args.p11));
    let mut report = Report::new("subgroup", cli.config_echo(args.factors.clone(), flags));

    // Join the two group surveys on equal dates, then each joint date to
    // its gap benchmark under the align policy.
    let b_by_date: std::collections::BTreeMap<_, _> =
        survey_b.iter().map(|s| (s.date, s)).collect();
    let gap_dates: Vec<chrono::NaiveDate> = gaps.iter().map(|g| g.date).collect();
    let mut matched = Vec::new();
    for snap_a in &survey_a {
        let Some(snap_b) = b_by_date.get(&snap_a.date) else {
            report.warnings.push(format!(
                "flagged-group date {} has no unflagged partner; skipped",
                snap_a.date
            ));
            continue;
        };
        let hit = match args.align {
            AlignArg::Exact => gap_dates.binary_search(&snap_a.date).ok(),
            AlignArg::NearestPreceding => match gap_dates.binary_search(&snap_a.date) {
                Ok(i) => Some(i),
                Err(0) => None,
                Err(i) => Some(i - 1),
            },
        };
        let Some(gi) = hit else {
            report.warnings.push(format!(
                "survey date {} has no gap benchmark partner; skipped",
                snap_a.date
            ));
            continue;
        };
        matched.push((snap_a, *snap_b, &gaps[gi]));
    }
    if matched.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    for &(snap_a, snap_b, gap) in &matched {
        let table = build_subgroup_table(args.p11, gap, snap_a, snap_b)?;
        let d = subgroup_decompose(&table, Some(gap.gap), method)?;
        report.rows.push(DecompRow::new(snap_a.date, "gap", &d));
    }
    for &factor in &args.factors {
        let mut block = Vec::with_capacity(matched.len());
        for &(snap_a, snap_b, gap) in &matched {
            if !factor.is_finite() || factor <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "sensitivity factor {factor} must be a positive real"
                )));
            }
            let table = build_subgroup_table(args.p11, gap, snap_a, snap_b)?;
            let mut d = subgroup_decompose(&table, Some(gap.gap * factor), method)?;
            d.sensitivity_factor = factor;
            block.push(DecompRow::new(snap_a.date, "gap", &d));
        }
        report.sweep.insert(Report::factor_key(factor), block);
    }
    Ok(report)
}

fn run_assist(cli: &Cli, args: &AssistArgs) -> Result<Report> {
    let outcome = cli.outcome();
    let target_rows =
        parse_series(&args.target, SeriesKind::Survey, outcome)?.into_survey()?;
    let reference = parse_series(&args.probability_survey, SeriesKind::Paired, outcome)?
        .into_paired()?;
    let bench = parse_series(&args.benchmark, SeriesKind::Benchmark, outcome)?
        .into_benchmark()?;

    let dates: Vec<chrono::NaiveDate> = target_rows.iter().map(|s| s.date).collect();
    let means: Vec<f64> = target_rows.iter().map(|s| s.sample_mean).collect();
    let sizes: Vec<u64> = target_rows.iter().map(|s| s.sample_size).collect();
    let target = PairedSeries::new(dates, means.clone(), means, Some(sizes))?;

    let options = AssistOptions {
        factors: args.factors.clone(),
        direct_fit: args.direct_fit,
        target_fallback_n: None,
        reference_fallback_n: args.prob_n,
    };
    let analysis = assisted_series(&target, &reference, &bench, &options)?;

    if !analysis.fit.converged {
        if cli.strict {
            let series = if args.direct_fit {
                PairedSeries::new(
                    reference.dates.clone(),
                    reference.response.clone(),
                    reference.covariate.clone(),
                    reference.sample_sizes.clone(),
                )?
            } else {
                reference.clone()
            };
            let grad = beta_loglik_grad(
                &analysis.fit.params(),
                &series.covariate,
                &series.compressed_response(),
            )?;
            let grad_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            return Err(Error::NoConvergence {
                iterations: analysis.fit.iterations,
                grad_norm,
            });
        }
    }

    let mut flags = BTreeMap::new();
    flags.insert("direct-fit".to_string(), args.direct_fit.to_string());
    flags.insert("strict".to_string(), cli.strict.to_string());
    let mut report = Report::new("assist", cli.config_echo(args.factors.clone(), flags));
    if !analysis.fit.converged {
        report.warnings.push(format!(
            "bridge fit did not converge after {} iterations; results carry its best parameters",
            analysis.fit.iterations
        ));
    }
    for date in &analysis.skipped_dates {
        report.warnings.push(format!(
            "target date {date} precedes the reference or benchmark series; skipped"
        ));
    }

    report.fit = Some(FitBlock::from_fit(&analysis.fit));
    for row in &analysis.rows {
        if row.factor == 1.0 {
            report
                .rows
                .push(DecompRow::new(row.date, "original", &row.original));
            report
                .rows
                .push(DecompRow::new(row.date, "assisted", &row.assisted));
        }
    }
    for &factor in &args.factors {
        let mut block = Vec::new();
        for row in &analysis.rows {
            if row.factor == factor {
                block.push(DecompRow::new(row.date, "original", &row.original));
                block.push(DecompRow::new(row.date, "assisted", &row.assisted));
            }
        }
        report.sweep.insert(Report::factor_key(factor), block);
    }
    Ok(report)
}

fn run_changepoint(cli: &Cli, args: &ChangepointArgs) -> Result<Report> {
    let outcome = cli.outcome();
    let bench = parse_series(&args.series, SeriesKind::Benchmark, outcome)?
        .into_benchmark()?;
    let mut series: Vec<(chrono::NaiveDate, f64)> = bench
        .iter()
        .map(|b| (b.date, b.population_mean))
        .collect();

    let mut warnings = Vec::new();
    if args.incident {
        let (incident, incident_warnings) = to_incident(&series)?;
        warnings = incident_warnings;
        series = incident;
    }

    let config = ChangePointConfig {
        p0: args.p0,
        w0: args.w0,
        iterations: args.iters,
        burn_in: args.burn,
        seed: cli.seed,
        threshold: args.threshold,
    };
    let result = bcp_posterior(&series, &config)?;

    let mut flags = BTreeMap::new();
    flags.insert("incident".to_string(), args.incident.to_string());
    flags.insert("p0".to_string(), crate::io::fmt_float(args.p0));
    flags.insert("w0".to_string(), crate::io::fmt_float(args.w0));
    flags.insert("iters".to_string(), args.iters.to_string());
    flags.insert("burn".to_string(), args.burn.to_string());
    flags.insert(
        "threshold".to_string(),
        crate::io::fmt_float(args.threshold),
    );
    let mut report = Report::new("changepoint", cli.config_echo(Vec::new(), flags));
    report.warnings = warnings;
    report.changepoint = Some(ChangePointBlock::from_result(&result));
    Ok(report)
}

/// Parses a mechanism spec: "srs:SIZE", "logistic:ALPHA,BETA", or
/// "fixed:I,J,...".
pub fn parse_mechanism(spec: &str) -> Result<SelectionMechanism> {
    let bad = |msg: &str| {
        Error::InvalidInput(format!(
            "mechanism '{spec}': {msg} (use 'srs:SIZE', 'logistic:ALPHA,BETA', or 'fixed:I,J,...')"
        ))
    };
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| bad("missing ':' separator"))?;
    match kind {
        "srs" => {
            let sample_size = rest
                .parse::<usize>()
                .map_err(|_| bad("sample size must be a positive integer"))?;
            Ok(SelectionMechanism::Srs { sample_size })
        }
        "logistic" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(bad("needs exactly alpha and beta"));
            }
            let alpha: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| bad("alpha must be a number"))?;
            let beta: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| bad("beta must be a number"))?;
            if !alpha.is_finite() || !beta.is_finite() {
                return Err(bad("alpha and beta must be finite"));
            }
            Ok(SelectionMechanism::OutcomeLogistic { alpha, beta })
        }
        "fixed" => {
            let indices = rest
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("indices must be nonnegative integers"))?;
            if indices.is_empty() {
                return Err(bad("needs at least one index"));
            }
            Ok(SelectionMechanism::FixedSet { indices })
        }
        other => Err(bad(&format!("unknown kind '{other}'"))),
    }
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<Report> {
    if args.replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    let mechanism = parse_mechanism(&args.mechanism)?;
    let subgroup = match (args.gbar, args.p11) {
        (Some(share), Some(joint)) => Some(SubgroupSpec { share, joint }),
        _ => None,
    };

    let mut rows = Vec::with_capacity(args.replicates as usize);
    for replicate in 0..args.replicates {
        let gen_seed = cli.seed.wrapping_add(2 * replicate);
        let sel_seed = cli.seed.wrapping_add(2 * replicate + 1);
        let pop = generate_population(args.n_pop, args.prevalence, subgroup, gen_seed)?;
        let selected = apply_selection(&pop, &mechanism, sel_seed)?;
        let (subgroup_ddc, subgroup_residual) = if subgroup.is_some() {
            (
                Some(subgroup_exact_ddc(&selected)?),
                Some(verify_subgroup_identity(&selected)?),
            )
        } else {
            (None, None)
        };
        rows.push(SimulationRow {
            replicate,
            recorded: selected.recorded_count()? as u64,
            sample_mean: selected.sample_mean()?,
            exact_ddc: exact_ddc(&selected)?,
            identity_residual: verify_identity(&selected)?,
            subgroup_ddc,
            subgroup_residual,
        });
    }

    let mut flags = BTreeMap::new();
    flags.insert("mechanism".to_string(), args.mechanism.clone());
    flags.insert("n-pop".to_string(), args.n_pop.to_string());
    flags.insert(
        "prevalence".to_string(),
        crate::io::fmt_float(args.prevalence),
    );
    flags.insert("replicates".to_string(), args.replicates.to_string());
    if let Some(g) = args.gbar {
        flags.insert("gbar".to_string(), crate::io::fmt_float(g));
    }
    if let Some(p) = args.p11 {
        flags.insert("p11".to_string(), crate::io::fmt_float(p));
    }
    let mut report = Report::new("simulate", cli.config_echo(Vec::new(), flags));
    report.simulation = Some(rows);
    Ok(report)
}
