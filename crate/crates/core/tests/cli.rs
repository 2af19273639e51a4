//! End-to-end tests of the compiled binary: argument handling, exit codes,
//! report files on disk, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use defect_lens::io::{parse_report, SCHEMA_VERSION};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_defect-lens"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SURVEY: &str = "date,n,ybar,label\n\
2021-01-15,234000,0.5292,ctis\n\
2021-02-15,231000,0.5110,ctis\n\
2021-03-15,228000,0.4989,ctis\n";

const BENCH: &str = "date,N,count\n\
2021-01-10,255000000,102178500\n\
2021-02-10,255000000,103020000\n\
2021-03-10,255000000,104040000\n";

// ---------------------------------------------------------------------------
// Happy paths
// ---------------------------------------------------------------------------

#[test]
fn decompose_writes_both_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let survey = write(dir.path(), "survey.csv", SURVEY);
    let bench = write(dir.path(), "bench.csv", BENCH);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "decompose",
        "--survey",
        survey.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let report = parse_report(&out_dir.join("decompose.json")).unwrap();
    assert_eq!(report.schema, SCHEMA_VERSION);
    assert_eq!(report.command, "decompose");
    assert_eq!(report.rows.len(), 3);
    let keys: Vec<&str> = report.sweep.keys().map(String::as_str).collect();
    assert_eq!(keys, ["0.9", "0.95", "1", "1.05", "1.1"]);

    let csv_text = fs::read_to_string(out_dir.join("decompose.csv")).unwrap();
    let mut lines = csv_text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "date,label,sensitivity_factor,estimation_error,ddc,data_deficiency,\
         problem_difficulty,n_eff_approx,n_eff_exact"
    );
    // 3 dates x 5 factors.
    assert_eq!(lines.count(), 15);
}

#[test]
fn format_flag_limits_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let survey = write(dir.path(), "survey.csv", SURVEY);
    let bench = write(dir.path(), "bench.csv", BENCH);
    let out_dir = dir.path().join("json_only");
    let out = run(&[
        "decompose",
        "--survey",
        survey.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_code(&out, 0);
    assert!(out_dir.join("decompose.json").exists());
    assert!(!out_dir.join("decompose.csv").exists());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let survey = write(dir.path(), "survey.csv", SURVEY);
    let bench = write(dir.path(), "bench.csv", BENCH);
    for (sub, extra) in [
        ("decompose", vec![]),
        ("diff", vec!["--decomposed"]),
        ("changepoint", vec!["--iters", "400", "--burn", "50"]),
    ] {
        let mut dirs = Vec::new();
        for tag in ["a", "b"] {
            let out_dir = dir.path().join(format!("{sub}_{tag}"));
            let series_flag = if sub == "changepoint" {
                "--series"
            } else {
                "--survey"
            };
            let series_path = if sub == "changepoint" { &bench } else { &survey };
            let mut args = vec![
                sub,
                series_flag,
                series_path.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--seed",
                "77",
            ];
            if sub != "changepoint" {
                args.push("--benchmark");
                args.push(bench.to_str().unwrap());
            }
            args.extend(&extra);
            let out = bin().args(&args).output().unwrap();
            assert_code(&out, 0);
            dirs.push(out_dir);
        }
        for name in [format!("{sub}.json"), format!("{sub}.csv")] {
            let a = fs::read(dirs[0].join(&name)).unwrap();
            let b = fs::read(dirs[1].join(&name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }
}

#[test]
fn seed_env_var_is_honored_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let out_env = dir.path().join("env");
    let out = bin()
        .args([
            "simulate",
            "--n-pop",
            "200",
            "--prevalence",
            "0.5",
            "--mechanism",
            "srs:50",
            "--out",
            out_env.to_str().unwrap(),
        ])
        .env("DEFECT_LENS_SEED", "4242")
        .output()
        .unwrap();
    assert_code(&out, 0);
    let report = parse_report(&out_env.join("simulate.json")).unwrap();
    assert_eq!(report.config.seed, 4242);

    let out_flag = dir.path().join("flag");
    let out = bin()
        .args([
            "simulate",
            "--n-pop",
            "200",
            "--prevalence",
            "0.5",
            "--mechanism",
            "srs:50",
            "--seed",
            "7",
            "--out",
            out_flag.to_str().unwrap(),
        ])
        .env("DEFECT_LENS_SEED", "4242")
        .output()
        .unwrap();
    assert_code(&out, 0);
    let report = parse_report(&out_flag.join("simulate.json")).unwrap();
    assert_eq!(report.config.seed, 7);
}

#[test]
fn subgroup_pipeline_runs_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.csv",
        "date,n,ybar\n2021-01-15,50000,0.74\n2021-02-15,52000,0.73\n",
    );
    let b = write(
        dir.path(),
        "b.csv",
        "date,n,ybar\n2021-01-15,150000,0.61\n2021-02-15,148000,0.60\n",
    );
    let gap = write(
        dir.path(),
        "gap.csv",
        "date,N,gap,share\n2021-01-10,100000000,0.08,0.25\n2021-02-10,100000000,0.09,0.25\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "subgroup",
        "--survey-a",
        a.to_str().unwrap(),
        "--survey-b",
        b.to_str().unwrap(),
        "--benchmark-gap",
        gap.to_str().unwrap(),
        "--p11",
        "0.17",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report = parse_report(&out_dir.join("subgroup.json")).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.label == "gap"));
    assert_eq!(report.config.flags["sigma"], "exact");
}

#[test]
fn simulate_emits_subgroup_columns_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "--n-pop",
        "5000",
        "--prevalence",
        "0.4",
        "--mechanism",
        "logistic:0,0.5",
        "--replicates",
        "2",
        "--gbar",
        "0.3",
        "--p11",
        "0.18",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let body = fs::read_to_string(out_dir.join("simulate.csv")).unwrap();
    let header = body.lines().next().unwrap();
    assert!(header.contains("subgroup_ddc"));
    let report = parse_report(&out_dir.join("simulate.json")).unwrap();
    let rows = report.simulation.unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.subgroup_ddc.is_some()));
    assert!(rows
        .iter()
        .all(|r| r.subgroup_residual.unwrap().abs() < 1e-10));
}

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = run(&[flag]);
        assert_code(&out, 0);
    }
    let out = run(&["decompose", "--help"]);
    assert_code(&out, 0);
}

#[test]
fn usage_errors_exit_one() {
    // No subcommand.
    assert_code(&run(&[]), 1);
    // Unknown flag.
    assert_code(&run(&["decompose", "--bogus"]), 1);
    // Conflicting outcome flags.
    let dir = tempfile::tempdir().unwrap();
    let survey = write(dir.path(), "survey.csv", SURVEY);
    let bench = write(dir.path(), "bench.csv", BENCH);
    let out = run(&[
        "decompose",
        "--survey",
        survey.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
        "--binary",
        "--continuous",
    ]);
    assert_code(&out, 1);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bench = write(dir.path(), "bench.csv", BENCH);
    // Missing file.
    let out = run(&[
        "decompose",
        "--survey",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
    ]);
    assert_code(&out, 1);

    // Malformed cell: the error names line and column.
    let broken = write(
        dir.path(),
        "broken.csv",
        "date,n,ybar\n2021-01-15,abc,0.5\n",
    );
    let out = run(&[
        "decompose",
        "--survey",
        broken.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
    assert!(stderr.contains('n'), "stderr: {stderr}");

    // One survey wave is not enough to difference.
    let single = write(dir.path(), "one.csv", "date,n,ybar\n2021-01-15,1000,0.5\n");
    let out = run(&[
        "diff",
        "--survey",
        single.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
    ]);
    assert_code(&out, 1);
}

#[test]
fn numerical_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let survey = write(dir.path(), "survey.csv", SURVEY);
    // A constant-zero benchmark has zero sd, so the defect correlation is
    // undefined.
    let flat = write(
        dir.path(),
        "flat.csv",
        "date,N,ybar\n2021-01-10,255000000,0\n",
    );
    let out = run(&[
        "decompose",
        "--survey",
        survey.to_str().unwrap(),
        "--benchmark",
        flat.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("degenerate"), "stderr: {stderr}");
}

#[test]
fn alignment_warnings_do_not_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    // The first survey date precedes every benchmark date, so it is skipped
    // under nearest-preceding alignment.
    let survey = write(
        dir.path(),
        "survey.csv",
        "date,n,ybar\n2020-12-01,1000,0.50\n2021-01-15,1000,0.52\n2021-02-15,1000,0.53\n",
    );
    let bench = write(dir.path(), "bench.csv", BENCH);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "decompose",
        "--survey",
        survey.to_str().unwrap(),
        "--benchmark",
        bench.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning"), "stderr: {stderr}");
    let report = parse_report(&out_dir.join("decompose.json")).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.warnings.len(), 1);
}
