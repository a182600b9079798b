//! End-to-end tests of the `taucorr` binary: artifact determinism, the
//! documented exit codes, and the full simulate → correlate → fit → size
//! chain on a short capture.

use std::path::Path;
use std::process::{Command, Output};

fn taucorr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taucorr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should launch")
}

fn assert_code(out: &Output, expected: i32) {
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(expected), "stderr: {stderr}");
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// A 2 s capture at 2·10⁵ counts/s: small enough to run in well under a
/// second, long enough that the fitted decay lands within speckle noise of
/// the truth.
fn simulate_short(dir: &Path, seed: &str, out: &str, extra: &[&str]) {
    let mut args = vec![
        "simulate",
        "--duration",
        "2",
        "--rate",
        "200000",
        "--seed",
        seed,
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    assert_code(&taucorr(&args, dir), 0);
}

#[test]
fn pipeline_recovers_the_simulated_diameter() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "11", "run.phot", &[]);
    assert_code(&taucorr(&["correlate", "--in", "run.phot", "--out", "run.corr"], dir), 0);
    assert_code(
        &taucorr(
            &["fit", "--in", "run.corr", "--out", "run.fit", "--curve", "run.curve"],
            dir,
        ),
        0,
    );
    let out = taucorr(
        &["size", "--fit", "run.fit", "--params", "run.phot.truth", "--cert", "530"],
        dir,
    );
    assert_code(&out, 0);

    let report = String::from_utf8(out.stdout).unwrap();
    let error_line = report
        .lines()
        .find_map(|l| l.strip_prefix("relative_error_percent="))
        .expect("report has an error line");
    let error: f64 = error_line.parse().unwrap();
    assert!(error < 15.0, "sizing error {error}% is beyond speckle noise");

    // the curve is the fitted model at every channel lag
    let curve = String::from_utf8(read(dir, "run.curve")).unwrap();
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 288);
}

#[test]
fn artifacts_are_deterministic_and_format_independent() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "5", "a.phot", &[]);
    simulate_short(dir, "5", "b.phot", &[]);
    simulate_short(dir, "5", "c.phot", &["--format", "binary"]);
    assert_eq!(read(dir, "a.phot"), read(dir, "b.phot"), "same seed, same bytes");
    assert_eq!(read(dir, "a.phot.truth"), read(dir, "c.phot.truth"));
    assert_ne!(read(dir, "a.phot"), read(dir, "c.phot"), "encodings differ on disk");

    for name in ["a", "c"] {
        let capture = format!("{name}.phot");
        let corr = format!("{name}.corr");
        assert_code(&taucorr(&["correlate", "--in", &capture, "--out", &corr], dir), 0);
    }
    assert_eq!(
        read(dir, "a.corr"),
        read(dir, "c.corr"),
        "correlogram must not depend on the capture encoding"
    );
}

#[test]
fn checkpointed_correlation_matches_one_shot() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "9", "run.phot", &[]);
    assert_code(&taucorr(&["correlate", "--in", "run.phot", "--out", "oneshot.corr"], dir), 0);
    let out = taucorr(
        &[
            "correlate",
            "--in",
            "run.phot",
            "--out",
            "chunked.corr",
            "--snapshot-interval",
            "0.3",
        ],
        dir,
    );
    assert_code(&out, 0);
    let progress = String::from_utf8_lossy(&out.stderr);
    assert!(progress.contains("checkpoint at"), "stderr: {progress}");
    assert_eq!(read(dir, "oneshot.corr"), read(dir, "chunked.corr"));
    assert!(!dir.join("chunked.corr.partial").exists(), "checkpoint file is cleaned up");
}

#[test]
fn correlate_duration_flag_trims_the_capture() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "6", "run.phot", &[]);
    assert_code(&taucorr(&["correlate", "--in", "run.phot", "--out", "full.corr"], dir), 0);
    assert_code(
        &taucorr(
            &["correlate", "--in", "run.phot", "--out", "half.corr", "--duration", "1"],
            dir,
        ),
        0,
    );
    let half = String::from_utf8(read(dir, "half.corr")).unwrap();
    assert!(half.contains("# total_samples=100000000"), "got: {}", &half[..200]);
    assert_ne!(read(dir, "full.corr"), read(dir, "half.corr"));
}

#[test]
fn empty_capture_correlates_to_nan_and_fit_reports_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("empty.phot"), "# ticks=1.25ns duration=100000\n").unwrap();
    assert_code(&taucorr(&["correlate", "--in", "empty.phot", "--out", "empty.corr"], dir), 0);
    let corr = String::from_utf8(read(dir, "empty.corr")).unwrap();
    assert!(corr.lines().any(|l| l.split_whitespace().nth(1) == Some("nan")));
    assert_code(&taucorr(&["fit", "--in", "empty.corr", "--out", "empty.fit"], dir), 4);
}

#[test]
fn malformed_and_corrupt_captures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("garbage.phot"), "not a capture\n").unwrap();
    assert_code(&taucorr(&["correlate", "--in", "garbage.phot", "--out", "x.corr"], dir), 2);

    std::fs::write(dir.join("nonmono.phot"), "# ticks=1.25ns duration=1000\n100\n50\n").unwrap();
    assert_code(&taucorr(&["correlate", "--in", "nonmono.phot", "--out", "x.corr"], dir), 2);

    std::fs::write(dir.join("close.phot"), "# ticks=1.25ns duration=1000\n100\n103\n").unwrap();
    assert_code(&taucorr(&["compare", "--in", "close.phot"], dir), 2);
}

#[test]
fn invalid_physics_and_configuration_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    assert_code(&taucorr(&["simulate", "--beta", "0", "--out", "x.phot"], dir), 3);
    assert_code(
        &taucorr(&["simulate", "--angle", "181", "--duration", "1", "--out", "x.phot"], dir),
        3,
    );
    // a capture longer than the direct-comparison cap of 2^24 base samples
    std::fs::write(dir.join("long.phot"), "# ticks=1.25ns duration=200000000\n").unwrap();
    assert_code(&taucorr(&["compare", "--in", "long.phot"], dir), 3);
    // 15 first-block channels start block 1 at an odd base-sample lag,
    // which a period-2 block cannot realize
    simulate_short(dir, "2", "ok.phot", &[]);
    assert_code(
        &taucorr(
            &["correlate", "--in", "ok.phot", "--out", "x.corr", "--first-block-channels", "15"],
            dir,
        ),
        3,
    );
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(
        &taucorr(&["correlate", "--in", "absent.phot", "--out", "x.corr"], dir.path()),
        1,
    );
}

#[test]
fn size_refuses_a_non_converged_fit() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "3", "run.phot", &[]);
    std::fs::write(
        dir.join("stalled.fit"),
        "baseline=1\nbeta=0.5\ngamma=100\nresidual_norm=1\niterations=200\nconverged=false\npoints=50\n",
    )
    .unwrap();
    assert_code(
        &taucorr(
            &["size", "--fit", "stalled.fit", "--params", "run.phot.truth", "--cert", "530"],
            dir,
        ),
        4,
    );
}

#[test]
fn compare_reports_zero_bias_in_the_uncoarsened_block() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let out = taucorr(
        &[
            "simulate", "--duration", "0.1", "--rate", "1000000", "--seed", "21", "--out",
            "short.phot",
        ],
        dir,
    );
    assert_code(&out, 0);
    let out = taucorr(&["compare", "--in", "short.phot", "--max-block", "3"], dir);
    assert_code(&out, 0);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.contains("max |bias|")), "table: {table}");
    // block 0 runs at the base period: both routes see identical data
    for line in table.lines().filter(|l| l.starts_with("0 ")) {
        assert_eq!(line.split_whitespace().last(), Some("0"), "line: {line}");
    }
}

#[test]
fn fit_accepts_an_explicit_window_and_uniform_weights() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    simulate_short(dir, "11", "run.phot", &[]);
    assert_code(&taucorr(&["correlate", "--in", "run.phot", "--out", "run.corr"], dir), 0);
    assert_code(
        &taucorr(
            &[
                "fit",
                "--in",
                "run.corr",
                "--out",
                "run.fit",
                "--tau-min",
                "1e-6",
                "--tau-max",
                "0.1",
                "--weights",
                "uniform",
            ],
            dir,
        ),
        0,
    );
    let report = String::from_utf8(read(dir, "run.fit")).unwrap();
    assert!(report.contains("converged=true"), "report: {report}");
}
