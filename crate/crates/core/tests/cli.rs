use std::path::Path;
use std::process::{Command, Output};

use ifstrobe::cli::{read_staircase, STAIRCASE_HEADER};
use ifstrobe::Ratio;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifstrobe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn limits_prints_rate_limits() {
    let o = run(&["limits", "--a", "-0.5", "--b", "0.2", "--theta", "1", "--A", "3.3333333333", "--d", "0.2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("r_infinity=0.6554"), "{out}");
    assert!(out.contains("r_zero=0.5812"), "{out}");
    assert!(out.contains("premise_verified=true"), "{out}");
}

#[test]
fn classify_names_the_region() {
    let cases = [("0.25", "0.5", "NonSpiking"), ("0.5", "0.5", "ConditionalSpiking"), ("2", "0.5", "PermanentSpiking")];
    for (a, d, region) in cases {
        let o = run(&["classify", "--A", a, "--d", d]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), region);
    }
}

#[test]
fn sweep_writes_staircase_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let o = run(&["sweep", "--A", "3.3333333333", "--d", "0.2", "--tmin", "0.5", "--tmax", "3", "--n", "50", "-o", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), STAIRCASE_HEADER.join(","));
    assert_eq!(lines.count(), 50);
    assert!(!text.contains('\r'));
}

#[test]
fn staircase_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let o = run(&["sweep", "--A", "1", "--d", "0.2", "--tmin", "1.5", "--tmax", "4.5", "--n", "300", "--refine", "-o", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let samples = read_staircase(std::fs::File::open(&csv).unwrap()).unwrap();
    assert!(samples.len() > 300);
    assert!(samples.windows(2).all(|w| w[0].period < w[1].period));
    assert!(samples.iter().all(|s| s.eta == s.rho + Ratio::from_integer((s.eta - s.rho).to_integer())));

    let report = dir.path().join("a.csv");
    let o = run(&["adding-check", "--input", path_str(&csv), "-o", path_str(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 violations"), "{}", stdout(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains(",LR,1,2,true,"), "{text}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# width correction\nanalysis = classify\nA = 2\nd = 0.5\n").unwrap();
    let o = run(&["--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "PermanentSpiking");
    let o = run(&["--config", path_str(&cfg), "classify", "--A", "0.1"]);
    assert_eq!(stdout(&o).trim(), "NonSpiking");
}

#[test]
fn config_errors_exit_2() {
    let o = run(&["sweep", "--A", "3", "--d", "1.5", "--tmin", "1", "--tmax", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("open interval (0,1)"));

    let o = run(&["limits", "--A", "0.2", "--d", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("non-spiking"), "{}", stderr(&o));

    // f(0) < 0 violates the hypotheses.
    let o = run(&["classify", "--b", "-0.1", "--A", "1", "--d", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("H.1"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "analysis = limits\nA = 2\nwhat = 3\n").unwrap();
    let o = run(&["--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run(&["sweep", "--mode", "amplitude", "--delta", "3", "--Q", "0.5", "--tmin", "2", "--tmax", "10"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_3() {
    let o = run(&["bif", "--solve", "T", "--side", "R", "--spikes", "1", "--A", "0.25", "--d", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("numeric failure:"));
}

#[test]
fn bif_solves_both_ways() {
    let o = run(&["bif", "--solve", "A", "--side", "zero", "--spikes", "0", "--d", "0.5", "--T", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let a: f64 = out.split("A=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((a - 0.48196).abs() < 1e-5, "{out}");

    let o = run(&["bif", "--solve", "T", "--side", "zero", "--spikes", "0", "--A", &a.to_string(), "--d", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let t: f64 = out.split("T=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((t - 2.0).abs() < 1e-6, "{out}");
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sweep"));
}
