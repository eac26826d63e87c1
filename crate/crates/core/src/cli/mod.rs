//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration or domain errors, 3 for
//! numerical failures.

mod config;
mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, parse_config_str, Analysis, ConfigError, ExperimentConfig, ModeKind, ModelKind, Solve};
pub use table::{read_staircase, staircase_table, Table, STAIRCASE_HEADER};

use crate::bifurcation::{bif_amplitude, bif_period, rate_limits, RateMin};
use crate::error::Error;
use crate::model::{classify_region, critical_dose};
use crate::sweep::{scan_plane, sweep_period, verify_adding, CellOutcome, SweepOptions};
use config::require;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ifstrobe", version, about = "Stroboscopic analysis of pulse-driven integrate-and-fire models")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// key=value experiment file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Time tolerance for threshold events of the numerical integrator.
    #[arg(long = "tol-time", global = true)]
    tol_time: Option<String>,
    /// State tolerance for locating the discontinuity boundary.
    #[arg(long = "tol-state", global = true)]
    tol_state: Option<String>,
    /// CSV output path.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Firing-rate limits and extremes for fixed (A, d).
    Limits(Params),
    /// Spiking region of (A, d).
    Classify(Params),
    /// Firing-rate staircase over the period.
    Sweep(Params),
    /// Attractor periods on a (d, 1/A) grid.
    Scan(Params),
    /// Border-collision point of the n-spike fixed point.
    Bif(Params),
    /// Period-adding check on a staircase.
    AddingCheck(Params),
}

#[derive(Debug, Args, Default)]
struct Params {
    /// Decay rate of the linear field f(x) = a x + b.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// linear (closed form) or numeric (integrated).
    #[arg(long)]
    model: Option<String>,
    /// Pulse amplitude.
    #[arg(long = "A")]
    amplitude: Option<String>,
    /// Duty cycle in (0, 1).
    #[arg(long = "d")]
    duty: Option<String>,
    /// Forcing period.
    #[arg(long = "T")]
    period: Option<String>,
    /// width or amplitude.
    #[arg(long)]
    mode: Option<String>,
    /// Pulse duration for amplitude mode.
    #[arg(long)]
    delta: Option<String>,
    /// Dose for amplitude mode.
    #[arg(long = "Q")]
    dose: Option<String>,
    #[arg(long)]
    tmin: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    /// Number of grid points.
    #[arg(long)]
    n: Option<String>,
    /// Sharpen staircase steps by bisection.
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    dmin: Option<String>,
    #[arg(long)]
    dmax: Option<String>,
    #[arg(long)]
    nd: Option<String>,
    #[arg(long)]
    invamin: Option<String>,
    #[arg(long)]
    invamax: Option<String>,
    #[arg(long)]
    ninva: Option<String>,
    #[arg(long = "period-cap")]
    period_cap: Option<String>,
    /// Spike count n of the fixed point for bif.
    #[arg(long)]
    spikes: Option<String>,
    /// R, L or zero.
    #[arg(long)]
    side: Option<String>,
    /// Unknown to solve for: A or T.
    #[arg(long)]
    solve: Option<String>,
    /// Staircase CSV to check instead of sweeping.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    transient: Option<String>,
    #[arg(long = "max-period")]
    max_period: Option<String>,
    /// Initial state for attractor iteration.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "max-mediant-period")]
    max_mediant_period: Option<String>,
}

impl Params {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let fields: [(&'static str, &Option<String>); 28] = [
            ("a", &self.a),
            ("b", &self.b),
            ("theta", &self.theta),
            ("model", &self.model),
            ("A", &self.amplitude),
            ("d", &self.duty),
            ("T", &self.period),
            ("mode", &self.mode),
            ("delta", &self.delta),
            ("Q", &self.dose),
            ("tmin", &self.tmin),
            ("tmax", &self.tmax),
            ("n", &self.n),
            ("dmin", &self.dmin),
            ("dmax", &self.dmax),
            ("nd", &self.nd),
            ("invamin", &self.invamin),
            ("invamax", &self.invamax),
            ("ninva", &self.ninva),
            ("period_cap", &self.period_cap),
            ("spikes", &self.spikes),
            ("side", &self.side),
            ("solve", &self.solve),
            ("input", &self.input),
            ("transient", &self.transient),
            ("max_period", &self.max_period),
            ("seed", &self.seed),
            ("max_mediant_period", &self.max_mediant_period),
        ];
        let mut out: Vec<_> = fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v.clone())))
            .collect();
        if self.refine {
            out.push(("refine", "true".to_string()));
        }
        out
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::AtNode { source, .. } = root {
            root = source;
        }
        match root {
            Error::Domain(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

struct Report {
    summary: String,
    table: Table,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

fn build_config(cli: &Cli, params: Option<&Params>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    let mut pairs = params.map(Params::pairs).unwrap_or_default();
    let globals = [
        ("workers", &cli.workers),
        ("tol_time", &cli.tol_time),
        ("tol_state", &cli.tol_state),
        ("output", &cli.output),
    ];
    pairs.extend(globals.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v.clone()))));
    for (key, value) in pairs {
        cfg.set(key, &value).map_err(|m| Failure::Config(format!("--{key}: {m}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn limits(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let model = cfg.model_spec()?;
    let (a, d) = (require(cfg.amplitude, "A")?, require(cfg.duty, "d")?);
    let l = rate_limits(&model, a, d).map_err(|e| e.at(format!("A={a}, d={d}")))?;
    let (r_min_kind, r_min_t) = match l.r_min {
        RateMin::ZeroBelow { onset } => ("zero_below", onset),
        RateMin::InfimumAtZeroPeriod { .. } => ("infimum_at_zero_period", 0.0),
        RateMin::Near { period, .. } => ("near", period),
    };
    let onset = l.onset.map(|t| t.to_string()).unwrap_or_default();
    let mut table = Table::new(&[
        "r_infinity",
        "r_zero",
        "T0",
        "T1R",
        "T1L",
        "r_max",
        "T_max",
        "premise_verified",
        "r_min",
        "r_min_kind",
        "r_min_T",
    ]);
    table.push(vec![
        l.r_infinity.to_string(),
        l.r_zero.to_string(),
        onset.clone(),
        l.t1_r.to_string(),
        l.t1_l.to_string(),
        l.r_max.to_string(),
        l.r_max_period.to_string(),
        l.premise_verified.to_string(),
        l.r_min.value().to_string(),
        r_min_kind.to_string(),
        r_min_t.to_string(),
    ]);
    let summary = format!(
        "r_infinity={:.5}, r_zero={:.5}, T0={}, T1R={:.6}, T1L={:.6}, r_max={:.6} at T={:.6} (premise_verified={}), r_min={:.6} ({r_min_kind})",
        l.r_infinity,
        l.r_zero,
        if onset.is_empty() { "none".to_string() } else { format!("{:.6}", l.onset.unwrap()) },
        l.t1_r,
        l.t1_l,
        l.r_max,
        l.r_max_period,
        l.premise_verified,
        l.r_min.value(),
    );
    Ok(Report { summary, table })
}

fn classify(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let model = cfg.model_spec()?;
    let (a, d) = (require(cfg.amplitude, "A")?, require(cfg.duty, "d")?);
    let c = classify_region(&model, a, d);
    let mut table = Table::new(&["A", "d", "Q_c", "region", "on_amplitude_boundary", "on_dose_boundary"]);
    table.push(vec![
        a.to_string(),
        d.to_string(),
        critical_dose(&model).to_string(),
        c.region.to_string(),
        c.on_amplitude_boundary.to_string(),
        c.on_dose_boundary.to_string(),
    ]);
    let mut summary = c.region.to_string();
    if c.on_amplitude_boundary {
        summary.push_str(" (on A = Q_c)");
    }
    if c.on_dose_boundary {
        summary.push_str(" (on A d = Q_c)");
    }
    Ok(Report { summary, table })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<crate::sweep::StaircaseSample>, Failure> {
    let model = cfg.model_spec()?;
    let mode = cfg.dose_mode()?;
    let (lo, hi) = (require(cfg.t_min, "tmin")?, require(cfg.t_max, "tmax")?);
    let opts = SweepOptions {
        points: cfg.points,
        refine: cfg.refine,
        workers: cfg.workers,
        attractor: cfg.attractor_options(),
    };
    Ok(sweep_period(&model, &mode, lo, hi, &opts)?)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let samples = run_sweep(cfg)?;
    let unconverged = samples.iter().filter(|s| !s.converged).count();
    let best = samples.iter().max_by(|x, y| x.rate.total_cmp(&y.rate)).expect("nonempty sweep");
    let summary = format!(
        "sweep: {} samples, max rate {:.6} at T={:.6}, {} unconverged",
        samples.len(),
        best.rate,
        best.period,
        unconverged
    );
    Ok(Report {
        summary,
        table: staircase_table(&samples),
    })
}

fn scan(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let model = cfg.model_spec()?;
    let t = require(cfg.period, "T")?;
    let duties = linspace(require(cfg.d_min, "dmin")?, require(cfg.d_max, "dmax")?, cfg.d_points);
    let invs = linspace(require(cfg.inv_a_min, "invamin")?, require(cfg.inv_a_max, "invamax")?, cfg.inv_a_points);
    let s = scan_plane(&model, t, &duties, &invs, cfg.period_cap, cfg.workers, &cfg.attractor_options())?;
    let mut table = Table::new(&["T", "d", "invA", "region", "status", "period", "eta_num", "eta_den"]);
    let (mut capped, mut failed) = (0, 0);
    for c in &s.cells {
        let (status, period) = match &c.outcome {
            CellOutcome::Period(p) => ("ok", p.to_string()),
            CellOutcome::Capped => {
                capped += 1;
                ("capped", String::new())
            }
            CellOutcome::Failed(_) => {
                failed += 1;
                ("failed", String::new())
            }
        };
        let (en, ed) = c
            .eta
            .map(|e| (e.numer().to_string(), e.denom().to_string()))
            .unwrap_or_default();
        table.push(vec![
            t.to_string(),
            c.duty.to_string(),
            c.inv_amplitude.to_string(),
            c.region.to_string(),
            status.to_string(),
            period,
            en,
            ed,
        ]);
    }
    let summary = format!(
        "scan: {} nodes, {capped} above period cap {}, {failed} failed",
        s.cells.len(),
        s.period_cap
    );
    Ok(Report { summary, table })
}

fn bif(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let model = cfg.model_spec()?;
    let d = require(cfg.duty, "d")?;
    let p = match cfg.solve {
        Solve::Amplitude => {
            let t = require(cfg.period, "T")?;
            bif_amplitude(&model, cfg.spikes, cfg.side, d, t).map_err(|e| e.at(format!("d={d}, T={t}")))?
        }
        Solve::Period => {
            let a = require(cfg.amplitude, "A")?;
            bif_period(&model, cfg.spikes, cfg.side, a, d).map_err(|e| e.at(format!("A={a}, d={d}")))?
        }
    };
    let mut table = Table::new(&["n", "side", "d", "T", "A", "residual"]);
    table.push(vec![
        p.n.to_string(),
        p.side.to_string(),
        p.duty.to_string(),
        p.period.to_string(),
        p.amplitude.to_string(),
        p.residual.to_string(),
    ]);
    let summary = format!(
        "n={} side={} d={} T={} A={} residual={:e}",
        p.n, p.side, p.duty, p.period, p.amplitude, p.residual
    );
    Ok(Report { summary, table })
}

fn adding_check(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let samples = match &cfg.input {
        Some(path) => {
            let f = File::open(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            read_staircase(f).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => run_sweep(cfg)?,
    };
    let report = verify_adding(&samples, cfg.max_mediant_period);
    let mut table = Table::new(&[
        "band", "left", "right", "mediant", "rho_num", "rho_den", "found", "t_first", "t_last",
    ]);
    for c in &report.checks {
        let (lo, hi) = c.found.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
        table.push(vec![
            c.band.to_string(),
            c.left.clone(),
            c.right.clone(),
            c.mediant.clone(),
            c.mediant_rho.numer().to_string(),
            c.mediant_rho.denom().to_string(),
            c.ok().to_string(),
            lo,
            hi,
        ]);
    }
    let summary = format!(
        "adding-check: {} checks, {} violations",
        report.checks.len(),
        report.violations().count()
    );
    Ok(Report { summary, table })
}

fn execute(cfg: &ExperimentConfig, analysis: Analysis) -> Result<Report, Failure> {
    match analysis {
        Analysis::Limits => limits(cfg),
        Analysis::Classify => classify(cfg),
        Analysis::Sweep => sweep(cfg),
        Analysis::Scan => scan(cfg),
        Analysis::Bif => bif(cfg),
        Analysis::AddingCheck => adding_check(cfg),
    }
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (analysis, params) = match &cli.command {
        Some(Command::Limits(p)) => (Some(Analysis::Limits), Some(p)),
        Some(Command::Classify(p)) => (Some(Analysis::Classify), Some(p)),
        Some(Command::Sweep(p)) => (Some(Analysis::Sweep), Some(p)),
        Some(Command::Scan(p)) => (Some(Analysis::Scan), Some(p)),
        Some(Command::Bif(p)) => (Some(Analysis::Bif), Some(p)),
        Some(Command::AddingCheck(p)) => (Some(Analysis::AddingCheck), Some(p)),
        None => (None, None),
    };
    let outcome = build_config(&cli, params).and_then(|cfg| {
        let analysis = analysis
            .or(cfg.analysis)
            .ok_or_else(|| Failure::Config("no analysis given on the command line or in the config".into()))?;
        let report = execute(&cfg, analysis)?;
        if let Some(path) = &cfg.output {
            let file = File::create(path)
                .map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))?;
            report
                .table
                .write(BufWriter::new(file))
                .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(report.summary)
    });
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            EXIT_NUMERIC
        }
    }
}
