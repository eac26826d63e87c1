//! Flat `key=value` experiment files.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::bifurcation::Side;
use crate::integrate::IntegratorSettings;
use crate::model::{validate_hypotheses, ModelSpec};
use crate::orbit::AttractorOptions;
use crate::sweep::DoseMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line in the config file, when the error came from one.
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Limits,
    Classify,
    Sweep,
    Scan,
    Bif,
    AddingCheck,
}

impl Analysis {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "limits" => Analysis::Limits,
            "classify" => Analysis::Classify,
            "sweep" => Analysis::Sweep,
            "scan" => Analysis::Scan,
            "bif" => Analysis::Bif,
            "adding-check" => Analysis::AddingCheck,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Closed-form flow.
    Linear,
    /// The same linear field through the numerical integrator.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Width,
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solve {
    Amplitude,
    Period,
}

/// Every setting an experiment can carry. Unset optional values fall back
/// to per-analysis defaults or are reported as missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub model: ModelKind,
    pub analysis: Option<Analysis>,
    pub amplitude: Option<f64>,
    pub duty: Option<f64>,
    pub period: Option<f64>,
    pub mode: ModeKind,
    pub pulse: Option<f64>,
    pub dose: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points: usize,
    pub refine: bool,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub d_points: usize,
    pub inv_a_min: Option<f64>,
    pub inv_a_max: Option<f64>,
    pub inv_a_points: usize,
    pub period_cap: usize,
    pub spikes: usize,
    pub side: Side,
    pub solve: Solve,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: usize,
    pub tol_time: Option<f64>,
    pub tol_state: Option<f64>,
    pub transient: usize,
    pub max_period: usize,
    pub seed: f64,
    pub max_mediant_period: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            a: -0.5,
            b: 0.2,
            theta: 1.0,
            model: ModelKind::Linear,
            analysis: None,
            amplitude: None,
            duty: None,
            period: None,
            mode: ModeKind::Width,
            pulse: None,
            dose: None,
            t_min: None,
            t_max: None,
            points: 2000,
            refine: false,
            d_min: None,
            d_max: None,
            d_points: 50,
            inv_a_min: None,
            inv_a_max: None,
            inv_a_points: 50,
            period_cap: 20,
            spikes: 1,
            side: Side::R,
            solve: Solve::Period,
            input: None,
            output: None,
            workers: 1,
            tol_time: None,
            tol_state: None,
            transient: AttractorOptions::default().transient,
            max_period: AttractorOptions::default().max_period,
            seed: 0.0,
            max_mediant_period: 3,
        }
    }
}

fn real(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("{key}: cannot parse {v:?} as a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key} must be finite"))
    }
}

fn positive(key: &str, v: &str) -> Result<f64, String> {
    let x = real(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{key} must be positive, got {x}"))
    }
}

fn duty(key: &str, v: &str) -> Result<f64, String> {
    let x = real(key, v)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{key} must lie in open interval (0,1), got {x}"))
    }
}

fn count(key: &str, v: &str, min: usize) -> Result<usize, String> {
    let n: usize = v.parse().map_err(|_| format!("{key}: cannot parse {v:?} as a nonnegative integer"))?;
    if n >= min {
        Ok(n)
    } else {
        Err(format!("{key} must be at least {min}, got {n}"))
    }
}

impl ExperimentConfig {
    /// Sets one key from its textual value with per-key domain checks.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "a" => self.a = real(key, v)?,
            "b" => self.b = real(key, v)?,
            "theta" => self.theta = positive(key, v)?,
            "model" => {
                self.model = match v {
                    "linear" => ModelKind::Linear,
                    "numeric" => ModelKind::Numeric,
                    _ => return Err(format!("model must be linear or numeric, got {v:?}")),
                }
            }
            "analysis" => {
                self.analysis = Some(Analysis::parse(v).ok_or_else(|| format!("unknown analysis {v:?}"))?)
            }
            "A" => {
                let x = real(key, v)?;
                if x < 0.0 {
                    return Err(format!("A must be >= 0, got {x}"));
                }
                self.amplitude = Some(x);
            }
            "d" => self.duty = Some(duty(key, v)?),
            "T" => self.period = Some(positive(key, v)?),
            "mode" => {
                self.mode = match v {
                    "width" => ModeKind::Width,
                    "amplitude" => ModeKind::Amplitude,
                    _ => return Err(format!("mode must be width or amplitude, got {v:?}")),
                }
            }
            "delta" => self.pulse = Some(positive(key, v)?),
            "Q" => {
                let x = real(key, v)?;
                if x < 0.0 {
                    return Err(format!("Q must be >= 0, got {x}"));
                }
                self.dose = Some(x);
            }
            "tmin" => self.t_min = Some(positive(key, v)?),
            "tmax" => self.t_max = Some(positive(key, v)?),
            "n" => self.points = count(key, v, 1)?,
            "refine" => {
                self.refine = match v {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(format!("refine must be true or false, got {v:?}")),
                }
            }
            "dmin" => self.d_min = Some(duty(key, v)?),
            "dmax" => self.d_max = Some(duty(key, v)?),
            "nd" => self.d_points = count(key, v, 1)?,
            "invamin" => self.inv_a_min = Some(positive(key, v)?),
            "invamax" => self.inv_a_max = Some(positive(key, v)?),
            "ninva" => self.inv_a_points = count(key, v, 1)?,
            "period_cap" => self.period_cap = count(key, v, 1)?,
            "spikes" => self.spikes = count(key, v, 0)?,
            "side" => {
                self.side = match v {
                    "R" | "r" => Side::R,
                    "L" | "l" => Side::L,
                    "zero" | "0" => Side::Zero,
                    _ => return Err(format!("side must be R, L or zero, got {v:?}")),
                }
            }
            "solve" => {
                self.solve = match v {
                    "A" => Solve::Amplitude,
                    "T" => Solve::Period,
                    _ => return Err(format!("solve must be A or T, got {v:?}")),
                }
            }
            "input" => self.input = Some(PathBuf::from(v)),
            "output" => self.output = Some(PathBuf::from(v)),
            "workers" => self.workers = count(key, v, 1)?,
            "tol_time" => self.tol_time = Some(positive(key, v)?),
            "tol_state" => self.tol_state = Some(positive(key, v)?),
            "transient" => self.transient = count(key, v, 0)?,
            "max_period" => self.max_period = count(key, v, 1)?,
            "seed" => {
                let x = real(key, v)?;
                if x < 0.0 {
                    return Err(format!("seed must be >= 0, got {x}"));
                }
                self.seed = x;
            }
            "max_mediant_period" => self.max_mediant_period = count(key, v, 2)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Cross-key checks that need the full configuration.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let model = ModelSpec::linear(self.a, self.b, self.theta).map_err(|e| ConfigError::new(e.to_string()))?;
        if let Some(msg) = validate_hypotheses(&model).failure() {
            return Err(ConfigError::new(msg));
        }
        if self.seed >= self.theta {
            return Err(ConfigError::new(format!("seed {} must lie below theta {}", self.seed, self.theta)));
        }
        if let (Some(lo), Some(hi)) = (self.t_min, self.t_max) {
            if hi < lo {
                return Err(ConfigError::new(format!("empty period range [{lo}, {hi}]")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.d_min, self.d_max) {
            if hi < lo {
                return Err(ConfigError::new(format!("empty duty range [{lo}, {hi}]")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.inv_a_min, self.inv_a_max) {
            if hi < lo {
                return Err(ConfigError::new(format!("empty 1/A range [{lo}, {hi}]")));
            }
        }
        if let (ModeKind::Amplitude, Some(pulse), Some(lo)) = (self.mode, self.pulse, self.t_min) {
            if lo < pulse {
                return Err(ConfigError::new(format!(
                    "amplitude mode needs tmin >= delta ({lo} < {pulse})"
                )));
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let mut model = ModelSpec::linear(self.a, self.b, self.theta).map_err(|e| ConfigError::new(e.to_string()))?;
        if self.model == ModelKind::Numeric {
            model = model.as_generic();
        }
        if let Some(tol) = self.tol_time {
            let settings = IntegratorSettings {
                event_tol: tol,
                ..*model.integrator()
            };
            model = model.with_integrator(settings);
        }
        if let Some(tol) = self.tol_state {
            model = model.with_state_tol(tol);
        }
        Ok(model)
    }

    pub fn attractor_options(&self) -> AttractorOptions {
        AttractorOptions {
            transient: self.transient,
            max_period: self.max_period,
            seed: self.seed,
        }
    }

    pub fn dose_mode(&self) -> Result<DoseMode, ConfigError> {
        match self.mode {
            ModeKind::Width => Ok(DoseMode::Width {
                amplitude: require(self.amplitude, "A")?,
                duty: require(self.duty, "d")?,
            }),
            ModeKind::Amplitude => Ok(DoseMode::Amplitude {
                pulse: require(self.pulse, "delta")?,
                dose: require(self.dose, "Q")?,
            }),
        }
    }
}

pub(crate) fn require<T>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::new(format!("missing required value {key}")))
}

/// Parses config text. Blank lines and `#` comments are ignored.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError {
            line: Some(i + 1),
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
        cfg.set(key.trim(), value).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_model() {
        let cfg = parse_config_str("a=-0.5\nb=0.2\ntheta=1").unwrap();
        assert_eq!((cfg.a, cfg.b, cfg.theta), (-0.5, 0.2, 1.0));
    }

    #[test]
    fn duty_out_of_range() {
        let err = parse_config_str("# header\nd=1.0").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("open interval (0,1)"));
    }

    #[test]
    fn equilibrium_above_threshold() {
        let err = parse_config_str("theta=1\na=-0.5\nb=0.6").unwrap_err();
        assert!(err.message.contains("H.1"), "{err}");
    }

    #[test]
    fn unknown_key_has_line() {
        let err = parse_config_str("a=-0.5\n\nfoo=3").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("unknown key"));
    }

    #[test]
    fn comments_and_spaces() {
        let cfg = parse_config_str("  A = 3.5  # pulse\n# d=2\nd=0.2\nrefine=true").unwrap();
        assert_eq!(cfg.amplitude, Some(3.5));
        assert_eq!(cfg.duty, Some(0.2));
        assert!(cfg.refine);
    }

    #[test]
    fn malformed_line() {
        let err = parse_config_str("a -0.5").unwrap_err();
        assert_eq!(err.line, Some(1));
    }
}
