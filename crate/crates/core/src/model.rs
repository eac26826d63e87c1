//! Subthreshold dynamics, square-wave forcing and the constant-drive flow.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings, Outcome};

/// A scalar function of the state, shareable across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of grid points used for the sampled monotonicity check on generic models.
pub const H2_GRID_POINTS: usize = 1024;

/// Tolerance for flagging parameters that sit on a region boundary.
pub const REGION_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum Subthreshold {
    /// `f(x) = a x + b`, integrated in closed form.
    Linear { a: f64, b: f64 },
    /// Arbitrary `f` with its derivative, integrated numerically.
    Generic { f: ScalarFn, f_deriv: ScalarFn },
}

impl fmt::Debug for Subthreshold {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subthreshold::Linear { a, b } => fmt.debug_struct("Linear").field("a", a).field("b", b).finish(),
            Subthreshold::Generic { .. } => fmt.write_str("Generic { .. }"),
        }
    }
}

/// Subthreshold vector field `f`, threshold `θ` and the numerical settings
/// used whenever the flow has to be integrated.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    dynamics: Subthreshold,
    theta: f64,
    integrator: IntegratorSettings,
    state_tol: f64,
}

impl ModelSpec {
    pub fn linear(a: f64, b: f64, theta: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("linear coefficients must be finite (a={a}, b={b})")));
        }
        Self::with_dynamics(Subthreshold::Linear { a, b }, theta)
    }

    pub fn generic<F, D>(f: F, f_deriv: D, theta: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_dynamics(
            Subthreshold::Generic {
                f: Arc::new(f),
                f_deriv: Arc::new(f_deriv),
            },
            theta,
        )
    }

    fn with_dynamics(dynamics: Subthreshold, theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 {
            return Err(Error::Domain(format!("threshold must be finite and positive, got {theta}")));
        }
        Ok(Self {
            dynamics,
            theta,
            integrator: IntegratorSettings::default(),
            state_tol: 1e-12,
        })
    }

    /// The same vector field routed through the numerical integrator.
    pub fn as_generic(&self) -> Self {
        match &self.dynamics {
            Subthreshold::Linear { a, b } => {
                let (a, b) = (*a, *b);
                let mut out = self.clone();
                out.dynamics = Subthreshold::Generic {
                    f: Arc::new(move |x| a * x + b),
                    f_deriv: Arc::new(move |_| a),
                };
                out
            }
            Subthreshold::Generic { .. } => self.clone(),
        }
    }

    pub fn with_integrator(mut self, settings: IntegratorSettings) -> Self {
        self.integrator = settings;
        self
    }

    /// State tolerance for boundary localisation.
    pub fn with_state_tol(mut self, tol: f64) -> Self {
        self.state_tol = tol;
        self
    }

    pub fn dynamics(&self) -> &Subthreshold {
        &self.dynamics
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn integrator(&self) -> &IntegratorSettings {
        &self.integrator
    }

    pub fn state_tol(&self) -> f64 {
        self.state_tol
    }

    pub fn linear_coefficients(&self) -> Option<(f64, f64)> {
        match self.dynamics {
            Subthreshold::Linear { a, b } => Some((a, b)),
            Subthreshold::Generic { .. } => None,
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.dynamics {
            Subthreshold::Linear { a, b } => a * x + b,
            Subthreshold::Generic { f, .. } => f(x),
        }
    }

    pub fn f_deriv(&self, x: f64) -> f64 {
        match &self.dynamics {
            Subthreshold::Linear { a, .. } => *a,
            Subthreshold::Generic { f_deriv, .. } => f_deriv(x),
        }
    }
}

/// T-periodic square wave: amplitude `A` on `(nT, nT + dT]`, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    amplitude: f64,
    period: f64,
    duty: f64,
}

impl Forcing {
    pub fn new(amplitude: f64, period: f64, duty: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Domain(format!("amplitude must be finite and >= 0, got {amplitude}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Domain(format!("period must be finite and > 0, got {period}")));
        }
        if !(duty > 0.0 && duty < 1.0) {
            return Err(Error::Domain(format!("duty cycle must lie in the open interval (0,1), got {duty}")));
        }
        Ok(Self {
            amplitude,
            period,
            duty,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    /// `Q = A d`, the average input over one period.
    pub fn dose(&self) -> f64 {
        self.amplitude * self.duty
    }

    /// `Δ = d T`.
    pub fn pulse_duration(&self) -> f64 {
        self.duty * self.period
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub passed: bool,
    /// A state witnessing the violation.
    pub witness: Option<f64>,
    pub detail: String,
}

impl HypothesisCheck {
    fn pass(detail: impl Into<String>) -> Self {
        Self {
            passed: true,
            witness: None,
            detail: detail.into(),
        }
    }

    fn fail(witness: f64, detail: impl Into<String>) -> Self {
        Self {
            passed: false,
            witness: Some(witness),
            detail: detail.into(),
        }
    }
}

/// Outcome of checking H.1 (attracting equilibrium inside `(0, θ)`) and
/// H.2 (`f' < 0` on `[0, θ]`).
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h1: HypothesisCheck,
    pub h2: HypothesisCheck,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.h1.passed && self.h2.passed
    }

    /// First failing hypothesis as an error message, if any.
    pub fn failure(&self) -> Option<String> {
        if !self.h1.passed {
            Some(format!("H.1 violated: {}", self.h1.detail))
        } else if !self.h2.passed {
            Some(format!("H.2 violated: {}", self.h2.detail))
        } else {
            None
        }
    }
}

/// Checks H.1–H.2. For generic models H.2 is sampled on a uniform grid of
/// [`H2_GRID_POINTS`] points, which is a heuristic rather than a proof.
pub fn validate_hypotheses(model: &ModelSpec) -> HypothesisReport {
    let theta = model.theta();
    match model.dynamics() {
        Subthreshold::Linear { a, b } => {
            let (a, b) = (*a, *b);
            let h2 = if a < 0.0 {
                HypothesisCheck::pass(format!("f' = {a} < 0"))
            } else {
                HypothesisCheck::fail(0.0, format!("f' = a = {a} is not negative"))
            };
            let h1 = if a >= 0.0 {
                HypothesisCheck::fail(0.0, "no attracting equilibrium when a >= 0")
            } else {
                let eq = -b / a;
                if eq > 0.0 && eq < theta {
                    HypothesisCheck::pass(format!("equilibrium {eq} in (0, {theta})"))
                } else {
                    HypothesisCheck::fail(eq, format!("equilibrium {eq} outside (0, {theta}) (x̄ ≥ θ or x̄ ≤ 0)"))
                }
            };
            HypothesisReport { h1, h2 }
        }
        Subthreshold::Generic { .. } => {
            let f0 = model.f(0.0);
            let ft = model.f(theta);
            let h1 = if !(f0 > 0.0) {
                HypothesisCheck::fail(0.0, format!("f(0) = {f0} is not positive"))
            } else if !(ft < 0.0) {
                HypothesisCheck::fail(theta, format!("f(θ) = {ft} is not negative"))
            } else {
                HypothesisCheck::pass("f(0) > 0 > f(θ)")
            };
            let n = H2_GRID_POINTS;
            let violation = (0..n)
                .map(|i| theta * i as f64 / (n - 1) as f64)
                .find(|&x| !(model.f_deriv(x) < 0.0));
            let h2 = match violation {
                Some(x) => HypothesisCheck::fail(x, format!("f'({x}) = {} is not negative", model.f_deriv(x))),
                None => HypothesisCheck::pass(format!("f' < 0 at {n} sampled points")),
            };
            HypothesisReport { h1, h2 }
        }
    }
}

/// `φ(t; x0; A)`: solution of `x' = f(x) + A` after time `t`, without reset.
pub fn flow(model: &ModelSpec, drive: f64, t: f64, x0: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("flow duration must be >= 0, got {t}")));
    }
    match model.dynamics() {
        Subthreshold::Linear { a, b } => {
            let target = -(b + drive) / a;
            let x = x0 + (x0 - target) * (a * t).exp_m1();
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Integration(format!("nonfinite closed-form flow from {x0}")))
            }
        }
        Subthreshold::Generic { f, .. } => {
            match integrate(|x| f(x) + drive, x0, t, None, model.integrator())? {
                Outcome::Finished(x) => Ok(x),
                Outcome::Crossed(_) => unreachable!("no threshold requested"),
            }
        }
    }
}

/// Smallest `t >= 0` with `φ(t; x0; A) = θ`, or `None` when `f(θ) + A <= 0`.
pub fn time_to_threshold(model: &ModelSpec, drive: f64, x0: f64) -> Result<Option<f64>> {
    let theta = model.theta();
    if !x0.is_finite() || x0 > theta {
        return Err(Error::Domain(format!("initial state {x0} above threshold {theta}")));
    }
    if !(model.f(theta) + drive > 0.0) {
        return Ok(None);
    }
    if x0 == theta {
        return Ok(Some(0.0));
    }
    match model.dynamics() {
        Subthreshold::Linear { a, b } => {
            let target = -(b + drive) / a;
            Ok(Some(((theta - x0) / (x0 - target)).ln_1p() / a))
        }
        Subthreshold::Generic { f, .. } => {
            match integrate(|x| f(x) + drive, x0, f64::INFINITY, Some(theta), model.integrator())? {
                Outcome::Crossed(t) => Ok(Some(t)),
                Outcome::Finished(_) => unreachable!("infinite horizon"),
            }
        }
    }
}

/// `Q_c = -f(θ)`, the constant drive that places the equilibrium on the threshold.
pub fn critical_dose(model: &ModelSpec) -> f64 {
    -model.f(model.theta())
}

/// `δ̂`: threshold time from the reset state under the averaged drive `Q`.
pub fn averaged_time_to_threshold(model: &ModelSpec, dose: f64) -> Result<Option<f64>> {
    if !(dose >= 0.0) {
        return Err(Error::Domain(format!("dose must be >= 0, got {dose}")));
    }
    time_to_threshold(model, dose, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    NonSpiking,
    ConditionalSpiking,
    PermanentSpiking,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::NonSpiking => "NonSpiking",
            Region::ConditionalSpiking => "ConditionalSpiking",
            Region::PermanentSpiking => "PermanentSpiking",
        })
    }
}

/// Spiking region of `(d, 1/A)` with flags for the boundaries `A = Q_c`
/// and `A d = Q_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionClass {
    pub region: Region,
    pub on_amplitude_boundary: bool,
    pub on_dose_boundary: bool,
}

/// Exact ties go to the region that cannot spike more: `A = Q_c` is
/// non-spiking, `A d = Q_c` (with `A > Q_c`) is conditional.
pub fn classify_region(model: &ModelSpec, amplitude: f64, duty: f64) -> RegionClass {
    let qc = critical_dose(model);
    let dose = amplitude * duty;
    let tol = REGION_BOUNDARY_TOL * qc.abs().max(1.0);
    let region = if amplitude <= qc {
        Region::NonSpiking
    } else if dose > qc {
        Region::PermanentSpiking
    } else {
        Region::ConditionalSpiking
    };
    RegionClass {
        region,
        on_amplitude_boundary: (amplitude - qc).abs() <= tol,
        on_dose_boundary: (dose - qc).abs() <= tol,
    }
}
