//! Border-collision curves of the branch fixed points, firing-rate limits and
//! the contraction margin of the right branch.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{averaged_time_to_threshold, critical_dose, flow, time_to_threshold, Forcing, ModelSpec};
use crate::orbit::{attractor, AttractorOptions};
use crate::roots::{expand_upward, solve_bracketed, RootTol};
use crate::strobe::Stepper;

/// Certified bound on the defect of a returned border-collision point.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Which boundary the `n`-spike fixed point collides with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x̄ₙ` meets `Σₙ` from the right: the orbit appears.
    R,
    /// `x̄ₙ` meets `Σₙ₊₁`: the orbit disappears.
    L,
    /// The non-spiking fixed point meets `Σ₁`.
    Zero,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::R => "R",
            Side::L => "L",
            Side::Zero => "zero",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifPoint {
    pub n: usize,
    pub side: Side,
    pub duty: f64,
    pub period: f64,
    pub amplitude: f64,
    pub residual: f64,
}

fn normalize(n: usize, side: Side) -> Result<Side> {
    match (side, n) {
        (Side::R, 0) => Err(Error::Domain("the right collision needs n >= 1".into())),
        (Side::Zero, n) if n != 0 => Err(Error::Domain(format!("side zero needs n = 0, got {n}"))),
        (Side::L, 0) => Ok(Side::Zero),
        (s, _) => Ok(s),
    }
}

/// Threshold defect of the collision orbit: the fixed point candidate is the
/// post-pulse state decayed over the off phase, and it must reach `θ` after
/// the time left for its first spike.
fn defect(model: &ModelSpec, n: usize, side: Side, amplitude: f64, period: f64, duty: f64) -> Result<f64> {
    let theta = model.theta();
    let on = duty * period;
    let off = period - on;
    let delta = time_to_threshold(model, amplitude, 0.0)?;
    let (start, earlier) = match side {
        Side::R => (0.0, n - 1),
        Side::L | Side::Zero => (theta, n),
    };
    let xbar = flow(model, 0.0, off, start)?;
    let s = if earlier == 0 {
        on
    } else {
        match delta {
            Some(delta) => on - earlier as f64 * delta,
            None => f64::NEG_INFINITY,
        }
    };
    if s >= 0.0 {
        Ok(flow(model, amplitude, s, xbar)? - theta)
    } else {
        // Monotone extension below the admissible range.
        Ok(xbar - theta + s * (model.f(xbar) + amplitude))
    }
}

fn certify(model: &ModelSpec, n: usize, side: Side, amplitude: f64, period: f64, duty: f64) -> Result<BifPoint> {
    let residual = defect(model, n, side, amplitude, period, duty)?.abs();
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::NotFound(format!(
            "collision defect {residual:e} above tolerance at A={amplitude}, T={period}"
        )));
    }
    Ok(BifPoint {
        n,
        side,
        duty,
        period,
        amplitude,
        residual,
    })
}

/// Amplitude at which the `n`-spike fixed point collides with a boundary.
pub fn bif_amplitude(model: &ModelSpec, n: usize, side: Side, duty: f64, period: f64) -> Result<BifPoint> {
    Forcing::new(0.0, period, duty)?;
    let side = normalize(n, side)?;
    let qc = critical_dose(model);
    let d = |a: f64| defect(model, n, side, a, period, duty);
    // Below Q_c no trajectory reaches threshold.
    let lo = qc.max(0.0);
    let d_lo = d(lo)?;
    if d_lo >= 0.0 {
        // The collision lies within rounding of Q_c when the defect there is
        // already below tolerance.
        if d_lo < RESIDUAL_TOL {
            return certify(model, n, side, lo, period, duty);
        }
        return Err(Error::NotFound(format!("no {side} collision for n={n} above Q_c at T={period}")));
    }
    let start = match side {
        Side::Zero => (qc / duty).max(f64::MIN_POSITIVE),
        _ => (2.0 * qc).max(1e-3),
    };
    let hi = expand_upward(d, start.max(lo), 2.0, 1e15)?;
    let root = solve_bracketed(d, lo, hi, RootTol::default())?;
    certify(model, n, side, root.upper, period, duty)
}

/// Period at which the `n`-spike fixed point collides with a boundary.
pub fn bif_period(model: &ModelSpec, n: usize, side: Side, amplitude: f64, duty: f64) -> Result<BifPoint> {
    Forcing::new(amplitude, 1.0, duty)?;
    let side = normalize(n, side)?;
    let qc = critical_dose(model);
    if amplitude <= qc {
        return Err(Error::NotFound(format!("A={amplitude} <= Q_c={qc}: no spiking window")));
    }
    let delta = time_to_threshold(model, amplitude, 0.0)?.expect("A above Q_c");
    let d = |t: f64| defect(model, n, side, amplitude, t, duty);
    let lo = match side {
        Side::R => {
            let lo = (n - 1) as f64 * delta / duty;
            if lo > 0.0 {
                lo
            } else {
                // The defect tends to -θ as T → 0.
                delta * 1e-9
            }
        }
        Side::L => n as f64 * delta / duty,
        Side::Zero => {
            if amplitude * duty >= qc {
                return Err(Error::NotFound(format!(
                    "A d = {} >= Q_c: spiking persists for all T",
                    amplitude * duty
                )));
            }
            let mut lo = delta;
            while d(lo)? >= 0.0 {
                lo *= 0.5;
                if lo < delta * 1e-12 {
                    return Err(Error::NotFound("no onset period for conditional spiking".into()));
                }
            }
            lo
        }
    };
    if d(lo)? >= 0.0 {
        return Err(Error::NotFound(format!("{side} defect nonnegative at lower period bracket {lo}")));
    }
    let hi = expand_upward(d, lo.max(delta) * 2.0, 2.0, 1e12)?;
    let root = solve_bracketed(d, lo, hi, RootTol::default())?;
    certify(model, n, side, amplitude, root.upper, duty)
}

/// Largest slope of the right branch, estimated by central differences on a
/// uniform grid.
pub fn right_branch_sup_slope(model: &ModelSpec, forcing: &Forcing) -> Result<Option<f64>> {
    let stepper = Stepper::new(model, forcing)?;
    let Some(b) = stepper.boundary()? else {
        return Ok(None);
    };
    let theta = model.theta();
    let width = theta - b.sigma;
    let samples = 64;
    let h = width * 1e-4;
    let mut sup = f64::NEG_INFINITY;
    for i in 0..samples {
        let x = b.sigma + width * (i as f64 + 0.5) / samples as f64;
        let lo = (x - h).max(b.sigma);
        let hi = (x + h).min(theta);
        let slope = (stepper.branch_image(hi, b.n)? - stepper.branch_image(lo, b.n)?) / (hi - lo);
        sup = sup.max(slope.abs());
    }
    Ok(Some(sup))
}

/// `F = |[Σₙ, θ]| − |s([Σₙ, θ])|`. Positive values certify that the right
/// branch contracts. Without a boundary the margin of the whole interval is
/// returned.
pub fn contraction_margin(model: &ModelSpec, forcing: &Forcing) -> Result<f64> {
    let stepper = Stepper::new(model, forcing)?;
    let theta = model.theta();
    let Some(b) = stepper.boundary()? else {
        let (n, _) = stepper.count_range()?;
        let span = stepper.branch_image(theta, n)? - stepper.branch_image(0.0, n)?;
        return Ok(theta - span.abs());
    };
    match model.linear_coefficients() {
        Some((a, bias)) => {
            let delta = stepper.delta().expect("boundary implies spiking");
            let target = -(bias + forcing.amplitude()) / a;
            let t = forcing.period();
            let on = forcing.pulse_duration();
            let n = b.n as f64;
            Ok(theta
                + target
                    * ((a * (n * delta - on)).exp() - 1.0 + (a * (t - (n - 1.0) * delta)).exp()
                        - (a * (t - on)).exp()))
        }
        None => {
            let sup = right_branch_sup_slope(model, forcing)?.expect("boundary exists");
            Ok((theta - b.sigma) * (1.0 - sup))
        }
    }
}

/// Where the global minimum firing rate is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMin {
    /// Conditional spiking: no spikes for any `T` below the onset period.
    ZeroBelow { onset: f64 },
    /// Approached but not attained as `T → 0`.
    InfimumAtZeroPeriod { value: f64 },
    /// Approached as `T` tends to the given period.
    Near { period: f64, value: f64 },
}

impl RateMin {
    pub fn value(&self) -> f64 {
        match *self {
            RateMin::ZeroBelow { .. } => 0.0,
            RateMin::InfimumAtZeroPeriod { value } | RateMin::Near { value, .. } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateLimits {
    pub delta: f64,
    pub delta_hat: Option<f64>,
    /// `lim r(T)` as `T → ∞`, equal to `d/δ`.
    pub r_infinity: f64,
    /// `lim r(T)` as `T → 0`: `1/δ̂` or zero.
    pub r_zero: f64,
    /// Onset period of conditional spiking.
    pub onset: Option<f64>,
    pub t1_r: f64,
    pub t1_l: f64,
    pub r_max: f64,
    pub r_max_period: f64,
    /// Every checked candidate rate stayed at or below `1/T₁ᴿ`.
    pub premise_verified: bool,
    pub r_min: RateMin,
}

/// Number of log-spaced attractor samples used to certify the maximum.
pub const CERTIFY_SAMPLES: usize = 200;

/// Firing-rate limits and extremes for fixed `(A, d)`.
pub fn rate_limits(model: &ModelSpec, amplitude: f64, duty: f64) -> Result<RateLimits> {
    Forcing::new(amplitude, 1.0, duty)?;
    let qc = critical_dose(model);
    if amplitude <= qc {
        return Err(Error::Domain(format!("A={amplitude} <= Q_c={qc}: non-spiking region")));
    }
    let delta = time_to_threshold(model, amplitude, 0.0)?.expect("A above Q_c");
    let delta_hat = averaged_time_to_threshold(model, amplitude * duty)?;
    let (r_zero, onset) = match delta_hat {
        Some(dh) => (1.0 / dh, None),
        None => (0.0, bif_period(model, 0, Side::Zero, amplitude, duty).ok().map(|b| b.period)),
    };
    let t1_r = bif_period(model, 1, Side::R, amplitude, duty)?.period;
    let t1_l = bif_period(model, 1, Side::L, amplitude, duty)?.period;

    let mut best = (1.0 / t1_r, t1_r);
    let mut consider = |rate: f64, t: f64| {
        if rate > best.0 {
            best = (rate, t);
        }
    };
    for n in 2..=10 {
        let t = bif_period(model, n, Side::R, amplitude, duty)?.period;
        consider(n as f64 / t, t);
    }
    let (t_lo, t_hi) = (t1_r / 20.0, 4.0 * t1_l);
    for i in 0..CERTIFY_SAMPLES {
        let t = t_lo * (t_hi / t_lo).powf(i as f64 / (CERTIFY_SAMPLES - 1) as f64);
        let forcing = Forcing::new(amplitude, t, duty)?;
        let o = attractor(model, &forcing, &AttractorOptions::default()).map_err(|e| e.at(format!("T={t}")))?;
        consider(o.rate, t);
    }
    consider(r_zero, 0.0);
    consider(duty / delta, f64::INFINITY);
    let premise_verified = best.1 == t1_r;

    let r_min = match (onset, delta_hat) {
        (Some(onset), _) => RateMin::ZeroBelow { onset },
        (None, None) => RateMin::InfimumAtZeroPeriod { value: 0.0 },
        (None, Some(dh)) => {
            if 1.0 / dh <= 1.0 / t1_l {
                RateMin::InfimumAtZeroPeriod { value: 1.0 / dh }
            } else {
                RateMin::Near {
                    period: t1_l,
                    value: 1.0 / t1_l,
                }
            }
        }
    };

    Ok(RateLimits {
        delta,
        delta_hat,
        r_infinity: duty / delta,
        r_zero,
        onset,
        t1_r,
        t1_l,
        r_max: best.0,
        r_max_period: best.1,
        premise_verified,
        r_min,
    })
}
