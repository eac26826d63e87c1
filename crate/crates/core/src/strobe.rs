//! The stroboscopic map with reset, its discontinuity boundary and branch fixed points.

use crate::error::{Error, Result};
use crate::model::{flow, time_to_threshold, Forcing, ModelSpec};
use crate::roots::{bisect_predicate, solve_bracketed, RootTol};

/// Default guard on the number of spikes in a single period.
pub const SPIKE_CAP: usize = 1_000_000;

/// One application of the stroboscopic map.
#[derive(Debug, Clone, PartialEq)]
pub struct StrobeResult {
    pub image: f64,
    pub spikes: usize,
    /// Spike times measured from the start of the period.
    pub spike_times: Vec<f64>,
}

/// The unique initial condition `Σₙ` whose trajectory hits threshold exactly
/// at the end of the pulse. Points at or above it spike `n` times, points
/// below it `n - 1` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryInfo {
    pub sigma: f64,
    pub n: usize,
}

/// Per-forcing state shared by repeated map evaluations: the reset-to-threshold
/// time `δ` is computed once.
#[derive(Clone)]
pub(crate) struct Stepper<'a> {
    model: &'a ModelSpec,
    drive: f64,
    on: f64,
    off: f64,
    delta: Option<f64>,
    cap: usize,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(model: &'a ModelSpec, forcing: &Forcing) -> Result<Self> {
        let drive = forcing.amplitude();
        let on = forcing.pulse_duration();
        Ok(Self {
            model,
            drive,
            on,
            off: forcing.period() - on,
            delta: time_to_threshold(model, drive, 0.0)?,
            cap: SPIKE_CAP,
        })
    }

    pub(crate) fn model(&self) -> &ModelSpec {
        self.model
    }

    pub(crate) fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// Spike count during the pulse and the time of the last spike.
    /// States at (or rounded above) threshold fire at `t = 0`.
    fn spikes(&self, x0: f64) -> Result<(usize, f64)> {
        let Some(delta) = self.delta else {
            return Ok((0, 0.0));
        };
        let x0 = x0.min(self.model.theta());
        let t1 = time_to_threshold(self.model, self.drive, x0)?.unwrap_or(f64::INFINITY);
        if t1 > self.on {
            return Ok((0, 0.0));
        }
        let approx = ((self.on - t1) / delta).floor();
        if approx >= self.cap as f64 {
            return Err(Error::Runaway { cap: self.cap });
        }
        let mut k = approx as usize;
        while t1 + (k + 1) as f64 * delta <= self.on {
            k += 1;
        }
        while k > 0 && t1 + k as f64 * delta > self.on {
            k -= 1;
        }
        if k + 1 > self.cap {
            return Err(Error::Runaway { cap: self.cap });
        }
        Ok((k + 1, t1 + k as f64 * delta))
    }

    pub(crate) fn count(&self, x0: f64) -> Result<usize> {
        Ok(self.spikes(x0)?.0)
    }

    pub(crate) fn step(&self, x0: f64) -> Result<(f64, usize)> {
        let (n, last) = self.spikes(x0)?;
        let end_of_pulse = if n == 0 {
            flow(self.model, self.drive, self.on, x0.min(self.model.theta()))?
        } else {
            flow(self.model, self.drive, (self.on - last).max(0.0), 0.0)?
        };
        Ok((flow(self.model, 0.0, self.off, end_of_pulse)?, n))
    }

    /// Spike counts at `x0 = 0` and in the limit `x0 → θ⁻`.
    pub(crate) fn count_range(&self) -> Result<(usize, usize)> {
        let lo = self.count(0.0)?;
        let Some(delta) = self.delta else {
            return Ok((lo, lo));
        };
        // Number of j >= 0 with j δ < on.
        let mut hi = (self.on / delta).ceil().max(0.0);
        if hi > self.cap as f64 {
            return Err(Error::Runaway { cap: self.cap });
        }
        while hi > 0.0 && (hi - 1.0) * delta >= self.on {
            hi -= 1.0;
        }
        while hi * delta < self.on {
            hi += 1.0;
        }
        Ok((lo, (hi as usize).max(lo)))
    }

    pub(crate) fn boundary(&self) -> Result<Option<BoundaryInfo>> {
        let (lo, hi) = self.count_range()?;
        if lo == hi {
            return Ok(None);
        }
        let theta = self.model.theta();
        let tol = self.model.state_tol();
        let (_, sigma) = bisect_predicate(|x| Ok(x >= theta || self.count(x)? >= hi), 0.0, theta, tol)?;
        Ok(Some(BoundaryInfo { sigma, n: hi }))
    }

    /// Image of `x` under the formula for exactly `n` spikes, continuous on
    /// the closure of the branch where it applies.
    pub(crate) fn branch_image(&self, x: f64, n: usize) -> Result<f64> {
        let end_of_pulse = if n == 0 {
            flow(self.model, self.drive, self.on, x)?
        } else {
            let delta = self
                .delta
                .ok_or_else(|| Error::Domain("threshold unreachable under this drive".into()))?;
            let t1 = time_to_threshold(self.model, self.drive, x.min(self.model.theta()))?.unwrap_or(f64::INFINITY);
            let rem = self.on - t1 - (n - 1) as f64 * delta;
            flow(self.model, self.drive, rem.max(0.0), 0.0)?
        };
        flow(self.model, 0.0, self.off, end_of_pulse)
    }
}

fn check_state(model: &ModelSpec, x0: f64) -> Result<()> {
    if x0 >= 0.0 && x0 < model.theta() {
        Ok(())
    } else {
        Err(Error::Domain(format!("state {x0} outside [0, {})", model.theta())))
    }
}

/// Applies the stroboscopic map once, recording every spike. A trajectory
/// reaching threshold exactly at the end of the pulse spikes there.
pub fn strobe(model: &ModelSpec, forcing: &Forcing, x0: f64) -> Result<StrobeResult> {
    check_state(model, x0)?;
    let stepper = Stepper::new(model, forcing)?;
    let (spikes, last) = stepper.spikes(x0)?;
    let spike_times = match stepper.delta {
        Some(delta) if spikes > 0 => {
            let first = last - (spikes - 1) as f64 * delta;
            (0..spikes).map(|j| first + j as f64 * delta).collect()
        }
        _ => Vec::new(),
    };
    let (image, _) = stepper.step(x0)?;
    Ok(StrobeResult {
        image,
        spikes,
        spike_times,
    })
}

/// Locates `Σₙ` by bisection on the spike count. `None` when every state in
/// `[0, θ)` produces the same number of spikes.
pub fn boundary_sigma(model: &ModelSpec, forcing: &Forcing) -> Result<Option<BoundaryInfo>> {
    Stepper::new(model, forcing)?.boundary()
}

/// Fixed point of the map restricted to the branch with `n` spikes, or
/// `None` when that branch is empty or maps off itself.
pub fn fixed_point(model: &ModelSpec, forcing: &Forcing, n: usize) -> Result<Option<f64>> {
    let stepper = Stepper::new(model, forcing)?;
    let theta = model.theta();
    let (lo_count, hi_count) = stepper.count_range()?;
    let (lo, hi) = if lo_count == hi_count {
        if n != lo_count {
            return Ok(None);
        }
        (0.0, theta)
    } else {
        let sigma = stepper.boundary()?.expect("two counts imply a boundary").sigma;
        if n == hi_count {
            (sigma, theta)
        } else if n == lo_count {
            (0.0, sigma)
        } else {
            return Ok(None);
        }
    };
    let h = |x: f64| Ok(stepper.branch_image(x, n)? - x);
    let (h_lo, h_hi) = (h(lo)?, h(hi)?);
    // Branch domains are half-open on the right, hence the strict sign at `hi`.
    if !(h_lo >= 0.0 && h_hi < 0.0) {
        return Ok(None);
    }
    if h_lo == 0.0 {
        return Ok(Some(lo));
    }
    let root = solve_bracketed(h, lo, hi, RootTol::default())?;
    Ok(Some(root.upper))
}
