//! Firing-rate staircases over the period, parameter-plane scans and the
//! period-adding check on sampled windows.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{classify_region, Forcing, ModelSpec, Region};
use crate::orbit::{attractor, canonical_word, AttractorOptions, OrbitSummary};

/// How the forcing is adjusted as `T` varies so that the dose stays fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DoseMode {
    /// Fixed amplitude and duty cycle.
    Width { amplitude: f64, duty: f64 },
    /// Fixed pulse duration `Δ`; `d = Δ/T` and `A = Q T / Δ`.
    Amplitude { pulse: f64, dose: f64 },
}

impl DoseMode {
    pub fn forcing_at(&self, period: f64) -> Result<Forcing> {
        match *self {
            DoseMode::Width { amplitude, duty } => Forcing::new(amplitude, period, duty),
            DoseMode::Amplitude { pulse, dose } => {
                if !(pulse > 0.0 && dose >= 0.0) {
                    return Err(Error::Domain(format!("invalid pulse {pulse} or dose {dose}")));
                }
                if !(period > pulse) {
                    return Err(Error::Domain(format!("period {period} must exceed the pulse duration {pulse}")));
                }
                Forcing::new(dose * period / pulse, period, pulse / period)
            }
        }
    }

    /// Smallest admissible period, if the mode has one.
    pub fn min_period(&self) -> Option<f64> {
        match *self {
            DoseMode::Width { .. } => None,
            DoseMode::Amplitude { pulse, .. } => Some(pulse),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseSample {
    pub period: f64,
    pub amplitude: f64,
    pub duty: f64,
    pub eta: Ratio<u64>,
    pub rho: Ratio<u64>,
    pub rate: f64,
    pub word: String,
    pub period_p: usize,
    pub converged: bool,
    pub contraction_ok: bool,
}

impl StaircaseSample {
    fn from_orbit(forcing: &Forcing, o: OrbitSummary) -> Self {
        Self {
            period: forcing.period(),
            amplitude: forcing.amplitude(),
            duty: forcing.duty(),
            eta: o.eta,
            rho: o.rho,
            rate: o.rate,
            word: o.word,
            period_p: o.period_p,
            converged: o.converged,
            contraction_ok: o.contraction_margin > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub points: usize,
    /// Bisect neighbours with different firing numbers until they are closer
    /// than a hundredth of the grid spacing.
    pub refine: bool,
    /// Worker threads; results do not depend on this.
    pub workers: usize,
    pub attractor: AttractorOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            points: 2000,
            refine: false,
            workers: 1,
            attractor: AttractorOptions::default(),
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}

/// Evaluates `f` on every item in parallel and returns results in input order.
fn par_map<T: Sync, U: Send>(pool: &rayon::ThreadPool, items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    pool.install(|| items.par_iter().map(&f).collect())
}

fn sample_at(model: &ModelSpec, mode: &DoseMode, period: f64, opts: &AttractorOptions) -> Result<StaircaseSample> {
    let run = || {
        let forcing = mode.forcing_at(period)?;
        let o = attractor(model, &forcing, opts)?;
        Ok(StaircaseSample::from_orbit(&forcing, o))
    };
    run().map_err(|e: Error| e.at(format!("T={period}")))
}

/// Samples the attractor on a uniform grid of periods in `[t_min, t_max]`.
///
/// In amplitude mode a lower end equal to `Δ` (where `d = 1`) is moved up by
/// one part in 10⁹.
pub fn sweep_period(
    model: &ModelSpec,
    mode: &DoseMode,
    t_min: f64,
    t_max: f64,
    opts: &SweepOptions,
) -> Result<Vec<StaircaseSample>> {
    let mut t_min = t_min;
    if let Some(pulse) = mode.min_period() {
        if t_min == pulse {
            t_min = pulse * (1.0 + 1e-9);
        }
        if t_min < pulse {
            return Err(Error::Domain(format!("t_min {t_min} below the pulse duration {pulse}")));
        }
    }
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(Error::Domain(format!("invalid period range [{t_min}, {t_max}]")));
    }
    if opts.points == 0 || (opts.points == 1 && t_max > t_min) {
        return Err(Error::Domain("a sweep needs at least two points for a nonempty range".into()));
    }
    let grid: Vec<f64> = if opts.points == 1 {
        vec![t_min]
    } else {
        let h = (t_max - t_min) / (opts.points - 1) as f64;
        (0..opts.points)
            .map(|i| if i + 1 == opts.points { t_max } else { t_min + h * i as f64 })
            .collect()
    };
    let pool = pool(opts.workers)?;
    let eval = |ts: &[f64]| -> Result<Vec<StaircaseSample>> {
        par_map(&pool, ts, |&t| sample_at(model, mode, t, &opts.attractor))
            .into_iter()
            .collect()
    };
    let mut samples = eval(&grid)?;
    if opts.refine && opts.points > 1 {
        let min_gap = (t_max - t_min) / (opts.points - 1) as f64 / 100.0;
        loop {
            let mids: Vec<f64> = samples
                .windows(2)
                .filter(|w| w[0].eta != w[1].eta && w[1].period - w[0].period >= min_gap)
                .map(|w| 0.5 * (w[0].period + w[1].period))
                .collect();
            if mids.is_empty() {
                break;
            }
            let extra = eval(&mids)?;
            samples.extend(extra);
            samples.sort_by(|a, b| a.period.total_cmp(&b.period));
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Period(usize),
    /// No periodic orbit with period at or below the cap was found.
    Capped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCell {
    pub duty: f64,
    pub inv_amplitude: f64,
    pub outcome: CellOutcome,
    pub eta: Option<Ratio<u64>>,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneScan {
    pub period: f64,
    pub duties: Vec<f64>,
    pub inv_amplitudes: Vec<f64>,
    pub period_cap: usize,
    /// Row-major: one row per `1/A` value, one column per duty cycle.
    pub cells: Vec<PlaneCell>,
}

impl PlaneScan {
    pub fn cell(&self, inv_index: usize, duty_index: usize) -> &PlaneCell {
        &self.cells[inv_index * self.duties.len() + duty_index]
    }
}

/// Attractor period and firing number on a grid of `(d, 1/A)` at fixed `T`.
/// Failures at individual nodes are recorded in the cell.
pub fn scan_plane(
    model: &ModelSpec,
    period: f64,
    duties: &[f64],
    inv_amplitudes: &[f64],
    period_cap: usize,
    workers: usize,
    opts: &AttractorOptions,
) -> Result<PlaneScan> {
    if let Some(&d) = duties.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::Domain(format!("duty cycle {d} outside (0,1)")));
    }
    if let Some(&v) = inv_amplitudes.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("1/A = {v} must be positive")));
    }
    if period_cap == 0 {
        return Err(Error::Domain("period cap must be positive".into()));
    }
    Forcing::new(1.0, period, 0.5)?;
    let nodes: Vec<(f64, f64)> = inv_amplitudes
        .iter()
        .flat_map(|&v| duties.iter().map(move |&d| (v, d)))
        .collect();
    let opts = AttractorOptions {
        max_period: period_cap,
        ..*opts
    };
    let pool = pool(workers)?;
    let cells = par_map(&pool, &nodes, |&(inv, d)| {
        let amplitude = 1.0 / inv;
        let region = classify_region(model, amplitude, d).region;
        let result = Forcing::new(amplitude, period, d).and_then(|f| attractor(model, &f, &opts));
        let (outcome, eta) = match result {
            Ok(o) if o.converged => (CellOutcome::Period(o.period_p), Some(o.eta)),
            Ok(_) => (CellOutcome::Capped, None),
            Err(e) => (CellOutcome::Failed(e.at(format!("d={d}, 1/A={inv}")).to_string()), None),
        };
        PlaneCell {
            duty: d,
            inv_amplitude: inv,
            outcome,
            eta,
            region,
        }
    });
    Ok(PlaneScan {
        period,
        duties: duties.to_vec(),
        inv_amplitudes: inv_amplitudes.to_vec(),
        period_cap,
        cells,
    })
}

/// A maximal run of consecutive samples sharing one itinerary.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub word: String,
    pub rho: Ratio<u64>,
    /// Integer part of the firing number, `η − ρ`.
    pub band: u64,
    pub t_first: f64,
    pub t_last: f64,
}

/// Maximal runs of equal words among converged samples with a contracting
/// right branch, in order of increasing `T`.
pub fn windows(samples: &[StaircaseSample]) -> Vec<Window> {
    let mut out: Vec<Window> = Vec::new();
    let mut prev_kept = false;
    for s in samples {
        if !(s.converged && s.contraction_ok) {
            prev_kept = false;
            continue;
        }
        let band = (s.eta - s.rho).to_integer();
        match out.last_mut() {
            Some(w) if prev_kept && w.word == s.word && w.band == band => w.t_last = s.period,
            _ => out.push(Window {
                word: s.word.clone(),
                rho: s.rho,
                band,
                t_first: s.period,
                t_last: s.period,
            }),
        }
        prev_kept = true;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddingCheck {
    pub band: u64,
    pub left: String,
    pub right: String,
    pub mediant: String,
    pub mediant_rho: Ratio<u64>,
    /// `T` extent of the mediant window when found between the parents.
    pub found: Option<(f64, f64)>,
    /// Gap between the parent windows.
    pub between: (f64, f64),
}

impl AddingCheck {
    pub fn ok(&self) -> bool {
        self.found.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AddingReport {
    pub checks: Vec<AddingCheck>,
}

impl AddingReport {
    pub fn violations(&self) -> impl Iterator<Item = &AddingCheck> {
        self.checks.iter().filter(|c| !c.ok())
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// For every pair of observed windows in the same band whose rotation
/// numbers are Farey neighbours and whose mediant has period at most
/// `max_mediant_period`, checks that the concatenated word appears between
/// them with the mediant rotation number.
pub fn verify_adding(samples: &[StaircaseSample], max_mediant_period: usize) -> AddingReport {
    let wins = windows(samples);
    // Observed extent of each distinct (band, word).
    let mut extents: BTreeMap<(u64, String), (Ratio<u64>, f64, f64)> = BTreeMap::new();
    for w in &wins {
        extents
            .entry((w.band, w.word.clone()))
            .and_modify(|e| {
                e.1 = e.1.min(w.t_first);
                e.2 = e.2.max(w.t_last);
            })
            .or_insert((w.rho, w.t_first, w.t_last));
    }
    let entries: Vec<_> = extents.iter().collect();
    let mut checks = Vec::new();
    for (i, ((band_a, word_a), &(rho_a, a_lo, a_hi))) in entries.iter().enumerate() {
        for ((band_b, word_b), &(rho_b, b_lo, b_hi)) in entries.iter().skip(i + 1) {
            if band_a != band_b {
                continue;
            }
            let (pa, ra) = (word_a.len() as u64, *rho_a.numer() * word_a.len() as u64 / *rho_a.denom());
            let (pb, rb) = (word_b.len() as u64, *rho_b.numer() * word_b.len() as u64 / *rho_b.denom());
            let det = (pa * rb) as i64 - (ra * pb) as i64;
            if det.abs() != 1 || (pa + pb) as usize > max_mediant_period {
                continue;
            }
            let mediant = canonical_word(&format!("{word_a}{word_b}"));
            let mediant_rho = Ratio::new(ra + rb, pa + pb);
            let between = if a_hi <= b_lo { (a_hi, b_lo) } else { (b_hi, a_lo) };
            let found = extents
                .get(&(*band_a, mediant.clone()))
                .filter(|&&(rho, lo, hi)| rho == mediant_rho && lo > between.0 && hi < between.1)
                .map(|&(_, lo, hi)| (lo, hi));
            let (left, right) = if a_hi <= b_lo {
                (word_a.clone(), word_b.clone())
            } else {
                (word_b.clone(), word_a.clone())
            };
            checks.push(AddingCheck {
                band: *band_a,
                left,
                right,
                mediant,
                mediant_rho,
                found,
                between,
            });
        }
    }
    checks.sort_by(|x, y| x.between.0.total_cmp(&y.between.0).then(x.mediant.cmp(&y.mediant)));
    AddingReport { checks }
}
