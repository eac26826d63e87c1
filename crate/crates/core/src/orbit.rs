//! Attractor detection, symbolic itineraries and rotation numbers.

use num_rational::Ratio;

use crate::bifurcation::contraction_margin;
use crate::error::{Error, Result};
use crate::model::{Forcing, ModelSpec};
use crate::strobe::Stepper;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    /// Iteration budget before the final periodicity search. Detection is
    /// attempted earlier at doubling checkpoints, but only refined orbits are
    /// ever accepted.
    pub transient: usize,
    pub max_period: usize,
    pub seed: f64,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            transient: 10_000,
            max_period: 10_000,
            seed: 0.0,
        }
    }
}

/// A periodic orbit of the stroboscopic map as seen from iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSummary {
    pub period_p: usize,
    pub spikes_n: usize,
    /// Itinerary in its lexicographically least rotation. `R` marks steps
    /// starting at or above the boundary.
    pub word: String,
    /// No boundary in `[0, θ)`: the word is all `L` by convention.
    pub single_branch: bool,
    pub eta: Ratio<u64>,
    pub rho: Ratio<u64>,
    pub rate: f64,
    /// Orbit points aligned with `word`.
    pub points: Vec<f64>,
    pub spikes_per_step: Vec<usize>,
    pub converged: bool,
    /// `|s^p(x) - x|` at `points[0]`.
    pub residual: f64,
    pub contraction_margin: f64,
}

/// Fraction of `R` symbols in an itinerary.
pub fn rotation_number(word: &str) -> Result<Ratio<u64>> {
    if word.is_empty() {
        return Err(Error::Domain("empty itinerary".into()));
    }
    let mut r = 0u64;
    for c in word.chars() {
        match c {
            'R' => r += 1,
            'L' => {}
            other => return Err(Error::Domain(format!("invalid itinerary symbol {other:?}"))),
        }
    }
    Ok(Ratio::new(r, word.len() as u64))
}

/// Start index of the lexicographically least rotation.
pub fn least_rotation(s: &[u8]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let (a, b) = (s[(i + k) % n], s[(j + k) % n]);
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// Canonical representative of a word up to cyclic rotation.
pub fn canonical_word(word: &str) -> String {
    let bytes = word.as_bytes();
    if bytes.is_empty() {
        return String::new();
    }
    let m = least_rotation(bytes);
    let mut out = String::with_capacity(word.len());
    out.push_str(&word[m..]);
    out.push_str(&word[..m]);
    out
}

const CANDIDATE_TOL: f64 = 1e-4;
const ACCEPT_TOL: f64 = 1e-9;
const REFINE_ATTEMPTS: usize = 8;
const FIRST_CHECKPOINT: usize = 64;

struct Iterates<'a> {
    stepper: Stepper<'a>,
}

impl Iterates<'_> {
    /// `s^p(x)` together with the per-step spike counts.
    fn orbit(&self, x: f64, p: usize) -> Result<(f64, Vec<usize>)> {
        let mut x = x;
        let mut ks = Vec::with_capacity(p);
        for _ in 0..p {
            let (y, k) = self.stepper.step(x)?;
            x = y;
            ks.push(k);
        }
        Ok((x, ks))
    }

    /// Secant iteration on `s^p(x) - x` from `x0`; returns a point whose
    /// itinerary is `itin` and whose residual is below the acceptance
    /// tolerance, if one is found.
    fn refine(&self, x0: f64, itin: &[usize]) -> Result<Option<(f64, f64)>> {
        let theta = self.stepper.model().theta();
        let p = itin.len();
        let g = |x: f64| -> Result<(f64, bool)> {
            let (y, ks) = self.orbit(x, p)?;
            Ok((y - x, ks == itin))
        };
        let accept_tol = ACCEPT_TOL * theta.max(1.0);
        let (mut xa, (mut ga, ok_a)) = (x0, g(x0)?);
        let mut best = ok_a.then_some((xa, ga.abs()));
        if best.is_some_and(|(_, r)| r < 1e-14 * theta) {
            return Ok(best);
        }
        let mut xb = (x0 + ga).clamp(0.0, theta * (1.0 - f64::EPSILON));
        for _ in 0..40 {
            let (gb, ok_b) = g(xb)?;
            if ok_b && best.is_none_or(|(_, r)| gb.abs() < r) {
                best = Some((xb, gb.abs()));
            }
            if gb == 0.0 || gb == ga || (xb - xa).abs() <= 1e-16 * theta {
                break;
            }
            let next = xb - gb * (xb - xa) / (gb - ga);
            if !next.is_finite() {
                break;
            }
            xa = xb;
            ga = gb;
            xb = next.clamp(0.0, theta * (1.0 - f64::EPSILON));
        }
        Ok(best.filter(|&(_, r)| r < accept_tol))
    }
}

/// Iterates the map from `opts.seed` and reports the periodic orbit it
/// settles on.
pub fn attractor(model: &ModelSpec, forcing: &Forcing, opts: &AttractorOptions) -> Result<OrbitSummary> {
    let theta = model.theta();
    if !(opts.seed >= 0.0 && opts.seed < theta) {
        return Err(Error::Domain(format!("seed {} outside [0, {theta})", opts.seed)));
    }
    if opts.max_period == 0 {
        return Err(Error::Domain("max_period must be positive".into()));
    }
    let stepper = Stepper::new(model, forcing)?;
    let (_, n_hi) = stepper.count_range()?;
    let single_branch = stepper.boundary()?.is_none();
    let it = Iterates { stepper };

    let budget = opts.transient + 2 * opts.max_period;
    let mut xs = Vec::with_capacity(budget.min(1 << 16) + 1);
    let mut ks: Vec<usize> = Vec::with_capacity(budget.min(1 << 16));
    xs.push(opts.seed);
    let mut checkpoint = FIRST_CHECKPOINT.min(budget.max(1));
    let cand_tol = CANDIDATE_TOL * theta;

    let mut found = None;
    for k in 1..=budget {
        let (y, n) = it.stepper.step(xs[k - 1])?;
        xs.push(y);
        ks.push(n);
        if k != checkpoint && k != budget {
            continue;
        }
        checkpoint = (checkpoint * 2).min(budget);
        let mut attempts = 0;
        for p in 1..=opts.max_period.min(k / 2) {
            if (xs[k] - xs[k - p]).abs() >= cand_tol || ks[k - p..k] != ks[k - 2 * p..k - p] {
                continue;
            }
            if let Some((x, r)) = it.refine(xs[k], &ks[k - p..k])? {
                found = Some((x, p, r));
                break;
            }
            attempts += 1;
            if attempts == REFINE_ATTEMPTS {
                break;
            }
        }
        if found.is_some() {
            break;
        }
    }

    let (start, p, residual, converged) = match found {
        Some((x, p, r)) => (x, p, r, true),
        None => {
            let k = xs.len() - 1;
            let p = (1..=opts.max_period.min(k.max(1)))
                .filter(|&p| p <= k)
                .min_by(|&p, &q| {
                    let dp = (xs[k] - xs[k - p]).abs();
                    let dq = (xs[k] - xs[k - q]).abs();
                    dp.total_cmp(&dq)
                })
                .unwrap_or(1);
            let (y, _) = it.orbit(xs[k], p)?;
            (xs[k], p, (y - xs[k]).abs(), false)
        }
    };

    let mut points = Vec::with_capacity(p);
    let mut spikes = Vec::with_capacity(p);
    let mut x = start;
    for _ in 0..p {
        points.push(x);
        let (y, n) = it.stepper.step(x)?;
        spikes.push(n);
        x = y;
    }
    let symbols: Vec<u8> = spikes
        .iter()
        .map(|&n| if !single_branch && n == n_hi { b'R' } else { b'L' })
        .collect();
    let m = least_rotation(&symbols);
    points.rotate_left(m);
    spikes.rotate_left(m);
    let mut symbols = symbols;
    symbols.rotate_left(m);
    let word = String::from_utf8(symbols).expect("ascii");

    let spikes_n: usize = spikes.iter().sum();
    let r_count = word.bytes().filter(|&c| c == b'R').count();
    let margin = contraction_margin(model, forcing)?;
    Ok(OrbitSummary {
        period_p: p,
        spikes_n,
        single_branch,
        eta: Ratio::new(spikes_n as u64, p as u64),
        rho: Ratio::new(r_count as u64, p as u64),
        rate: spikes_n as f64 / p as f64 / forcing.period(),
        word,
        points,
        spikes_per_step: spikes,
        converged,
        residual,
        contraction_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_numbers() {
        assert_eq!(rotation_number("LR").unwrap(), Ratio::new(1, 2));
        assert_eq!(rotation_number("LLLLR").unwrap(), Ratio::new(1, 5));
        assert_eq!(rotation_number("L").unwrap(), Ratio::new(0, 1));
        assert!(rotation_number("").is_err());
        assert!(rotation_number("LXR").is_err());
    }

    #[test]
    fn least_rotation_matches_brute_force() {
        for word in ["RLL", "LRLRR", "RRLRL", "LLLL", "RLRLRL", "LRRLRRLRL", "R"] {
            let brute = (0..word.len())
                .map(|i| format!("{}{}", &word[i..], &word[..i]))
                .min()
                .unwrap();
            assert_eq!(canonical_word(word), brute, "{word}");
        }
    }

    fn pstar() -> ModelSpec {
        ModelSpec::linear(-0.5, 0.2, 1.0).unwrap()
    }

    #[test]
    fn non_spiking_fixed_point() {
        let f = Forcing::new(0.25, 2.0, 0.5).unwrap();
        let o = attractor(&pstar(), &f, &AttractorOptions::default()).unwrap();
        assert!(o.converged);
        assert_eq!((o.period_p, o.spikes_n), (1, 0));
        assert_eq!(o.eta, Ratio::new(0, 1));
        assert_eq!(o.rho, Ratio::new(0, 1));
        assert_eq!(o.rate, 0.0);
        assert_eq!(o.word, "L");
        assert!(o.single_branch);
        assert!((o.points[0] - 0.588770).abs() < 1e-6);
        assert!(o.contraction_margin > 0.0);
    }

    #[test]
    fn orbit_closes_under_iteration() {
        let m = pstar();
        let f = Forcing::new(10.0 / 3.0, 0.7, 0.2).unwrap();
        let o = attractor(&m, &f, &AttractorOptions::default()).unwrap();
        assert!(o.converged);
        let mut x = o.points[0];
        for _ in 0..o.period_p {
            x = crate::strobe::strobe(&m, &f, x).unwrap().image;
        }
        assert!((x - o.points[0]).abs() < 1e-9);
        assert_eq!(o.word.len(), o.period_p);
        let expected_eta = Ratio::new(o.spikes_n as u64, o.period_p as u64);
        assert_eq!(o.eta, expected_eta);
        assert_eq!(o.eta, Ratio::from_integer(0) + o.rho);
    }

    #[test]
    fn seed_is_validated() {
        let f = Forcing::new(1.0, 1.0, 0.5).unwrap();
        let opts = AttractorOptions {
            seed: 1.0,
            ..Default::default()
        };
        assert!(attractor(&pstar(), &f, &opts).is_err());
    }
}
