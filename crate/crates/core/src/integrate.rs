//! Adaptive Dormand–Prince 5(4) integration of scalar autonomous ODEs with
//! upward threshold-crossing detection on the quartic dense output.
//!
//! The right-hand side is autonomous, so stage nodes never enter.

use crate::error::{Error, Result};

/// Numerical settings for the embedded Runge–Kutta pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Width of the final bracket around a threshold crossing time.
    pub event_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            event_tol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outcome {
    /// The trajectory reached the threshold after this much time.
    Crossed(f64),
    /// The full duration elapsed below threshold; final state.
    Finished(f64),
}

const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    -71.0 / 57600.0,
    0.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
];
// Shampine's quartic continuous extension.
const P: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

struct DenseStep {
    x: f64,
    h: f64,
    q: [f64; 4],
}

impl DenseStep {
    fn new(x: f64, h: f64, k: &[f64; 7]) -> Self {
        let mut q = [0.0; 4];
        for (j, qj) in q.iter_mut().enumerate() {
            *qj = k.iter().zip(P.iter()).map(|(ki, row)| ki * row[j]).sum();
        }
        Self { x, h, q }
    }

    fn eval(&self, sigma: f64) -> f64 {
        let poly = sigma * (self.q[0] + sigma * (self.q[1] + sigma * (self.q[2] + sigma * self.q[3])));
        self.x + self.h * poly
    }
}

fn initial_step<F: Fn(f64) -> f64>(rhs: &F, x0: f64, k0: f64, s: &IntegratorSettings) -> f64 {
    let scale = s.atol + s.rtol * x0.abs();
    let d0 = x0.abs() / scale;
    let d1 = k0.abs() / scale;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let k1 = rhs(x0 + h0 * k0);
    let d2 = (k1 - k0).abs() / scale / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `x' = rhs(x)` from `x0` for `duration` (may be infinite when a
/// threshold is given and known to be reachable).
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    rhs: F,
    x0: f64,
    duration: f64,
    threshold: Option<f64>,
    s: &IntegratorSettings,
) -> Result<Outcome> {
    if let Some(th) = threshold {
        if x0 >= th {
            return Ok(Outcome::Crossed(0.0));
        }
    }
    if duration == 0.0 {
        return Ok(Outcome::Finished(x0));
    }
    if !x0.is_finite() {
        return Err(Error::Integration(format!("nonfinite initial state {x0}")));
    }

    let mut t = 0.0;
    let mut x = x0;
    let mut k = [0.0f64; 7];
    k[0] = rhs(x);
    let mut h = initial_step(&rhs, x, k[0], s).min(duration);
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > s.max_steps {
            return Err(Error::Integration(format!(
                "step budget of {} exhausted at t={t}",
                s.max_steps
            )));
        }
        let remaining = duration - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }

        for i in 1..6 {
            let incr: f64 = (0..i).map(|j| A[i][j] * k[j]).sum();
            k[i] = rhs(x + h * incr);
        }
        let x_new = x + h * B.iter().zip(k.iter()).map(|(b, ki)| b * ki).sum::<f64>();
        k[6] = rhs(x_new);
        if !x_new.is_finite() || !k[6].is_finite() {
            return Err(Error::Integration(format!("nonfinite state at t={t}")));
        }

        let err = h * E.iter().zip(k.iter()).map(|(e, ki)| e * ki).sum::<f64>();
        let scale = s.atol + s.rtol * x.abs().max(x_new.abs());
        let err_norm = err.abs() / scale;

        if err_norm <= 1.0 {
            if let Some(th) = threshold {
                if x_new >= th {
                    let dense = DenseStep::new(x, h, &k);
                    let (mut lo, mut hi) = (0.0f64, 1.0f64);
                    while (hi - lo) * h > s.event_tol {
                        let mid = 0.5 * (lo + hi);
                        if dense.eval(mid) >= th {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if mid == lo && mid == hi {
                            break;
                        }
                    }
                    return Ok(Outcome::Crossed(t + 0.5 * (lo + hi) * h));
                }
            }
            if last {
                return Ok(Outcome::Finished(x_new));
            }
            t += h;
            x = x_new;
            k[0] = k[6];
            let factor = if err_norm == 0.0 {
                10.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 10.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).max(0.2);
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t={t}")));
            }
        }
    }
}
