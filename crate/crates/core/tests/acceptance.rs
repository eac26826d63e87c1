//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;

use ifstrobe::bifurcation::{bif_amplitude, rate_limits, Side};
use ifstrobe::model::{averaged_time_to_threshold, classify_region, critical_dose, flow, Region};
use ifstrobe::strobe::{boundary_sigma, fixed_point, strobe};
use ifstrobe::sweep::{sweep_period, verify_adding, DoseMode, StaircaseSample, SweepOptions};
use ifstrobe::{AttractorOptions, Forcing, ModelSpec, Ratio};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn pstar() -> ModelSpec {
    ModelSpec::linear(-0.5, 0.2, 1.0).unwrap()
}

/// Linear LIF closed forms used as oracles.
mod oracle {
    pub const A: f64 = -0.5;
    pub const B: f64 = 0.2;
    pub const THETA: f64 = 1.0;

    pub fn flow(i: f64, t: f64, x0: f64) -> f64 {
        let xs = -(B + i) / A;
        xs + (x0 - xs) * (A * t).exp()
    }

    /// Non-spiking fixed point of the time-T map.
    pub fn rest_point(amp: f64, period: f64, duty: f64) -> f64 {
        let (on, off) = (-(B + amp) / A, -B / A);
        let (qon, qoff) = ((A * duty * period).exp(), (A * (1.0 - duty) * period).exp());
        (off * (1.0 - qoff) + on * (1.0 - qon) * qoff) / (1.0 - qon * qoff)
    }

    /// Initial state whose trajectory reaches θ exactly at the pulse end.
    pub fn sigma_one(amp: f64, pulse: f64) -> f64 {
        let xs = -(B + amp) / A;
        xs + (THETA - xs) * (-A * pulse).exp()
    }
}

fn rel(x: f64, target: f64) -> f64 {
    ((x - target) / target).abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let m = pstar();
    let qc = critical_dose(&m);
    let formula = -(oracle::A * oracle::THETA + oracle::B);
    let mut rng = StdRng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut counts = [0usize; 3];
    for _ in 0..10_000 {
        let amp: f64 = rng.random_range(0.0..4.0);
        let d: f64 = rng.random_range(1e-3..1.0);
        let expected = if amp <= qc {
            Region::NonSpiking
        } else if amp * d > qc {
            Region::PermanentSpiking
        } else {
            Region::ConditionalSpiking
        };
        let got = classify_region(&m, amp, d).region;
        counts[expected as usize] += 1;
        if got != expected {
            mismatches += 1;
        }
    }
    check(
        qc == 0.3 && formula == 0.3 && mismatches == 0 && counts.iter().all(|&c| c > 0),
        format!("Q_c={qc}, 10000 draws, {mismatches} mismatches, region counts {counts:?}"),
    )
}

fn criterion_2() -> Outcome {
    let m = pstar();
    let cases = [(0.3, 0.2, 0.655), (1.2, 0.8, 0.604), (0.777, 0.2, 0.244), (3.111, 0.8, 0.125)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (inv, d, printed) in cases {
        let l = rate_limits(&m, 1.0 / inv, d).map_err(|e| e.to_string())?;
        let good = (l.r_infinity - printed).abs() <= 0.001;
        ok &= good;
        parts.push(format!("d/δ(1/A={inv},d={d})={:.5}", l.r_infinity));
    }
    let dh = averaged_time_to_threshold(&m, 0.666).map_err(|e| e.to_string())?.ok_or("no δ̂")?;
    ok &= (1.0 / dh - 0.58).abs() <= 0.01;
    parts.push(format!("1/δ̂(Q=0.666)={:.5}", 1.0 / dh));
    check(ok, parts.join(", "))
}

fn single(m: &ModelSpec, amp: f64, d: f64, period: f64, max_period: usize) -> Result<StaircaseSample, String> {
    let opts = SweepOptions {
        points: 1,
        attractor: AttractorOptions {
            max_period,
            ..Default::default()
        },
        ..Default::default()
    };
    let s = sweep_period(m, &DoseMode::Width { amplitude: amp, duty: d }, period, period, &opts)
        .map_err(|e| e.to_string())?;
    Ok(s.into_iter().next().unwrap())
}

fn criterion_3() -> Outcome {
    let m = pstar();
    let cases = [(0.3, 0.2), (1.2, 0.8), (0.777, 0.2), (3.111, 0.8)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (inv, d) in cases {
        let amp = 1.0 / inv;
        let l = rate_limits(&m, amp, d).map_err(|e| e.to_string())?;
        let s = single(&m, amp, d, 200.0, 10_000)?;
        let e = rel(s.rate, l.r_infinity);
        ok &= e <= 0.02 && s.converged;
        parts.push(format!("T=200 1/A={inv}: {:.2}% (converged {})", 100.0 * e, s.converged));
        match l.onset {
            None => {
                // Orbits at this period have tens of thousands of iterates.
                let s = single(&m, amp, d, 1e-3, 100_000)?;
                let e = rel(s.rate, l.r_zero);
                ok &= e <= 0.02 && s.converged;
                parts.push(format!("T=1e-3 1/A={inv}: {:.2}% (converged {})", 100.0 * e, s.converged));
            }
            Some(t0) => {
                let opts = SweepOptions {
                    points: 200,
                    ..Default::default()
                };
                let mode = DoseMode::Width { amplitude: amp, duty: d };
                let s = sweep_period(&m, &mode, 1e-3, t0 * (1.0 - 1e-6), &opts).map_err(|e| e.to_string())?;
                let zero = s.iter().all(|x| x.rate == 0.0 && x.converged);
                ok &= zero;
                parts.push(format!("1/A={inv}: rate 0 on 200 points below T0={t0:.4}: {zero}"));
            }
        }
    }
    check(ok, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let m = pstar();
    let opts = SweepOptions {
        points: 400,
        ..Default::default()
    };
    let high = DoseMode::Amplitude { pulse: 3.0, dose: 0.6667 };
    let s = sweep_period(&m, &high, 3.0, 120.0, &opts).map_err(|e| e.to_string())?;
    let last = s.last().unwrap();
    let e = rel(last.rate, 0.6667 / oracle::THETA);
    let low = DoseMode::Amplitude { pulse: 3.0, dose: 0.257 };
    let s = sweep_period(&m, &low, 3.0, 120.0, &opts).map_err(|e| e.to_string())?;
    let near = s.iter().take_while(|x| x.period < 3.5).collect::<Vec<_>>();
    let near_zero = !near.is_empty() && near.iter().all(|x| x.rate == 0.0);
    let first_pos = s.iter().find(|x| x.eta > Ratio::from_integer(0)).map(|x| x.period);
    let tail_pos = s.iter().rev().take(20).all(|x| x.rate > 0.0);
    check(
        e <= 0.02 && last.period == 120.0 && near_zero && first_pos.is_some() && tail_pos,
        format!(
            "Q=0.6667 rate(T=120)={:.5} ({:.2}% off Q/θ); Q=0.257 zero on {} samples T<3.5, first η>0 at T={:?}",
            last.rate,
            100.0 * e,
            near.len(),
            first_pos
        ),
    )
}

fn criterion_5() -> Outcome {
    let m = pstar();
    let a0 = bif_amplitude(&m, 0, Side::Zero, 0.5, 1e-4).map_err(|e| e.to_string())?.amplitude;
    let a1 = bif_amplitude(&m, 1, Side::R, 0.5, 200.0).map_err(|e| e.to_string())?.amplitude;
    let mut ok = (a0 - 0.6).abs() <= 1e-3 && (a1 - 0.3).abs() <= 1e-3;
    let grid: Vec<f64> = (0..50)
        .map(|i| (0.05f64.ln() + (200.0f64.ln() - 0.05f64.ln()) * i as f64 / 49.0).exp())
        .collect();
    let curves = [
        (0, Side::Zero),
        (1, Side::R),
        (1, Side::L),
        (2, Side::R),
        (2, Side::L),
        (3, Side::R),
        (3, Side::L),
    ];
    let mut bad = Vec::new();
    for (n, side) in curves {
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let a = bif_amplitude(&m, n, side, 0.5, t).map_err(|e| e.to_string())?.amplitude;
            if a.is_nan() || a >= prev + 1e-12 {
                bad.push(format!("A_{n}^{side} at T={t:.4}"));
            }
            prev = a;
        }
    }
    ok &= bad.is_empty();
    check(
        ok,
        format!(
            "A0(T=1e-4)={a0:.6}, A1R(T=200)={a1:.6}, {} curves on 50 log points, monotonicity violations: {bad:?}",
            curves.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let m = pstar();
    let a0 = bif_amplitude(&m, 0, Side::Zero, 0.5, 2.0).map_err(|e| e.to_string())?.amplitude;
    let f = Forcing::new(10.0 / 3.0, 1.0, 0.2).unwrap();
    let sigma = boundary_sigma(&m, &f).map_err(|e| e.to_string())?.ok_or("no boundary")?.sigma;
    let sigma_oracle = oracle::sigma_one(10.0 / 3.0, 0.2);
    let f = Forcing::new(0.25, 2.0, 0.5).unwrap();
    let rest = fixed_point(&m, &f, 0).map_err(|e| e.to_string())?.ok_or("no fixed point")?;
    let rest_oracle = oracle::rest_point(0.25, 2.0, 0.5);
    check(
        (a0 - 0.48196).abs() <= 1e-5
            && (sigma - 0.361963).abs() <= 1e-6
            && (sigma - sigma_oracle).abs() <= 1e-6
            && (rest - rest_oracle).abs() <= 1e-6,
        format!(
            "A0={a0:.7}, Σ1={sigma:.7} (oracle {sigma_oracle:.7}), x̄0={rest:.7} (oracle {rest_oracle:.7}, printed 0.588772 differs by {:.1e})",
            (rest_oracle - 0.588772).abs()
        ),
    )
}

fn criterion_7() -> Outcome {
    let m = pstar();
    let (amp, d) = (10.0 / 3.0, 0.2);
    let (t_min, t_max, points) = (0.01, 40.0, 2000);
    let opts = SweepOptions {
        points,
        refine: true,
        ..Default::default()
    };
    let s = sweep_period(&m, &DoseMode::Width { amplitude: amp, duty: d }, t_min, t_max, &opts)
        .map_err(|e| e.to_string())?;
    let cell = (t_max - t_min) / (points - 1) as f64;
    let region: Vec<&StaircaseSample> = s.iter().filter(|x| x.contraction_ok).collect();
    let unconverged = region.iter().filter(|x| !x.converged).count();
    let eta_monotone = region.windows(2).all(|w| w[0].eta <= w[1].eta);
    let steps_decrease = region
        .windows(2)
        .filter(|w| w[0].eta == w[1].eta && w[0].eta > Ratio::from_integer(0))
        .all(|w| w[1].rate < w[0].rate);

    let l = rate_limits(&m, amp, d).map_err(|e| e.to_string())?;
    let best = region.iter().max_by(|a, b| a.rate.total_cmp(&b.rate)).unwrap();
    let first_one = region.iter().find(|x| x.eta == Ratio::from_integer(1)).unwrap();
    let at_edge = best.period == first_one.period;
    let near = (best.period - l.t1_r).abs() <= cell && (best.rate - 1.0 / l.t1_r).abs() <= 1.0 / l.t1_r - 1.0 / (l.t1_r + cell);

    let twenty: Vec<f64> = region
        .iter()
        .filter(|x| x.eta == Ratio::from_integer(20))
        .map(|x| x.period)
        .collect();
    let width = twenty.last().unwrap_or(&0.0) - twenty.first().unwrap_or(&0.0);
    let target = l.delta / d;
    let width_ok = rel(width, target) <= 0.10;
    check(
        eta_monotone && steps_decrease && unconverged == 0 && at_edge && near && width_ok,
        format!(
            "{} samples, {} contracting, {unconverged} unconverged; η nondecreasing: {eta_monotone}; steps decreasing: {steps_decrease}; \
             max rate {:.5} at T={:.4} (1/T1R={:.5}, T1R={:.4}, left edge of η=1: {at_edge}); η=20 width {width:.4} vs δ/d={target:.4}",
            s.len(),
            region.len(),
            best.rate,
            best.period,
            1.0 / l.t1_r,
            l.t1_r
        ),
    )
}

fn criterion_8() -> Outcome {
    let m = pstar();
    let opts = SweepOptions {
        points: 1000,
        refine: true,
        ..Default::default()
    };
    let s = sweep_period(&m, &DoseMode::Width { amplitude: 1.0, duty: 0.2 }, 1.5, 4.5, &opts)
        .map_err(|e| e.to_string())?;
    let report = verify_adding(&s, 3);
    let found: Vec<Ratio<u64>> = report
        .checks
        .iter()
        .filter(|c| c.band == 0 && c.ok())
        .map(|c| c.mediant_rho)
        .collect();
    let wanted = [Ratio::new(1, 2), Ratio::new(1, 3), Ratio::new(2, 3)];
    let all = wanted.iter().all(|r| found.contains(r));
    let listing: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{}+{}={}({})", c.left, c.right, c.mediant, if c.ok() { "ok" } else { "missing" }))
        .collect();
    check(
        all && report.is_clean(),
        format!(
            "A=1 d=0.2: {} checks, {} violations: {}",
            report.checks.len(),
            report.violations().count(),
            listing.join(" ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let lin = pstar();
    let gen = lin.as_generic();
    let mut rng = StdRng::seed_from_u64(9);
    let (mut flow_err, mut image_err, mut oracle_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut count_mismatch = 0;
    for _ in 0..10_000 {
        let x0: f64 = rng.random_range(0.0..1.0);
        let amp: f64 = rng.random_range(0.0..4.0);
        let period: f64 = rng.random_range(0.05..5.0);
        let d: f64 = rng.random_range(0.05..0.95);
        let t: f64 = rng.random_range(0.0..period);
        let fl = flow(&lin, amp, t, x0).map_err(|e| e.to_string())?;
        let fg = flow(&gen, amp, t, x0).map_err(|e| e.to_string())?;
        flow_err = flow_err.max((fl - fg).abs());
        oracle_err = oracle_err.max((fl - oracle::flow(amp, t, x0)).abs());
        let f = Forcing::new(amp, period, d).unwrap();
        let sl = strobe(&lin, &f, x0).map_err(|e| e.to_string())?;
        let sg = strobe(&gen, &f, x0).map_err(|e| e.to_string())?;
        if sl.spikes != sg.spikes {
            count_mismatch += 1;
        } else {
            image_err = image_err.max((sl.image - sg.image).abs());
        }
    }
    check(
        flow_err <= 1e-8 && image_err <= 1e-8 && count_mismatch == 0 && oracle_err <= 1e-12,
        format!(
            "10000 draws: max flow diff {flow_err:.2e}, max image diff {image_err:.2e}, spike-count mismatches {count_mismatch}, closed form vs oracle {oracle_err:.2e}"
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("out.csv");
    let mut argv = vec!["ifstrobe".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("-o".into());
    argv.push(path.to_string_lossy().into_owned());
    let code = ifstrobe::cli::run(argv);
    if code != 0 {
        return Err(format!("{args:?} exited with {code}"));
    }
    std::fs::read(&path).map_err(|e| e.to_string())
}

fn criterion_10() -> Outcome {
    let sweep = [
        "sweep", "--A", "3.3333333333", "--d", "0.2", "--tmin", "0.05", "--tmax", "12", "--n", "300", "--refine",
    ];
    let scan = [
        "scan", "--T", "2", "--dmin", "0.05", "--dmax", "0.95", "--nd", "20", "--invamin", "0.1", "--invamax", "3",
        "--ninva", "20",
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, args) in [("sweep", &sweep[..]), ("scan", &scan[..])] {
        let mut outputs = Vec::new();
        for w in ["1", "4", "16"] {
            let mut a = vec!["--workers", w];
            a.extend_from_slice(args);
            outputs.push(run_cli(&a)?);
        }
        let same = outputs.windows(2).all(|p| p[0] == p[1]) && !outputs[0].is_empty();
        ok &= same;
        parts.push(format!("{name}: {} bytes, identical across 1/4/16 workers: {same}", outputs[0].len()));
    }
    check(ok, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("critical dose and region partition", criterion_1),
        ("firing-rate limit values", criterion_2),
        ("asymptotic simulation agreement", criterion_3),
        ("amplitude correction", criterion_4),
        ("bifurcation asymptotics and monotonicity", criterion_5),
        ("hand-derived solver values", criterion_6),
        ("staircase properties", criterion_7),
        ("period adding", criterion_8),
        ("integrator against closed form", criterion_9),
        ("determinism across worker counts", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name} [{:.1}s] {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
