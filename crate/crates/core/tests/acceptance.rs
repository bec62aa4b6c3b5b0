//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfmm::experiments::{self, ExperimentConfig};
use cfmm::market::{FeeSchedule, LinearUtility, Pool, Trade};
use cfmm::notrade::in_no_trade_region;
use cfmm::optimality::{verify_system, Verdict, VerifyOptions};
use cfmm::oracle::{grid_solve, GridSpec};
use cfmm::solver::{solve, SolveStatus, SolverOptions};
use cfmm::special::w0;
use cfmm::trade_function::{
    certify_quasilinear_level_set, midpoint_gap, probe_convexity, MeanGenerator, SamplingBox, TradeFunction,
    WeightVector,
};

use common::{config_path, fixture_path, load_witness_fixture, TRADE_FUNCTIONS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion_1() -> Outcome {
    const EXPECTED: [f64; 6] = [0.13937573, 0.44068816, 0.28010876, 0.80312261, 1.20524975, 1.0];
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&config_path("qm")).unwrap();
    let rep = experiments::run_prices(&cfg).unwrap();
    let elapsed = start.elapsed();
    let err = rep.analytic.iter().zip(EXPECTED).fold(0.0_f64, |m, (a, e)| m.max((a - e).abs()));
    let fd_err = rep.forward_difference.iter().zip(EXPECTED).fold(0.0_f64, |m, (a, e)| m.max((a - e).abs()));
    outcome(
        err <= 1e-4 && fd_err <= 1e-4 && within(elapsed, 1.0),
        format!("max |p - ref| = {err:.2e}, forward difference {fd_err:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for tf in TRADE_FUNCTIONS {
        let start = Instant::now();
        let cfg = ExperimentConfig::load(&config_path(tf)).unwrap();
        let sweep = experiments::run_sweep1d(&cfg).unwrap();
        let elapsed = start.elapsed();
        // Grid t_k = 0.5 + 0.01 k; 0.9 <= t_k <= 1/0.9 exactly when 40 <= k <= 61.
        let closed: Vec<usize> = (0..sweep.rows.len()).filter(|&k| sweep.rows[k].no_trade_closed_form).collect();
        let expected: Vec<usize> = (40..=61).collect();
        let disagree = sweep.disagreements();
        let adjacent = disagree.iter().all(|&k| [39, 40, 41, 60, 61, 62].contains(&k));
        let ok = sweep.rows.len() == 151 && closed == expected && disagree.len() <= 2 && adjacent && within(elapsed, 300.0);
        pass &= ok;
        parts.push(format!(
            "{tf}: {} closed-form points, {} disagreements, {:.1} s",
            closed.len(),
            disagree.len(),
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn random_trade_function(rng: &mut ChaCha8Rng, n: usize) -> TradeFunction<f64> {
    match rng.random_range(0..3) {
        0 => TradeFunction::arithmetic(n).unwrap(),
        1 => TradeFunction::geometric(n).unwrap(),
        _ => TradeFunction::power_log(2.0, n).unwrap(),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = 1e-9;
    let (mut agree, mut inside) = (0, 0);
    let total = 1000;
    let mut first_mismatch = None;
    for k in 0..total {
        let n = rng.random_range(2..=6);
        let r: Vec<f64> = (0..n).map(|_| 0.1 + 20.0 * rng.random::<f64>()).collect();
        let gamma: Vec<f64> = (0..n).map(|_| 0.5 + 0.49 * rng.random::<f64>()).collect();
        let pool = Pool::new(r, FeeSchedule::new(gamma).unwrap(), random_trade_function(&mut rng, n)).unwrap();
        let p = pool.prices().unwrap();
        let pi: Vec<f64> = if rng.random_bool(0.5) {
            p.iter().map(|&v| v * (0.25 * (rng.random::<f64>() - 0.5)).exp()).collect()
        } else {
            let mut v: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect();
            v[rng.random_range(0..n)] += 0.1;
            v
        };
        let u = LinearUtility::new(pi).unwrap();
        let (closed, _) = in_no_trade_region(&pool, &u, tol).unwrap();
        let rep = verify_system(&pool, &u, &Trade::zero(n), &VerifyOptions::new(tol)).unwrap();
        let verified = rep.verdict == Verdict::Verified;
        inside += closed as usize;
        if closed == verified {
            agree += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some(k);
        }
    }
    outcome(
        agree == total,
        format!("{agree}/{total} agree ({inside} inside the region), first mismatch {first_mismatch:?}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let resolution = 1e-3;
    let y_cap_multiple = 1.0;
    let barrier = 1e-9;
    let (mut lost, mut unverified, mut converged, mut count) = (0, 0, 0, 0);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_verify = 0.0_f64;
    for family in ["gm", "qm"] {
        for _ in 0..50 {
            let r: Vec<f64> = (0..2).map(|_| 1.0 + 4.0 * rng.random::<f64>()).collect();
            let gamma: Vec<f64> = (0..2).map(|_| 0.5 + 0.49 * rng.random::<f64>()).collect();
            let tf = if family == "gm" { TradeFunction::geometric(2) } else { TradeFunction::power_log(2.0, 2) }.unwrap();
            let pool = Pool::new(r, FeeSchedule::new(gamma.clone()).unwrap(), tf).unwrap();
            let p = pool.prices().unwrap();
            let pi: Vec<f64> = p.iter().map(|&v| v * (1.4 * (rng.random::<f64>() - 0.5)).exp()).collect();
            let u = LinearUtility::new(pi.clone()).unwrap();
            let opts = SolverOptions { multistart_count: 8, seed: count as u64, y_cap_multiple, ..SolverOptions::default() };
            let res = solve(&pool, &u, &opts).unwrap();
            let spec = GridSpec::for_pool(&pool, resolution, y_cap_multiple, barrier);
            let grid = grid_solve(&pool, &u, &spec).unwrap();
            let lipschitz = pi.iter().sum::<f64>() * (1.0 + gamma.iter().copied().fold(0.0, f64::max));
            let gap = grid.result.objective - res.objective;
            worst_gap = worst_gap.max(gap);
            if gap > lipschitz * resolution {
                lost += 1;
            }
            if res.status == SolveStatus::Converged {
                converged += 1;
                let rep = verify_system(&pool, &u, &res.trade, &VerifyOptions::new(1e-5)).unwrap();
                worst_verify = worst_verify.max(rep.max_residual);
                if rep.verdict != Verdict::Verified {
                    unverified += 1;
                }
            }
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        lost == 0 && unverified == 0 && within(elapsed, 600.0),
        format!(
            "{count} instances: {lost} lose to the grid (worst oracle - solver = {worst_gap:.2e}), \
             {converged} converged with {unverified} unverified (worst residual {worst_verify:.2e}), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5_level_set() -> Outcome {
    let bounds = SamplingBox::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, tf) in common::six_asset_functions() {
        let rep = certify_quasilinear_level_set(&tf, 500, 5, 1e-6, &bounds);
        let ok = rep.checked > 0 && rep.max_residual <= 1e-6;
        pass &= ok;
        parts.push(format!("{name}: max residual {:.2e} over {} trials", rep.max_residual, rep.checked));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_5_convexity() -> Outcome {
    let bounds = SamplingBox::default();
    let qm = TradeFunction::power_log(2.0, 6).unwrap();
    let gm = TradeFunction::geometric(6).unwrap();
    let probe = probe_convexity(&qm, 10_000, common::PROBE_SEED, &bounds);
    let gm_probe = probe_convexity(&gm, 10_000, common::PROBE_SEED, &bounds);
    let fresh = probe.convexity_witness.is_some() && probe.concavity_witness.is_some();
    let fixture_ok = match load_witness_fixture(&fixture_path()) {
        Ok((convex, concave)) => {
            let above = midpoint_gap(&qm, &convex.0, &convex.1).is_some_and(|(m, a)| m > a);
            let below = midpoint_gap(&qm, &concave.0, &concave.1).is_some_and(|(m, a)| m < a);
            above && below
        }
        Err(_) => false,
    };
    outcome(
        fresh && fixture_ok && gm_probe.concavity_violations == 0,
        format!(
            "qm: {} convexity and {} concavity violations, fixture witnesses {}; gm: {} concavity violations",
            probe.convexity_violations,
            probe.concavity_violations,
            if fixture_ok { "reproduce" } else { "missing or stale" },
            gm_probe.concavity_violations
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let branch = -(-1.0_f64).exp();
    let mut w_err = 0.0_f64;
    for k in 0..10_000 {
        let u = match k % 4 {
            0 => branch * rng.random::<f64>(),
            1 => branch + 1e-3 * rng.random::<f64>(),
            2 => 10f64.powf(-8.0 + 16.0 * rng.random::<f64>()),
            _ => 10f64.powf(300.0 * rng.random::<f64>()),
        };
        let w = w0(u).unwrap();
        w_err = w_err.max((w * w.exp() - u).abs() / u.abs());
    }

    let mut grad_err = 0.0_f64;
    let mut bound_violations = 0;
    let mut functions = common::six_asset_functions();
    functions.push((
        "exp_shift",
        TradeFunction::quasi_arithmetic(MeanGenerator::ExpShift { p: 2.0 }, WeightVector::equal(6)).unwrap(),
    ));
    functions.push(("linear_exp", TradeFunction::quasi_arithmetic(MeanGenerator::LinearExp, WeightVector::equal(6)).unwrap()));
    for (name, tf) in &functions {
        let width = if *name == "linear_exp" { 5.0 } else { 20.0 };
        for _ in 0..1000 {
            let x: Vec<f64> = (0..6).map(|_| 0.05 + width * rng.random::<f64>()).collect();
            let g = tf.gradient(&x).unwrap();
            for i in 0..6 {
                // Five-point central stencil.
                let h = f64::EPSILON.powf(0.2) * x[i];
                let at = |d: f64| {
                    let mut y = x.clone();
                    y[i] += d;
                    tf.eval(&y).unwrap()
                };
                let fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
                grad_err = grad_err.max((fd - g[i]).abs() / g[i].abs());
            }
            let phi = tf.eval(&x).unwrap();
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(0.0, f64::max);
            let slack = 8.0 * f64::EPSILON * hi;
            if phi < lo - slack || phi > hi + slack {
                bound_violations += 1;
            }
        }
    }
    outcome(
        w_err <= 1e-12 && grad_err <= 1e-6 && bound_violations == 0,
        format!(
            "Lambert W relative residual {w_err:.2e}; gradient vs central difference {grad_err:.2e}; \
             {bound_violations} mean-bound violations"
        ),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cfmm")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for tf in TRADE_FUNCTIONS {
        let config = config_path(tf);
        let cfg_str = config.to_str().unwrap();
        for sweep in ["sweep1d", "sweep2d"] {
            let mut outputs = Vec::new();
            for run in 0..2 {
                let out = dir.path().join(format!("{tf}_{sweep}_{run}"));
                let ok = run_cli(&[sweep, "--config", cfg_str, "--out", out.to_str().unwrap()]);
                let csv = out.join(format!("six_asset_{tf}_{sweep}.csv"));
                outputs.push(if ok { std::fs::read(&csv).ok() } else { None });
            }
            total += 1;
            match (&outputs[0], &outputs[1]) {
                (Some(a), Some(b)) if a == b => identical += 1,
                _ => failures.push(format!("{tf} {sweep}")),
            }
        }
        // A seeded multistart solve must repeat too.
        let mut cfg = ExperimentConfig::load(&config).unwrap();
        cfg.solver.multistart_count = 6;
        let pool = cfg.pool().unwrap();
        let a = experiments::solve_point(&cfg, &pool, 0.6, Some(1.7)).unwrap();
        let b = experiments::solve_point(&cfg, &pool, 0.6, Some(1.7)).unwrap();
        total += 1;
        if a == b {
            identical += 1;
        } else {
            failures.push(format!("{tf} multistart solve"));
        }
    }
    outcome(identical == total, format!("{identical}/{total} reruns identical {failures:?}"))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 price reproduction", criterion_1),
        ("2 no-trade interval in the 1-D sweep", criterion_2),
        ("3 zero-trade optimality equivalence", criterion_3),
        ("4 oracle equivalence", criterion_4),
        ("5a quasilinear level-set residual", criterion_5_level_set),
        ("5b convexity and concavity witnesses", criterion_5_convexity),
        ("6 numerical kernels", criterion_6),
        ("7 determinism", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let Outcome { pass, detail } = run();
        println!("criterion {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        failed += !pass as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion checks failed");
        ExitCode::FAILURE
    }
}
