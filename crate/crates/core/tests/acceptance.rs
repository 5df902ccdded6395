//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use geoslice::bounds::{
    full_report, kappa, optimal_hyperparameters, q, rho, rho_hit_and_run, EpsilonMode, Regime, RhoInputs,
};
use geoslice::harness::binning::BinSpec;
use geoslice::harness::lemmas::{lemma_suite, lemma_suite_with, LemmaSizes};
use geoslice::harness::{invariance_test, verify_uniform_ergodicity, Verdict, VerifyPlan};
use geoslice::kernel::{run_chain, ChainPlan, GssConfig, JsonlSink};
use geoslice::manifold::unit_sphere_volume;
use geoslice::rng::stream;
use geoslice::{Point, StepBudget, Target};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn target(spec: &str) -> Target {
    spec.parse().unwrap_or_else(|e| panic!("{spec}: {e}"))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{name} = {got}, expected {want} within {tol:e}"))
}

/// Sphere example: analytic and corollary covering constants and rho.
fn sphere_constants() -> Check {
    for d in 1..=3 {
        let t = target(&format!("uniform:sphere:{d}"));
        let a = full_report(&t, StepBudget::Finite(1), TAU, EpsilonMode::Analytic, 0).map_err(|e| e.to_string())?;
        close(&format!("analytic epsilon on S^{d}"), a.epsilon, 1.0, 0.0)?;
        let c = full_report(&t, StepBudget::Finite(1), TAU, EpsilonMode::Corollary, 0).map_err(|e| e.to_string())?;
        close(&format!("corollary epsilon on S^{d}"), c.epsilon, 0.5, 1e-15)?;
    }
    let r1 = full_report(&target("uniform:sphere:1"), StepBudget::Finite(1), TAU, EpsilonMode::Analytic, 0)
        .map_err(|e| e.to_string())?
        .rho;
    let r2 = full_report(&target("uniform:sphere:2"), StepBudget::Finite(1), TAU, EpsilonMode::Analytic, 0)
        .map_err(|e| e.to_string())?
        .rho;
    close("rho(S^1)", r1, 0.5, 1e-12)?;
    close("rho(S^2)", r2, 1.0 - 1.0 / PI, 1e-12)?;
    Ok(format!("eps = 1 (analytic), 1/2 (corollary); rho(S^1) = {r1}, rho(S^2) = {r2}"))
}

/// Hit-and-run on the unit disk.
fn hit_and_run() -> Check {
    let h = rho_hit_and_run(PI, 2.0, 2).map_err(|e| e.to_string())?;
    close("rho_hit_and_run(unit disk)", h, 0.875, 1e-15)?;
    let general = rho(&RhoInputs {
        epsilon: 1.0,
        m: StepBudget::Unbounded,
        w: 0.37,
        lambda: Some(2.0),
        kappa: kappa(0.0, 2.0, 2).map_err(|e| e.to_string())?,
        omega_dm1: unit_sphere_volume(1),
        sup_t_level: PI,
        p_max: 1.0,
    })
    .map_err(|e| e.to_string())?;
    close("general rho", general, h, 1e-14)?;
    let report = full_report(
        &target("convex-uniform:ball:2:r=1"),
        StepBudget::Unbounded,
        0.37,
        EpsilonMode::Analytic,
        0,
    )
    .map_err(|e| e.to_string())?;
    close("report rho", report.rho, h, 1e-14)?;
    Ok(format!("rho = {h}, general formula agrees to {:.1e}", (general - h).abs()))
}

/// Best `q` over `m in {1..64} + {inf}` on a `w` grid; `None` if infeasible everywhere.
fn grid_search(diam: f64, delta: f64, lambda: Option<f64>, ws: &[f64], with_inf: bool) -> Option<(f64, StepBudget, f64)> {
    let mut ms: Vec<StepBudget> = (1..=64).map(StepBudget::Finite).collect();
    if with_inf {
        ms.push(StepBudget::Unbounded);
    }
    let mut best: Option<(f64, StepBudget, f64)> = None;
    for &m in &ms {
        for &w in ws {
            if let Ok(v) = q(m, w, diam, delta, lambda) {
                if best.is_none_or(|b| v > b.0) {
                    best = Some((v, m, w));
                }
            }
        }
    }
    best
}

/// Hyperparameter optimum and regime classification.
fn hyperparameters() -> Check {
    let grid_points = 10_000;
    let mut rng = stream(3, 0);
    for _ in 0..5 {
        let diam: f64 = rng.random_range(0.2..5.0);
        let delta = diam * rng.random_range(0.01..0.5);
        let ws: Vec<f64> = (1..=grid_points).map(|k| 8.0 * diam * k as f64 / grid_points as f64).collect();
        let (best, m, w) = grid_search(diam, delta, None, &ws, false).ok_or("no feasible grid point")?;
        ensure(m == StepBudget::Finite(1), format!("grid optimum at m = {m}, expected 1"))?;
        close("argmax w / diam", w / diam, 2.0, 8.0 / grid_points as f64)?;
        close("max q * 4 diam", best * 4.0 * diam, 1.0, 1e-6)?;
        let opt = optimal_hyperparameters(diam, delta, None).map_err(|e| e.to_string())?;
        ensure(opt.q >= best, "closed-form optimum below a grid point")?;
        close("closed-form q", opt.q, 1.0 / (4.0 * diam), 1e-15)?;
    }
    // Random triples over all four regimes.
    let mut seen = [0usize; 4];
    for _ in 0..100 {
        let diam: f64 = rng.random_range(0.2..5.0);
        let delta = if rng.random_bool(0.2) { 0.0 } else { diam * rng.random_range(0.0..0.5) };
        let lambda = match rng.random_range(0..4) {
            0 => None,
            _ => Some(diam * rng.random_range(0.05..8.0)),
        };
        let expected = match lambda {
            None => Regime::A,
            Some(l) if l > 4.0 * diam => Regime::C,
            Some(l) if l > 2.0 * diam => Regime::B,
            Some(_) => Regime::D,
        };
        let opt = optimal_hyperparameters(diam, delta, lambda).map_err(|e| e.to_string())?;
        ensure(
            opt.regime == expected,
            format!("diam {diam}, lambda {lambda:?}: regime {} expected {expected}", opt.regime),
        )?;
        seen[expected as usize] += 1;
        let ws: Vec<f64> = (0..grid_points)
            .map(|k| diam * (1e-2f64).powf(1.0 - k as f64 / (grid_points - 1) as f64) * 1e4f64.powf(k as f64 / (grid_points - 1) as f64))
            .collect();
        let (best, m, _) = grid_search(diam, delta, lambda, &ws, lambda.is_some()).ok_or("no feasible grid point")?;
        ensure(opt.q >= best * (1.0 - 1e-12), format!("grid beats optimum: {best} > {}", opt.q))?;
        ensure(best >= opt.q * (1.0 - 1e-3), format!("grid {best} far below optimum {}", opt.q))?;
        let unbounded_wins = matches!(expected, Regime::B | Regime::D);
        // With delta = 0 every finite m with m w = 2 diam ties, so only delta > 0 pins m = 1.
        if !unbounded_wins && delta > 0.0 {
            ensure(m == StepBudget::Finite(1), format!("regime {expected}: grid optimum at m = {m}"))?;
        }
    }
    ensure(seen.iter().all(|&c| c > 0), format!("not every regime sampled: {seen:?}"))?;
    Ok(format!("max q = 1/(4 diam) at m = 1, w = 2 diam; regimes a/b/c/d sampled {seen:?}"))
}

fn verify(spec: &str, m: StepBudget, w: f64, n_list: Vec<u64>, mode: EpsilonMode, seed: u64, expect_rho: f64) -> Check {
    let t = target(spec);
    let x0: Point = t.default_start().map_err(|e| e.to_string())?;
    let cfg = GssConfig::new(t, w, m, seed).map_err(|e| e.to_string())?;
    let plan = VerifyPlan {
        n_list,
        replicates: 100_000,
        epsilon_mode: mode,
        bins: BinSpec::default(),
    };
    let curve = verify_uniform_ergodicity(&cfg, &x0, &plan).map_err(|e| e.to_string())?;
    close("rho", curve.bounds.rho, expect_rho, 1e-5)?;
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("n={} tv={:.4}+-{:.4} (env {:.4})", p.n, p.tv, p.se, p.envelope))
        .collect();
    ensure(curve.verdict == Verdict::Pass, format!("verdict {}: {}", curve.verdict, pts.join(", ")))?;
    Ok(format!("start {:?}; {}", x0.0, pts.join(", ")))
}

fn circle_exact() -> Check {
    let t = target("uniform:sphere:1");
    let cfg = GssConfig::new(t, TAU, StepBudget::Finite(1), 41).map_err(|e| e.to_string())?;
    let plan = VerifyPlan {
        n_list: vec![1],
        replicates: 100_000,
        epsilon_mode: EpsilonMode::Analytic,
        bins: BinSpec::default(),
    };
    let curve = verify_uniform_ergodicity(&cfg, &Point(vec![-0.6, 0.8]), &plan).map_err(|e| e.to_string())?;
    let p = curve.points[0];
    ensure(p.tv <= p.bias + 3.0 * p.se, format!("tv {} above bias {} + 3 se {}", p.tv, p.bias, p.se))?;
    ensure(p.tv <= 0.5, "tv above rho")?;
    ensure(curve.verdict == Verdict::Pass, format!("verdict {}", curve.verdict))?;
    Ok(format!("tv = {:.5} +- {:.5}, bias {:.5}, rho = {}", p.tv, p.se, p.bias, curve.bounds.rho))
}

fn lemmas() -> Check {
    let report = lemma_suite(20_240_601).map_err(|e| e.to_string())?;
    let failed: Vec<String> = report
        .entries
        .iter()
        .filter(|e| !e.pass)
        .map(|e| format!("{} [{}]: {}", e.check, e.config, e.detail))
        .collect();
    ensure(failed.is_empty(), failed.join("; "))?;
    Ok(format!("{} checks passed", report.entries.len()))
}

fn invariance() -> Check {
    let samples = 100_000;
    let mut notes = Vec::new();
    for (spec, w, m) in [
        ("uniform:sphere:2", 1.0, StepBudget::Finite(3)),
        ("vmf:sphere:2:kappa=2:mu=0,0,1", TAU, StepBudget::Finite(1)),
        ("cap:sphere:2:colat=1.5707963267948966", TAU, StepBudget::Finite(1)),
        ("convex-uniform:ball:2:r=1", 0.7, StepBudget::Unbounded),
    ] {
        let cfg = GssConfig::new(target(spec), w, m, 8).map_err(|e| e.to_string())?;
        let r = invariance_test(&cfg, samples).map_err(|e| e.to_string())?;
        ensure(r.pass, format!("{spec}: p = {:e}", r.test.p_value))?;
        notes.push(format!("{spec} p={:.3}", r.test.p_value));
    }
    let broken = GssConfig::new(target("vmf:sphere:2:kappa=2:mu=0,0,1"), TAU, StepBudget::Finite(1), 8)
        .map_err(|e| e.to_string())?
        .with_broken_shrinkage();
    let r = invariance_test(&broken, samples).map_err(|e| e.to_string())?;
    ensure(r.test.p_value < 1e-6, format!("broken kernel not detected: p = {:e}", r.test.p_value))?;
    notes.push(format!("broken kernel p={:.1e}", r.test.p_value));
    Ok(notes.join(", "))
}

/// Every artifact of a small run, as bytes.
fn artifacts(threads: usize) -> Result<Vec<Vec<u8>>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| -> Result<Vec<Vec<u8>>, String> {
        let mut out = Vec::new();
        let vmf = GssConfig::new(target("vmf:sphere:2:kappa=2:mu=0,0,1"), TAU, StepBudget::Finite(1), 99)
            .map_err(|e| e.to_string())?;
        let mut sink = JsonlSink::new(Vec::new());
        let plan = ChainPlan {
            n: 500,
            burn_in: 10,
            thin: 3,
        };
        run_chain(&vmf.target.default_start().unwrap(), plan, &vmf, "acceptance", &mut sink).map_err(|e| e.to_string())?;
        out.push(sink.into_inner());

        let disk = target("convex-uniform:ball:2:r=1");
        let report = full_report(&disk, StepBudget::Finite(4), 1.5, EpsilonMode::MonteCarlo { probes: 32, draws: 500 }, 5)
            .map_err(|e| e.to_string())?;
        out.push(report.to_text().into_bytes());

        let cap = GssConfig::new(target("cap:sphere:2:colat=1"), TAU, StepBudget::Finite(1), 12).map_err(|e| e.to_string())?;
        let plan = VerifyPlan {
            n_list: vec![1, 4],
            replicates: 5_000,
            epsilon_mode: EpsilonMode::Corollary,
            bins: BinSpec::default(),
        };
        let curve = verify_uniform_ergodicity(&cap, &cap.target.default_start().unwrap(), &plan).map_err(|e| e.to_string())?;
        out.push(curve.to_csv(&["acceptance".into()]).into_bytes());

        let inv = invariance_test(&vmf, 3_000).map_err(|e| e.to_string())?;
        out.push(serde_json::to_vec(&inv).map_err(|e| e.to_string())?);

        let sizes = LemmaSizes {
            covering_fixed: 10_000,
            covering_random: 2_000,
            covering_grid: 2_000,
            equivariance_fixed: 2_000,
            equivariance_random: 1_000,
            interchange_fixed: 10_000,
            interchange_random: 2_000,
            convergence: 1_000,
            shrinkage: 2_000,
        };
        out.push(lemma_suite_with(4, sizes).map_err(|e| e.to_string())?.to_text().into_bytes());
        Ok(out)
    })
}

fn determinism() -> Check {
    let a = artifacts(1)?;
    let b = artifacts(1)?;
    let c = artifacts(8)?;
    let names = ["chain", "bounds", "tv curve", "invariance", "lemmas"];
    for (k, name) in names.iter().enumerate() {
        ensure(a[k] == b[k], format!("{name}: two runs differ"))?;
        ensure(a[k] == c[k], format!("{name}: 1 vs 8 threads differ"))?;
    }
    Ok(format!("{} artifacts bit-identical across runs and thread counts 1/8", names.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("sphere constants", sphere_constants),
        ("hit-and-run constant", hit_and_run),
        ("hyperparameter optimum", hyperparameters),
        ("TV bound, circle", circle_exact),
        (
            "TV bound, hemisphere cap",
            || {
                verify(
                    "cap:sphere:2:colat=1.5707963267948966",
                    StepBudget::Finite(1),
                    TAU,
                    vec![1, 5, 10, 20],
                    EpsilonMode::Corollary,
                    51,
                    0.92042,
                )
            },
        ),
        (
            "TV bound, unit disk",
            || {
                verify(
                    "convex-uniform:ball:2:r=1",
                    StepBudget::Unbounded,
                    1.0,
                    vec![1, 3, 5],
                    EpsilonMode::Analytic,
                    61,
                    0.875,
                )
            },
        ),
        ("lemma suite", lemmas),
        ("invariance", invariance),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
