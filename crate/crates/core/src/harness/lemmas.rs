//! Monte-Carlo checks of the one-dimensional building blocks: the covering
//! probability of stepping-out, its reflection equivariance and interchange
//! symmetry, its convergence as `m -> inf`, and the mass lower bound of
//! reeled shrinkage.
//!
//! Each check runs on one fixed configuration and five randomised ones; every
//! entry records its seed so it can be replayed.

use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::Serialize;

use super::energy::{energy_test, ALPHA, DEFAULT_PERMUTATIONS};
use crate::error::Result;
use crate::manifold::Point;
use crate::rng::{stream, subseed};
use crate::slice1d::{
    covering_bound, estimate_covering_probability, reeled_shrinkage, shrinkage_mass_bound, stepping_out_from,
    IntervalSet, StepBudget, StepOutParams, DEFAULT_MAX_SHRINK_ITERS,
};

pub const RANDOM_CONFIGS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaEntry {
    /// Which property is checked.
    pub check: String,
    pub config: String,
    pub seed: u64,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub entries: Vec<LemmaEntry>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn passed(&self, check: &str) -> bool {
        self.entries.iter().filter(|e| e.check == check).all(|e| e.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lemma suite, seed {}", self.seed);
        for e in &self.entries {
            let _ = writeln!(
                s,
                "[{}] {} | {} | {} | seed {}",
                if e.pass { "PASS" } else { "FAIL" },
                e.check,
                e.config,
                e.detail,
                e.seed
            );
        }
        let _ = writeln!(s, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        s
    }
}

/// Sample sizes of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaSizes {
    pub covering_fixed: usize,
    pub covering_random: usize,
    pub covering_grid: usize,
    pub equivariance_fixed: usize,
    pub equivariance_random: usize,
    pub interchange_fixed: usize,
    pub interchange_random: usize,
    pub convergence: usize,
    pub shrinkage: usize,
}

impl Default for LemmaSizes {
    fn default() -> Self {
        LemmaSizes {
            covering_fixed: 1_000_000,
            covering_random: 100_000,
            covering_grid: 100_000,
            equivariance_fixed: 100_000,
            equivariance_random: 20_000,
            interchange_fixed: 1_000_000,
            interchange_random: 1_000_000,
            convergence: 20_000,
            shrinkage: 100_000,
        }
    }
}

pub const COVERING: &str = "covering probability";
pub const EQUIVARIANCE: &str = "reflection equivariance";
pub const INTERCHANGE: &str = "interchange symmetry";
pub const CONVERGENCE: &str = "convergence as m -> inf";
pub const SHRINKAGE: &str = "shrinkage mass bound";

/// Runs the full battery with default sample sizes.
pub fn lemma_suite(seed: u64) -> Result<LemmaReport> {
    lemma_suite_with(seed, LemmaSizes::default())
}

pub fn lemma_suite_with(seed: u64, sizes: LemmaSizes) -> Result<LemmaReport> {
    let mut entries = Vec::new();
    let fixed = IntervalSet::new(vec![(-1.0, 0.3), (0.5, 1.0)])?;

    // Covering probability versus its closed-form lower bound.
    let s = subseed(seed, "covering-fixed");
    entries.push(covering_check(&fixed, 0.0, StepBudget::Finite(3), 1.0, sizes.covering_fixed, Some(sizes.covering_grid), s)?);
    for k in 0..RANDOM_CONFIGS {
        let s = subseed(seed, &format!("covering-{k}"));
        let mut rng = stream(s, u64::MAX);
        let set = random_set(&mut rng, -2.0, 2.0);
        let theta = point_in(&set, &mut rng);
        let m = random_budget(&mut rng);
        let b = set.sup();
        let span = match m {
            StepBudget::Finite(m) => (b - theta) / m as f64,
            StepBudget::Unbounded => 0.0,
        };
        let gap = if m.at_least(2) { set.gap_within(theta, b) } else { 0.0 };
        let w = span + gap + rng.random_range(0.2..1.5);
        entries.push(covering_check(&set, theta, m, w, sizes.covering_random, None, s)?);
    }

    // Reflection equivariance.
    let s = subseed(seed, "equivariance-fixed");
    entries.push(equivariance_check(&fixed, 0.1, 0.4, StepBudget::Finite(3), 0.8, sizes.equivariance_fixed, s)?);
    for k in 0..RANDOM_CONFIGS {
        let s = subseed(seed, &format!("equivariance-{k}"));
        let mut rng = stream(s, u64::MAX);
        let set = random_set(&mut rng, -2.0, 2.0);
        let alpha = rng.random_range(-1.0..1.0);
        let theta = 2.0 * alpha - point_in(&set, &mut rng);
        let m = random_budget(&mut rng);
        let w = rng.random_range(0.3..2.0);
        entries.push(equivariance_check(&set, theta, alpha, m, w, sizes.equivariance_random, s)?);
    }

    // Interchange symmetry of coverage.
    let s = subseed(seed, "interchange-fixed");
    entries.push(interchange_check(&fixed, 0.0, 0.8, StepBudget::Finite(3), 1.0, sizes.interchange_fixed, s)?);
    for k in 0..RANDOM_CONFIGS {
        let s = subseed(seed, &format!("interchange-{k}"));
        let mut rng = stream(s, u64::MAX);
        let set = random_set(&mut rng, -2.0, 2.0);
        let theta = point_in(&set, &mut rng);
        let alpha = point_in(&set, &mut rng);
        let m = random_budget(&mut rng);
        let w = rng.random_range(0.3..2.0);
        entries.push(interchange_check(&set, theta, alpha, m, w, sizes.interchange_random, s)?);
    }

    // Convergence of the interval law as m grows.
    let s = subseed(seed, "convergence-fixed");
    let conv_fixed = IntervalSet::new(vec![(-0.6, 0.1), (0.3, 0.8)])?;
    entries.push(convergence_check(&conv_fixed, 0.0, 1.0, sizes.convergence, s)?);
    for k in 0..RANDOM_CONFIGS {
        let s = subseed(seed, &format!("convergence-{k}"));
        let mut rng = stream(s, u64::MAX);
        let w = rng.random_range(0.5..2.0);
        let set = random_set(&mut rng, -0.75 * w, 0.75 * w);
        let theta = point_in(&set, &mut rng);
        entries.push(convergence_check(&set, theta, w, sizes.convergence, s)?);
    }

    // Reeled shrinkage mass lower bound.
    let s = subseed(seed, "shrinkage-fixed");
    let shifted = IntervalSet::new(vec![(-0.1, 0.1), (0.7, 0.9)])?;
    entries.push(shrinkage_check(&shifted, -0.1, 0.9, (0.7, 0.9), sizes.shrinkage, s)?);
    for k in 0..RANDOM_CONFIGS {
        let s = subseed(seed, &format!("shrinkage-{k}"));
        let mut rng = stream(s, u64::MAX);
        let lo = rng.random_range(-1.5..-0.2);
        let hi = rng.random_range(0.2..1.5);
        let a = rng.random_range(0.02..0.15);
        let mut parts = vec![(-a, a)];
        for _ in 0..rng.random_range(1..=3) {
            let c = rng.random_range(lo..hi);
            parts.push((c, (c + rng.random_range(0.02..0.3_f64)).min(hi)));
        }
        parts.retain(|(x, y)| x < y);
        let set = IntervalSet::new(parts)?;
        let x = rng.random_range(lo..hi);
        let region = (x, (x + rng.random_range(0.05..0.6_f64)).min(hi));
        entries.push(shrinkage_check(&set, lo, hi, region, sizes.shrinkage, s)?);
    }

    Ok(LemmaReport { seed, entries })
}

fn random_set(rng: &mut dyn RngCore, lo: f64, hi: f64) -> IntervalSet {
    loop {
        let k = rng.random_range(2..=3);
        let mut cuts: Vec<f64> = (0..2 * k).map(|_| rng.random_range(lo..hi)).collect();
        cuts.sort_by(f64::total_cmp);
        let parts: Vec<(f64, f64)> = cuts.chunks(2).map(|c| (c[0], c[1])).filter(|(a, b)| b - a > 0.02).collect();
        if let Ok(set) = IntervalSet::new(parts) {
            if !set.is_empty() {
                return set;
            }
        }
    }
}

fn point_in(set: &IntervalSet, rng: &mut dyn RngCore) -> f64 {
    loop {
        let x = rng.random_range(set.inf()..set.sup());
        if set.contains(x) {
            return x;
        }
    }
}

fn random_budget(rng: &mut dyn RngCore) -> StepBudget {
    match rng.random_range(0..5) {
        0 => StepBudget::Finite(1),
        1 => StepBudget::Finite(2),
        2 => StepBudget::Finite(3),
        3 => StepBudget::Finite(5),
        _ => StepBudget::Unbounded,
    }
}

fn describe(set: &IntervalSet, m: StepBudget, w: f64) -> String {
    format!("S = {set}, m = {m}, w = {w:.4}")
}

/// Stepping-out with the offset `upsilon` and split `j` fixed, from `theta`.
fn stepping_out_fixed(set: &IntervalSet, theta: f64, upsilon: f64, j: u64, m: u64, w: f64) -> (f64, f64) {
    let left = |i: u64| theta - upsilon - (i - 1) as f64 * w;
    let right = |i: u64| theta - upsilon + i as f64 * w;
    let mut i = 1;
    while i < j && set.contains(left(i)) {
        i += 1;
    }
    let mut k = 1;
    while k < m + 1 - j && set.contains(right(k)) {
        k += 1;
    }
    (left(i), right(k))
}

/// Exact covering probability for finite `m`, by midpoint quadrature over
/// the offset and summation over the split.
fn covering_exact(set: &IntervalSet, theta: f64, m: u64, w: f64, grid: usize) -> f64 {
    let b = set.sup_within(theta, f64::INFINITY).unwrap_or(theta);
    let mut hits = 0u64;
    for g in 0..grid {
        let upsilon = w * (g as f64 + 0.5) / grid as f64;
        for j in 1..=m {
            if stepping_out_fixed(set, theta, upsilon, j, m, w).1 >= b {
                hits += 1;
            }
        }
    }
    hits as f64 / (grid as u64 * m) as f64
}

fn covering_check(
    set: &IntervalSet,
    theta: f64,
    m: StepBudget,
    w: f64,
    n: usize,
    grid: Option<usize>,
    seed: u64,
) -> Result<LemmaEntry> {
    let b = set.sup_within(theta, f64::INFINITY).unwrap_or(theta);
    let delta = set.gap_within(theta, b);
    let bound = covering_bound(b, theta, delta, m, w)?;
    let params = StepOutParams::new(w, m)?;
    let (p, se) = estimate_covering_probability(set, theta, f64::INFINITY, &params, n, &mut stream(seed, 0))?;
    let mut pass = p >= bound - 3.0 * se;
    let mut detail = format!("estimate {p:.5} +- {se:.5} vs bound {bound:.5}");
    if let (Some(grid), StepBudget::Finite(mf)) = (grid, m) {
        let exact = covering_exact(set, theta, mf, w, grid);
        let tol = 3.0 * se + 1.0 / grid as f64;
        pass &= (p - exact).abs() <= tol && exact >= bound;
        let _ = write!(detail, ", exact {exact:.5}");
    }
    Ok(LemmaEntry {
        check: COVERING.into(),
        config: format!("{}, theta = {theta:.4}", describe(set, m, w)),
        seed,
        detail,
        pass,
    })
}

fn intervals(set: &IntervalSet, start: f64, params: &StepOutParams, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = stream(seed, 0);
    (0..n)
        .map(|_| stepping_out_from(start, |t: f64| set.contains(t), params, &mut rng).map(|iv| (iv.lo, iv.hi)))
        .collect()
}

fn as_points(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(a, b)| Point(vec![a, b])).collect()
}

fn equivariance_check(
    set: &IntervalSet,
    theta: f64,
    alpha: f64,
    m: StepBudget,
    w: f64,
    n: usize,
    seed: u64,
) -> Result<LemmaEntry> {
    let params = StepOutParams::new(w, m)?;
    let reflected = set.reflect(2.0 * alpha);
    let direct = intervals(&reflected, theta, &params, n, subseed(seed, "direct"))?;
    let mapped: Vec<(f64, f64)> = intervals(set, 2.0 * alpha - theta, &params, n, subseed(seed, "mapped"))?
        .into_iter()
        .map(|(lo, hi)| (2.0 * alpha - hi, 2.0 * alpha - lo))
        .collect();
    let test = energy_test(&as_points(&direct), &as_points(&mapped), DEFAULT_PERMUTATIONS, subseed(seed, "energy"))?;
    Ok(LemmaEntry {
        check: EQUIVARIANCE.into(),
        config: format!("{}, theta = {theta:.4}, alpha = {alpha:.4}", describe(set, m, w)),
        seed,
        detail: format!("energy p = {:.4e} (permutation p = {:.4})", test.p_value, test.p_permutation),
        pass: test.pass(),
    })
}

fn interchange_check(
    set: &IntervalSet,
    theta: f64,
    alpha: f64,
    m: StepBudget,
    w: f64,
    n: usize,
    seed: u64,
) -> Result<LemmaEntry> {
    let params = StepOutParams::new(w, m)?;
    let cover = |start: f64, other: f64, s: u64| -> Result<(f64, f64)> {
        let mut rng = stream(s, 0);
        let mut hits = 0usize;
        for _ in 0..n {
            let iv = stepping_out_from(start, |t: f64| set.contains(t), &params, &mut rng)?;
            if iv.covers(other) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
    };
    let (p1, se1) = cover(theta, alpha, subseed(seed, "forward"))?;
    let (p2, se2) = cover(alpha, theta, subseed(seed, "backward"))?;
    let tol = 3.0 * (se1 * se1 + se2 * se2).sqrt();
    Ok(LemmaEntry {
        check: INTERCHANGE.into(),
        config: format!("{}, theta = {theta:.4}, alpha = {alpha:.4}", describe(set, m, w)),
        seed,
        detail: format!("P(theta-run covers alpha) = {p1:.5}, P(alpha-run covers theta) = {p2:.5}, tolerance {tol:.5}"),
        pass: (p1 - p2).abs() <= tol,
    })
}

fn convergence_check(set: &IntervalSet, theta: f64, w: f64, n: usize, seed: u64) -> Result<LemmaEntry> {
    let limit = intervals(set, theta, &StepOutParams::new(w, StepBudget::Unbounded)?, n, subseed(seed, "limit"))?;
    let limit = as_points(&limit);
    let mut tests = Vec::new();
    for m in [10u64, 100, 1000] {
        let sample = intervals(set, theta, &StepOutParams::new(w, StepBudget::Finite(m))?, n, subseed(seed, &format!("m{m}")))?;
        tests.push(energy_test(&as_points(&sample), &limit, DEFAULT_PERMUTATIONS, subseed(seed, &format!("energy{m}")))?);
    }
    let trend = tests
        .windows(2)
        .all(|p| p[1].statistic <= p[0].statistic + 3.0 * p[1].null_sd.max(p[0].null_sd));
    let last = tests[2];
    let detail = format!(
        "energy statistic m=10: {:.3e}, m=100: {:.3e}, m=1000: {:.3e} (null sd {:.1e}); p at m=1000 = {:.4}",
        tests[0].statistic, tests[1].statistic, last.statistic, last.null_sd, last.p_value
    );
    Ok(LemmaEntry {
        check: CONVERGENCE.into(),
        config: format!("S = {set}, w = {w:.4}, theta = {theta:.4}"),
        seed,
        detail,
        pass: trend && last.p_value > ALPHA,
    })
}

fn shrinkage_check(set: &IntervalSet, lo: f64, hi: f64, region: (f64, f64), n: usize, seed: u64) -> Result<LemmaEntry> {
    let clipped: Vec<(f64, f64)> = set
        .intervals()
        .iter()
        .map(|&(a, b)| (a.max(lo), b.min(hi)))
        .filter(|(a, b)| a < b)
        .collect();
    let inside = IntervalSet::new(clipped)?;
    let a_mass = inside.measure_within(region.0, region.1);
    let bound = shrinkage_mass_bound(a_mass, hi - lo, inside.diameter());
    let mut rng = stream(seed, 0);
    let mut hits = 0usize;
    for _ in 0..n {
        let out = reeled_shrinkage(|t: f64| inside.contains(t), lo, hi, &mut rng, DEFAULT_MAX_SHRINK_ITERS)?;
        if region.0 < out.theta && out.theta < region.1 {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(LemmaEntry {
        check: SHRINKAGE.into(),
        config: format!("S = {inside}, interval ({lo:.4}, {hi:.4}), A = ({:.4}, {:.4})", region.0, region.1),
        seed,
        detail: format!("mass {p:.5} +- {se:.5} vs bound {bound:.5}"),
        pass: p >= bound - 3.0 * se,
    })
}
