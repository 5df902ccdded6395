//! One-dimensional slice machinery run along a geodesic.
//!
//! [`stepping_out`] produces a random interval around the current point
//! (which sits at parameter `0`), and [`reeled_shrinkage`] draws the next
//! parameter from that interval by wrapping it onto a circle and shrinking the
//! search arc towards the current point until a draw lands in the level set.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership test for the geodesic superlevel set, as a function of the
/// geodesic parameter.
pub trait LevelOracle {
    fn contains(&mut self, theta: f64) -> bool;
}

impl<F: FnMut(f64) -> bool> LevelOracle for F {
    fn contains(&mut self, theta: f64) -> bool {
        self(theta)
    }
}

/// The stepping-out cap `m`: a positive integer or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepBudget {
    Finite(u64),
    Unbounded,
}

impl StepBudget {
    pub fn is_finite(self) -> bool {
        matches!(self, StepBudget::Finite(_))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            StepBudget::Finite(m) => m as f64,
            StepBudget::Unbounded => f64::INFINITY,
        }
    }

    /// Whether `m >= k`.
    pub fn at_least(self, k: u64) -> bool {
        match self {
            StepBudget::Finite(m) => m >= k,
            StepBudget::Unbounded => true,
        }
    }
}

impl fmt::Display for StepBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepBudget::Finite(m) => write!(f, "{m}"),
            StepBudget::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for StepBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "Inf" | "INF" | "∞") {
            return Ok(StepBudget::Unbounded);
        }
        match t.parse::<u64>() {
            Ok(0) => Err(Error::spec(s, "m must be at least 1")),
            Ok(m) => Ok(StepBudget::Finite(m)),
            Err(e) => Err(Error::spec(s, format!("m must be a positive integer or \"inf\": {e}"))),
        }
    }
}

impl Serialize for StepBudget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepBudget::Finite(m) => s.serialize_u64(*m),
            StepBudget::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for StepBudget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("m must be at least 1")),
            Raw::Int(m) => Ok(StepBudget::Finite(m)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub const DEFAULT_MAX_EXPANSIONS: u64 = 1_000_000;
pub const DEFAULT_MAX_SHRINK_ITERS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutParams {
    pub w: f64,
    pub m: StepBudget,
    /// Safety cap per side, only consulted when `m` is unbounded.
    pub max_expansions: u64,
}

impl StepOutParams {
    pub fn new(w: f64, m: StepBudget) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step width w must be positive and finite, got {w}"
            )));
        }
        Ok(StepOutParams {
            w,
            m,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
        })
    }
}

/// Output of the stepping-out procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Number of extra steps to the left (`tau - 1`).
    pub expansions_left: u64,
    /// Number of extra steps to the right.
    pub expansions_right: u64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn covers(&self, theta: f64) -> bool {
        self.lo < theta && theta < self.hi
    }
}

/// A draw from the open unit interval.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Stepping-out around the current point at parameter `0`.
pub fn stepping_out<O, R>(oracle: O, params: &StepOutParams, rng: &mut R) -> Result<Interval>
where
    O: LevelOracle,
    R: Rng + ?Sized,
{
    stepping_out_from(0.0, oracle, params, rng)
}

/// Stepping-out started at an arbitrary `theta`.
///
/// The kernel only ever starts at `0`; the general start point exists for
/// checking the distributional identities of the procedure.
pub fn stepping_out_from<O, R>(
    theta: f64,
    mut oracle: O,
    params: &StepOutParams,
    rng: &mut R,
) -> Result<Interval>
where
    O: LevelOracle,
    R: Rng + ?Sized,
{
    let w = params.w;
    let offset = loop {
        let u = w * open_unit(rng);
        if u < w {
            break u;
        }
    };
    let left = |i: u64| theta - offset - (i - 1) as f64 * w;
    let right = |i: u64| theta - offset + i as f64 * w;

    let (tau, tau_right) = match params.m {
        StepBudget::Finite(m) => {
            let j = rng.random_range(1..=m);
            let mut i = 1;
            while i < j && oracle.contains(left(i)) {
                i += 1;
            }
            let mut k = 1;
            while k < m + 1 - j && oracle.contains(right(k)) {
                k += 1;
            }
            (i, k)
        }
        StepBudget::Unbounded => {
            let cap = params.max_expansions;
            let mut i = 1;
            while oracle.contains(left(i)) {
                i += 1;
                if i > cap {
                    return Err(Error::ExpansionCap { cap });
                }
            }
            let mut k = 1;
            while oracle.contains(right(k)) {
                k += 1;
                if k > cap {
                    return Err(Error::ExpansionCap { cap });
                }
            }
            (i, k)
        }
    };
    let out = Interval {
        lo: left(tau),
        hi: right(tau_right),
        expansions_left: tau - 1,
        expansions_right: tau_right - 1,
    };
    debug_assert!(out.lo < theta && theta < out.hi);
    debug_assert!(
        (out.width() - (tau + tau_right - 1) as f64 * w).abs() <= 1e-9 * out.width().max(1.0)
    );
    debug_assert!(match params.m {
        StepBudget::Finite(m) => out.width() <= m as f64 * w * (1.0 + 1e-12),
        StepBudget::Unbounded => true,
    });
    Ok(out)
}

/// Lower bound on the probability that the stepping-out interval covers
/// `[theta, C) ∩ S`, where `b = sup S ∩ [theta, C)` and `delta` is the gap
/// mass of `S` inside `[theta, b)`.
pub fn covering_bound(b: f64, theta: f64, delta: f64, m: StepBudget, w: f64) -> Result<f64> {
    if !(b > theta) || !(delta >= 0.0) || !(w > 0.0) {
        return Err(Error::BoundInapplicable(format!(
            "need b > theta, delta >= 0, w > 0 (b = {b}, theta = {theta}, delta = {delta}, w = {w})"
        )));
    }
    let span_term = match m {
        StepBudget::Finite(m) => (b - theta) / m as f64,
        StepBudget::Unbounded => 0.0,
    };
    let gap_term = if m.at_least(2) { delta } else { 0.0 };
    if !(span_term < w - gap_term) {
        return Err(Error::BoundInapplicable(format!(
            "(b - theta)/m = {span_term} is not below w - delta = {}",
            w - gap_term
        )));
    }
    Ok(1.0 - span_term / w - gap_term / w)
}

/// A finite union of open intervals of the real line, kept sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidParameter(format!(
                    "interval ({a}, {b}) must be finite and non-empty"
                )));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(IntervalSet { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|&(a, _)| a < x);
        idx > 0 && x < self.intervals[idx - 1].1
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn inf(&self) -> f64 {
        self.intervals.first().map_or(f64::NAN, |i| i.0)
    }

    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(f64::NAN, |i| i.1)
    }

    pub fn diameter(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.sup() - self.inf()
        }
    }

    /// `sup S ∩ [from, to)`, or `None` if the intersection is empty.
    pub fn sup_within(&self, from: f64, to: f64) -> Option<f64> {
        self.intervals
            .iter()
            .filter(|&&(a, b)| b > from && a < to)
            .map(|&(_, b)| b.min(to))
            .reduce(f64::max)
    }

    /// Lebesgue measure of `[from, to) \ S`.
    pub fn gap_within(&self, from: f64, to: f64) -> f64 {
        if !(to > from) {
            return 0.0;
        }
        let covered: f64 = self
            .intervals
            .iter()
            .map(|&(a, b)| (b.min(to) - a.max(from)).max(0.0))
            .sum();
        (to - from) - covered
    }

    /// Lebesgue measure of `S ∩ (from, to)`.
    pub fn measure_within(&self, from: f64, to: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(to) - a.max(from)).max(0.0))
            .sum()
    }

    /// The image under `x -> c - x`.
    pub fn reflect(&self, c: f64) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().rev().map(|&(a, b)| (c - b, c - a)).collect(),
        }
    }

    /// The image under `x -> x + c`.
    pub fn shift(&self, c: f64) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().map(|&(a, b)| (a + c, b + c)).collect(),
        }
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|(a, b)| format!("{a}..{b}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for IntervalSet {
    type Err = Error;

    /// Parses `a..b,c..d,...` (open intervals).
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part
                .split_once("..")
                .ok_or_else(|| Error::spec(s, format!("interval {part:?} is not of the form a..b")))?;
            let a = a.trim().parse::<f64>().map_err(|e| Error::spec(s, e.to_string()))?;
            let b = b.trim().parse::<f64>().map_err(|e| Error::spec(s, e.to_string()))?;
            out.push((a, b));
        }
        if out.is_empty() {
            return Err(Error::spec(s, "empty interval set"));
        }
        IntervalSet::new(out).map_err(|e| Error::spec(s, e.to_string()))
    }
}

/// Monte-Carlo estimate (with standard error) of the probability that the
/// stepping-out interval started at `theta` covers `[theta, c) ∩ S`.
pub fn estimate_covering_probability<R: Rng + ?Sized>(
    set: &IntervalSet,
    theta: f64,
    c: f64,
    params: &StepOutParams,
    n: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !set.contains(theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} is not in the set")));
    }
    if n == 0 {
        return Err(Error::InsufficientData("need at least one draw".into()));
    }
    let b = set
        .sup_within(theta, c)
        .ok_or_else(|| Error::InvalidParameter("empty set on [theta, C)".into()))?;
    let mut hits = 0usize;
    for _ in 0..n {
        let iv = stepping_out_from(theta, |t: f64| set.contains(t), params, rng)?;
        if iv.hi >= b {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

/// `h_{lo,hi}`: the parameter line wrapped onto `[0, 2 pi)` with period `hi - lo`.
pub fn wrap_angle(theta: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("degenerate interval [{lo}, {hi})")));
    }
    let a = (TAU / (hi - lo) * theta).rem_euclid(TAU);
    Ok(if a >= TAU { 0.0 } else { a })
}

/// The unique parameter in `[lo, hi)` that wraps to `alpha`.
pub fn unwrap_angle(alpha: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("degenerate interval [{lo}, {hi})")));
    }
    let width = hi - lo;
    let raw = alpha / TAU * width;
    let theta = lo + (raw - lo).rem_euclid(width);
    Ok(if theta >= hi { lo } else { theta })
}

/// Length of the arc `I(a, b)`: from `a` counter-clockwise to `b`, the full
/// circle when `a == b`.
fn arc_len(a: f64, b: f64) -> f64 {
    if a == b {
        TAU
    } else {
        (b - a).rem_euclid(TAU)
    }
}

fn arc_contains(a: f64, b: f64, x: f64) -> bool {
    (x - a).rem_euclid(TAU) < arc_len(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkOutcome {
    pub theta: f64,
    pub iterations: u64,
}

/// Reeled shrinkage on `(lo, hi)` with the current point at parameter `0`.
pub fn reeled_shrinkage<O, R>(
    oracle: O,
    lo: f64,
    hi: f64,
    rng: &mut R,
    max_iters: u64,
) -> Result<ShrinkOutcome>
where
    O: LevelOracle,
    R: Rng + ?Sized,
{
    shrink(oracle, lo, hi, rng, max_iters, true)
}

/// Shrinkage loop; with `check_acceptance = false` the first draw is returned
/// unconditionally (a deliberately broken variant for mutation testing).
pub(crate) fn shrink<O, R>(
    mut oracle: O,
    lo: f64,
    hi: f64,
    rng: &mut R,
    max_iters: u64,
    check_acceptance: bool,
) -> Result<ShrinkOutcome>
where
    O: LevelOracle,
    R: Rng + ?Sized,
{
    if !(lo < 0.0 && 0.0 < hi) {
        return Err(Error::InvalidParameter(format!(
            "current point 0 must lie in ({lo}, {hi})"
        )));
    }
    let target = wrap_angle(0.0, lo, hi)?;
    let mut amin = TAU * open_unit(rng);
    if amin >= TAU {
        amin = 0.0;
    }
    let mut amax = amin;
    let mut alpha = amin;
    for k in 1..=max_iters {
        let theta = unwrap_angle(alpha, lo, hi)?;
        let inside = lo < theta && theta < hi;
        if !check_acceptance || (inside && oracle.contains(theta)) {
            return Ok(ShrinkOutcome { theta, iterations: k });
        }
        if arc_contains(alpha, amax, target) {
            amin = alpha;
        } else {
            amax = alpha;
        }
        alpha = loop {
            let a = (amin + arc_len(amin, amax) * open_unit(rng)).rem_euclid(TAU);
            if a != amin && a != amax && a != target && a < TAU {
                break a;
            }
        };
    }
    Err(Error::ShrinkCap { cap: max_iters })
}

/// Lower bound on the reeled shrinkage mass of a set `A`.
pub fn shrinkage_mass_bound(a_mass: f64, width: f64, diam_s: f64) -> f64 {
    a_mass / width.min(diam_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::f64::consts::PI;

    fn params(w: f64, m: StepBudget) -> StepOutParams {
        StepOutParams::new(w, m).unwrap()
    }

    #[test]
    fn single_step_interval_has_width_w() {
        let mut rng = stream(1, 0);
        let p = params(0.7, StepBudget::Finite(1));
        for _ in 0..1000 {
            let iv = stepping_out(|_t: f64| true, &p, &mut rng).unwrap();
            assert!((iv.width() - 0.7).abs() < 1e-12);
            assert!(iv.lo < 0.0 && iv.hi > 0.0);
            assert_eq!(iv.expansions_left + iv.expansions_right, 0);
        }
    }

    /// E[width] for S = (-a, a), w = 1, m = inf, by integrating over the offset
    /// on a fine midpoint grid (independent of the sampler).
    fn expected_width_oracle(a: f64) -> f64 {
        let n = 200_000;
        let set = |t: f64| -a < t && t < a;
        (0..n)
            .map(|k| {
                let u = (k as f64 + 0.5) / n as f64;
                let mut i = 1;
                while set(-u - (i - 1) as f64) {
                    i += 1;
                }
                let mut j = 1;
                while set(-u + j as f64) {
                    j += 1;
                }
                (i + j - 1) as f64
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn mean_width_matches_integral() {
        let oracle = expected_width_oracle(0.25);
        assert!((oracle - 1.5).abs() < 1e-4);
        let mut rng = stream(2, 0);
        let p = params(1.0, StepBudget::Unbounded);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let iv = stepping_out(|t: f64| -0.25 < t && t < 0.25, &p, &mut rng).unwrap();
            assert!(iv.lo < -0.25 && iv.hi > 0.25);
            s += iv.width();
            s2 += iv.width() * iv.width();
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - oracle).abs() < 3.0 * se, "mean {mean} oracle {oracle} se {se}");
    }

    #[test]
    fn unbounded_set_trips_the_expansion_cap() {
        let mut rng = stream(3, 0);
        let mut p = params(1.0, StepBudget::Unbounded);
        p.max_expansions = 100;
        let err = stepping_out(|_t: f64| true, &p, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ExpansionCap { cap: 100 }));
    }

    #[test]
    fn covering_bound_examples() {
        assert_eq!(covering_bound(1.0, 0.0, 0.0, StepBudget::Unbounded, 1.0).unwrap(), 1.0);
        let half = covering_bound(PI, 0.0, 0.0, StepBudget::Finite(1), 2.0 * PI).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        let v = covering_bound(1.0, 0.0, 0.2, StepBudget::Finite(3), 1.0).unwrap();
        assert!((v - (1.0 - 1.0 / 3.0 - 0.2)).abs() < 1e-15);
        assert!(matches!(
            covering_bound(3.0, 0.0, 0.0, StepBudget::Finite(1), 2.0),
            Err(Error::BoundInapplicable(_))
        ));
        assert!(covering_bound(1.0, 0.0, 0.9, StepBudget::Finite(2), 1.0).is_err());
    }

    /// Exact covering probability of the stepping-out interval for an interval
    /// set, by a midpoint grid over the offset and enumeration of J.
    pub(crate) fn covering_oracle(set: &IntervalSet, theta: f64, c: f64, m: u64, w: f64, grid: usize) -> f64 {
        let b = set.sup_within(theta, c).unwrap();
        let mut total = 0.0;
        for j in 1..=m {
            for k in 0..grid {
                let u = w * (k as f64 + 0.5) / grid as f64;
                let mut r = 1;
                while r < m + 1 - j && set.contains(theta - u + r as f64 * w) {
                    r += 1;
                }
                if theta - u + r as f64 * w >= b {
                    total += 1.0;
                }
            }
        }
        total / (m as f64 * grid as f64)
    }

    #[test]
    fn covering_probability_examples() {
        let mut rng = stream(4, 0);
        let s = IntervalSet::new(vec![(-1.0, 1.0)]).unwrap();
        let (p, _) = estimate_covering_probability(&s, 0.0, f64::INFINITY, &params(0.3, StepBudget::Unbounded), 10_000, &mut rng).unwrap();
        assert_eq!(p, 1.0);

        let s = IntervalSet::new(vec![(-1.0, 0.3), (0.5, 1.0)]).unwrap();
        let exact = covering_oracle(&s, 0.0, f64::INFINITY, 3, 1.0, 100_000);
        assert!((exact - 0.8 * 2.0 / 3.0).abs() < 1e-4);
        let (p, se) = estimate_covering_probability(&s, 0.0, f64::INFINITY, &params(1.0, StepBudget::Finite(3)), 1_000_000, &mut rng).unwrap();
        let bound = covering_bound(1.0, 0.0, 0.2, StepBudget::Finite(3), 1.0).unwrap();
        assert!(p >= bound - 3.0 * se);
        assert!((p - exact).abs() < 3.0 * se + 1e-4, "p {p} exact {exact}");

        let s = IntervalSet::new(vec![(-0.1, 0.1)]).unwrap();
        let exact = covering_oracle(&s, 0.0, f64::INFINITY, 1, 2.0, 100_000);
        assert!((exact - 0.95).abs() < 1e-4);
        let (p, se) = estimate_covering_probability(&s, 0.0, f64::INFINITY, &params(2.0, StepBudget::Finite(1)), 200_000, &mut rng).unwrap();
        assert!((p - 0.95).abs() < 3.0 * se);
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0, -0.3, 0.9).unwrap(), 0.0);
        assert!((wrap_angle(0.25, 0.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-0.25, 0.0, 1.0).unwrap() - 3.0 * PI / 2.0).abs() < 1e-15);
        assert!(wrap_angle(0.1, 1.0, 1.0).is_err());
        assert_eq!(unwrap_angle(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!((unwrap_angle(PI / 2.0, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(unwrap_angle(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn unwrap_inverts_wrap() {
        let mut rng = stream(5, 0);
        for _ in 0..10_000 {
            let lo: f64 = rng.random_range(-5.0..0.0);
            let hi = lo + rng.random_range(0.01..10.0);
            let theta = rng.random_range(lo..hi);
            let back = unwrap_angle(wrap_angle(theta, lo, hi).unwrap(), lo, hi).unwrap();
            assert!((back - theta).abs() < 1e-12 * (1.0 + hi - lo), "{theta} {back}");
        }
    }

    #[test]
    fn shrinkage_on_full_set_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let mut rng = stream(6, 0);
        let (lo, hi) = (-0.3, 0.9);
        let n = 100_000;
        let mut counts = [0usize; 50];
        for _ in 0..n {
            let out = reeled_shrinkage(|_t: f64| true, lo, hi, &mut rng, 10).unwrap();
            assert_eq!(out.iterations, 1);
            counts[(((out.theta - lo) / (hi - lo)) * 50.0) as usize] += 1;
        }
        let e = n as f64 / 50.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(49.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn shrinkage_stays_in_set_and_terminates() {
        let mut rng = stream(7, 0);
        let s = IntervalSet::new(vec![(-0.1, 0.1), (0.7, 0.9)]).unwrap();
        let mut total_iters = 0;
        for _ in 0..10_000 {
            let out = reeled_shrinkage(|t: f64| s.contains(t), -0.1, 0.9, &mut rng, 1000).unwrap();
            assert!(s.contains(out.theta) && out.theta > -0.1 && out.theta < 0.9);
            total_iters += out.iterations;
        }
        assert!((total_iters as f64 / 10_000.0) < 200.0);
    }

    #[test]
    fn shrinkage_mass_lower_bound_example() {
        let mut rng = stream(8, 0);
        let s = IntervalSet::new(vec![(-0.1, 0.1), (0.7, 0.9)]).unwrap();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let t = reeled_shrinkage(|t: f64| s.contains(t), -0.1, 0.9, &mut rng, 1000).unwrap().theta;
                0.7 < t && t < 0.9
            })
            .count();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let bound = shrinkage_mass_bound(0.2, 1.0, s.diameter());
        assert!((bound - 0.2).abs() < 1e-12);
        assert!(p >= bound - 3.0 * se, "p {p}");
    }

    #[test]
    fn shrinkage_mass_bound_examples() {
        assert_eq!(shrinkage_mass_bound(0.0, 3.0, 1.0), 0.0);
        assert_eq!(shrinkage_mass_bound(0.5, 2.0, 0.5), 1.0);
    }

    #[test]
    fn shrinkage_cap_reports_error() {
        let mut rng = stream(9, 0);
        let err = reeled_shrinkage(|t: f64| t == 0.0, -1.0, 1.0, &mut rng, 50).unwrap_err();
        assert!(matches!(err, Error::ShrinkCap { cap: 50 }));
    }

    #[test]
    fn interval_set_basics() {
        let s: IntervalSet = "0.5..1, -1..0.3, 0.2..0.4".parse().unwrap();
        assert_eq!(s.intervals(), &[(-1.0, 0.4), (0.5, 1.0)]);
        assert!(s.contains(0.0) && !s.contains(0.45) && !s.contains(0.4) && !s.contains(-1.0));
        assert!((s.measure() - 1.9).abs() < 1e-12);
        assert_eq!(s.sup_within(0.0, 0.7), Some(0.7));
        assert!((s.gap_within(0.0, 1.0) - 0.1).abs() < 1e-12);
        assert_eq!(s.reflect(0.0).intervals(), &[(-1.0, -0.5), (-0.4, 1.0)]);
        assert!("".parse::<IntervalSet>().is_err());
        assert!("1..0".parse::<IntervalSet>().is_err());
        assert!("nan..1".parse::<IntervalSet>().is_err());
    }

    #[test]
    fn step_budget_parsing() {
        assert_eq!("inf".parse::<StepBudget>().unwrap(), StepBudget::Unbounded);
        assert_eq!(" 3 ".parse::<StepBudget>().unwrap(), StepBudget::Finite(3));
        assert!("0".parse::<StepBudget>().is_err());
        assert!("-2".parse::<StepBudget>().is_err());
        let json = serde_json::to_string(&StepBudget::Unbounded).unwrap();
        assert_eq!(serde_json::from_str::<StepBudget>(&json).unwrap(), StepBudget::Unbounded);
    }
}
