//! Explicit constants of the uniform-ergodicity bound
//! `sup_x d_tv(K^n(x, .), pi) <= rho^n` and the hyperparameter analysis.
//!
//! With `lambda_eff = min{m w, lambda}`,
//!
//! ```text
//! rho = 1 - eps / lambda_eff * 1 / (kappa * omega_{d-1}) * sup_t t nu(L(t)) / sup p
//! ```
//!
//! where `eps` lower-bounds the probability that stepping-out covers a
//! geodesic superlevel set, and `kappa` is a volume-comparison constant that
//! depends on a Ricci lower bound `(d - 1) zeta` and the support diameter.

use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::unit_sphere_volume;
use crate::rng::stream;
use crate::slice1d::{open_unit, stepping_out, StepBudget, StepOutParams};
use crate::target::{Preset, Provenance, Target};

fn inapplicable(msg: impl Into<String>) -> Error {
    Error::BoundInapplicable(msg.into())
}

/// Volume-comparison constant `kappa`.
///
/// In dimension one the constant is `1` whatever `zeta` says, since the
/// curvature of a 1-manifold vanishes.
pub fn kappa(zeta: f64, diam_w: f64, d: usize) -> Result<f64> {
    if !(diam_w > 0.0 && diam_w.is_finite()) || d == 0 || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa needs diam_W > 0, d >= 1 and finite zeta (got {diam_w}, {d}, {zeta})"
        )));
    }
    if d == 1 {
        return Ok(1.0);
    }
    let e = (d - 1) as i32;
    let value = if zeta > 0.0 {
        let s = zeta.sqrt() * diam_w;
        if s > PI * (1.0 + 1e-12) {
            return Err(inapplicable(format!(
                "sqrt(zeta) * diam_W = {s} exceeds pi, impossible under a positive Ricci bound"
            )));
        }
        zeta.powf((1.0 - d as f64) / 2.0) * s.min(PI / 2.0).sin().powi(e)
    } else if zeta == 0.0 {
        diam_w.powi(e)
    } else {
        let a = zeta.abs();
        a.powf((1.0 - d as f64) / 2.0) * (a.sqrt() * diam_w).sinh().powi(e)
    };
    Ok(value)
}

/// Covering-probability lower bound
/// `eps = 1 - diam_W / (m w) [m < inf] - delta / w [m >= 2]`.
pub fn epsilon_corollary(diam_w: f64, delta: f64, m: StepBudget, w: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) || !(diam_w > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need w > 0, diam_W > 0, delta >= 0 (got w = {w}, diam_W = {diam_w}, delta = {delta})"
        )));
    }
    let span = match m {
        StepBudget::Finite(0) => return Err(Error::InvalidParameter("m must be at least 1".into())),
        StepBudget::Finite(m) => diam_w / (m as f64 * w),
        StepBudget::Unbounded => 0.0,
    };
    let gap = if m.at_least(2) { delta / w } else { 0.0 };
    let eps = 1.0 - span - gap;
    if !(eps > 0.0) {
        return Err(inapplicable(format!(
            "covering bound needs diam_W / m < w - delta (m = {m}, w = {w}, diam_W = {diam_w}, delta = {delta})"
        )));
    }
    Ok(eps)
}

/// `min{m w, lambda}`; `lambda = None` means infinite.
pub fn lambda_eff(m: StepBudget, w: f64, lambda: Option<f64>) -> Result<f64> {
    let mw = match m {
        StepBudget::Finite(m) => m as f64 * w,
        StepBudget::Unbounded => f64::INFINITY,
    };
    let v = mw.min(lambda.unwrap_or(f64::INFINITY));
    if !(v.is_finite() && v > 0.0) {
        return Err(inapplicable("min{m w, lambda} must be finite and positive (m = inf needs finite lambda)"));
    }
    Ok(v)
}

/// Inputs of [`rho`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoInputs {
    pub epsilon: f64,
    pub m: StepBudget,
    pub w: f64,
    pub lambda: Option<f64>,
    pub kappa: f64,
    pub omega_dm1: f64,
    pub sup_t_level: f64,
    pub p_max: f64,
}

/// The contraction constant `rho`.
pub fn rho(inp: &RhoInputs) -> Result<f64> {
    if !(inp.epsilon > 0.0 && inp.epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {}", inp.epsilon)));
    }
    for (name, v) in [
        ("kappa", inp.kappa),
        ("omega_{d-1}", inp.omega_dm1),
        ("sup_t t nu(L(t))", inp.sup_t_level),
        ("sup p", inp.p_max),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let leff = lambda_eff(inp.m, inp.w, inp.lambda)?;
    let r = 1.0 - inp.epsilon / leff / (inp.kappa * inp.omega_dm1) * inp.sup_t_level / inp.p_max;
    if !(0.0..1.0).contains(&r) {
        return Err(inapplicable(format!("rho = {r} lies outside [0, 1); the inputs are inconsistent")));
    }
    Ok(r)
}

/// `rho` of hit-and-run on a convex body `C` in `R^d`:
/// `1 - vol(C) / (omega_{d-1} diam(C)^d)`.
pub fn rho_hit_and_run(vol_c: f64, diam_c: f64, d: usize) -> Result<f64> {
    if !(vol_c > 0.0 && diam_c > 0.0) || d == 0 {
        return Err(Error::InvalidParameter("volume, diameter and dimension must be positive".into()));
    }
    let omega = unit_sphere_volume(d - 1);
    let r = 1.0 - vol_c / (omega * diam_c.powi(d as i32));
    if !(0.0..1.0).contains(&r) {
        return Err(inapplicable(format!("rho = {r} lies outside [0, 1)")));
    }
    let general = rho(&RhoInputs {
        epsilon: 1.0,
        m: StepBudget::Unbounded,
        w: 1.0,
        lambda: Some(diam_c),
        kappa: kappa(0.0, diam_c, d)?,
        omega_dm1: omega,
        sup_t_level: vol_c,
        p_max: 1.0,
    })?;
    debug_assert!((general - r).abs() <= 1e-12);
    Ok(r)
}

/// The hyperparameter-dependent factor `eps_corollary / min{m w, lambda}`.
pub fn q(m: StepBudget, w: f64, diam_w: f64, delta: f64, lambda: Option<f64>) -> Result<f64> {
    let eps = epsilon_corollary(diam_w, delta, m, w)?;
    Ok(eps / lambda_eff(m, w, lambda)?)
}

/// Maximiser of `q(m, .)` for fixed finite `m` when `lambda` is infinite.
pub fn w_star(m: u64, diam_w: f64, delta: f64) -> f64 {
    2.0 * diam_w / m as f64 + if m >= 2 { 2.0 * delta } else { 0.0 }
}

/// Shape of `q` as a function of `lambda` relative to `diam_W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `lambda = inf`.
    A,
    /// `2 diam_W < lambda <= 4 diam_W`.
    B,
    /// `lambda > 4 diam_W`.
    C,
    /// `lambda <= 2 diam_W`.
    D,
}

impl Regime {
    pub fn classify(diam_w: f64, lambda: Option<f64>) -> Regime {
        match lambda {
            None => Regime::A,
            Some(l) if l <= 2.0 * diam_w => Regime::D,
            Some(l) if l <= 4.0 * diam_w => Regime::B,
            Some(_) => Regime::C,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::A => "a",
            Regime::B => "b",
            Regime::C => "c",
            Regime::D => "d",
        })
    }
}

/// Optimal step width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WChoice {
    Value(f64),
    /// Every `w > 0` is optimal.
    Any,
    /// The supremum is approached as `w -> inf` but not attained.
    Unbounded,
}

impl fmt::Display for WChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WChoice::Value(w) => write!(f, "{w}"),
            WChoice::Any => f.write_str("any"),
            WChoice::Unbounded => f.write_str("->inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperOptimum {
    pub m: StepBudget,
    pub w: WChoice,
    /// Supremum of `q`.
    pub q: f64,
    pub attained: bool,
    pub regime: Regime,
    /// Human-readable description of other maximisers, if any.
    pub ties: Option<String>,
}

/// The choice of `(m, w)` maximising `q`, with the regime it falls in.
pub fn optimal_hyperparameters(diam_w: f64, delta: f64, lambda: Option<f64>) -> Result<HyperOptimum> {
    if !(diam_w > 0.0 && diam_w.is_finite()) || !(delta >= 0.0) {
        return Err(Error::InvalidParameter("need diam_W > 0 and delta >= 0".into()));
    }
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
    }
    let regime = Regime::classify(diam_w, lambda);
    let peak = 1.0 / (4.0 * diam_w);
    let mw_tie = (delta == 0.0).then(|| format!("every finite m with m*w = {}", 2.0 * diam_w));
    let out = match (regime, lambda) {
        (Regime::A | Regime::C, _) => HyperOptimum {
            m: StepBudget::Finite(1),
            w: WChoice::Value(2.0 * diam_w),
            q: peak,
            attained: true,
            regime,
            ties: mw_tie,
        },
        (_, Some(l)) if delta == 0.0 => HyperOptimum {
            m: StepBudget::Unbounded,
            w: WChoice::Any,
            q: 1.0 / l,
            attained: true,
            regime,
            ties: (regime == Regime::B && 4.0 * diam_w == l).then(|| {
                format!("m = 1, w = {} attains the same value", 2.0 * diam_w)
            }),
        },
        (_, Some(l)) => HyperOptimum {
            m: StepBudget::Unbounded,
            w: WChoice::Unbounded,
            q: 1.0 / l,
            attained: false,
            regime,
            ties: Some("every m approaches the same supremum as w -> inf".into()),
        },
        (_, None) => unreachable!("regimes b and d have finite lambda"),
    };
    Ok(out)
}

/// Lower bound on `nu(M) / (diam(M) kappa omega_{d-1})` when the support is
/// the whole manifold, from the isoembolic inequality.
pub fn isoembolic_lower_bound(inj: f64, diam: f64, zeta: f64, d: usize) -> Result<f64> {
    if !(inj > 0.0 && diam > 0.0) || d == 0 {
        return Err(Error::InvalidParameter("need inj > 0, diam > 0, d >= 1".into()));
    }
    if inj > diam * (1.0 + 1e-12) {
        return Err(inapplicable("the injectivity radius cannot exceed the diameter"));
    }
    let df = d as f64;
    if zeta > 0.0 {
        if zeta.sqrt() * diam > PI * (1.0 + 1e-12) {
            return Err(inapplicable("sqrt(zeta) * diam exceeds pi"));
        }
        Ok((2.0 / PI).sqrt() / df.sqrt() * (inj * zeta.sqrt() / PI).powi(d as i32))
    } else if zeta == 0.0 {
        Ok(TAU.sqrt() / df.sqrt() * (inj / (PI * diam)).powi(d as i32))
    } else {
        let a = zeta.abs().sqrt();
        Ok(TAU.sqrt() / df.sqrt() * (inj * a / (PI * (a * diam).sinh())).powi(d as i32))
    }
}

/// How the covering probability `eps` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// `eps = 1` where it is known exactly: full-support targets on spheres
    /// with `m = 1, w = 2 pi`, and uniform targets on convex bodies with `m = inf`.
    Analytic,
    /// The closed-form lower bound of [`epsilon_corollary`].
    Corollary,
    /// The smallest estimated covering probability over random probes.
    MonteCarlo { probes: usize, draws: usize },
}

impl EpsilonMode {
    pub fn tag(&self) -> &'static str {
        match self {
            EpsilonMode::Analytic => "analytic",
            EpsilonMode::Corollary => "corollary",
            EpsilonMode::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

impl std::str::FromStr for EpsilonMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(EpsilonMode::Analytic),
            "corollary" => Ok(EpsilonMode::Corollary),
            "monte-carlo" | "mc" => Ok(EpsilonMode::MonteCarlo { probes: 64, draws: 2000 }),
            other => Err(Error::InvalidParameter(format!(
                "unknown epsilon mode {other:?} (expected analytic, corollary or monte-carlo)"
            ))),
        }
    }
}

/// Every constant entering `rho`, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub target: String,
    pub manifold: String,
    pub d: usize,
    pub m: StepBudget,
    pub w: f64,
    pub zeta: f64,
    pub diam_w: f64,
    pub kappa: f64,
    pub delta: f64,
    pub delta_provenance: Provenance,
    pub lambda: Option<f64>,
    pub lambda_eff: f64,
    pub epsilon: f64,
    pub epsilon_mode: String,
    pub epsilon_std_error: Option<f64>,
    pub sup_t_level: f64,
    pub sup_t_level_provenance: String,
    pub p_max: f64,
    pub omega_dm1: f64,
    pub rho: f64,
    /// `eps_corollary / min{m w, lambda}` when the corollary applies.
    pub q: Option<f64>,
    /// `rho` rests only on exact or closed-form inputs.
    pub certified: bool,
}

impl BoundsReport {
    /// Verdict label for statistical checks against this bound.
    pub fn status(&self) -> &'static str {
        if self.certified {
            "certified"
        } else {
            "optimistic, not certified"
        }
    }

    /// Flat `key = value  # provenance` document.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let geo = "manifold metadata";
        let lambda = self.lambda.map_or("inf".to_string(), |l| l.to_string());
        let eps_prov = match self.epsilon_std_error {
            Some(se) => format!("{}, se {se}, optimistic", self.epsilon_mode),
            None => self.epsilon_mode.clone(),
        };
        let q = self.q.map_or("n/a".to_string(), |q| q.to_string());
        let delta_prov = self.delta_provenance.to_string();
        let rows: [(&str, String, &str); 20] = [
            ("target", self.target.clone(), "input"),
            ("manifold", self.manifold.clone(), "input"),
            ("d", self.d.to_string(), geo),
            ("m", self.m.to_string(), "input"),
            ("w", self.w.to_string(), "input"),
            ("zeta", self.zeta.to_string(), "global ricci lower bound"),
            ("diam_w", self.diam_w.to_string(), "analytic"),
            ("kappa", self.kappa.to_string(), "volume comparison"),
            ("delta", self.delta.to_string(), &delta_prov),
            ("lambda", lambda, "analytic"),
            ("lambda_eff", self.lambda_eff.to_string(), "min{m w, lambda}"),
            ("epsilon", self.epsilon.to_string(), &eps_prov),
            ("sup_t_level", self.sup_t_level.to_string(), &self.sup_t_level_provenance),
            ("p_max", self.p_max.to_string(), "analytic"),
            ("omega_dm1", self.omega_dm1.to_string(), geo),
            ("rho", self.rho.to_string(), self.status()),
            ("q", q, "corollary"),
            ("certified", self.certified.to_string(), "derived"),
            ("status", self.status().to_string(), "derived"),
            ("version", crate::VERSION.to_string(), "tool"),
        ];
        for (k, v, p) in rows {
            let _ = writeln!(s, "{k} = {v}  # {p}");
        }
        s
    }
}

/// Assembles every constant of the bound for `target` under `(m, w)`.
pub fn full_report(target: &Target, m: StepBudget, w: f64, mode: EpsilonMode, seed: u64) -> Result<BoundsReport> {
    let params = StepOutParams::new(w, m)?;
    let meta = target.meta().clone();
    let info = target.manifold().info();
    let d = info.dim;
    let zeta = if d == 1 { 0.0 } else { info.ricci_lower };
    let kap = kappa(zeta, meta.diam_w, d)?;
    let leff = lambda_eff(m, w, meta.lambda)?;
    let delta_certified = meta.delta_provenance == Provenance::Analytic;
    let (epsilon, epsilon_se, certified_eps) = match mode {
        EpsilonMode::Analytic => {
            let sphere = target.has_full_sphere_support()
                && m == StepBudget::Finite(1)
                && ((w - TAU) / TAU).abs() <= 1e-6;
            let hit_and_run = target.preset_kind().is_some_and(Preset::is_convex_uniform) && m == StepBudget::Unbounded;
            if !(sphere || hit_and_run) {
                return Err(inapplicable(
                    "analytic epsilon = 1 is only known for full-support sphere targets with m = 1, \
                     w = 2 pi, and for uniform targets on convex bodies with m = inf; use the corollary \
                     or monte-carlo mode",
                ));
            }
            (1.0, None, true)
        }
        EpsilonMode::Corollary => (epsilon_corollary(meta.diam_w, meta.delta, m, w)?, None, delta_certified),
        EpsilonMode::MonteCarlo { probes, draws } => {
            let (e, se) = monte_carlo_epsilon(target, &params, probes, draws, seed)?;
            (e, Some(se), false)
        }
    };
    let flat = target.preset_kind().is_some_and(Preset::is_flat);
    let sup_t_level = target.sup_t_level()?;
    let sup_prov = if flat {
        "analytic"
    } else if target.preset_kind().is_some() {
        "numeric optimizer over the analytic level-set function"
    } else {
        "numeric optimizer over a monte-carlo level-set function"
    };
    let r = rho(&RhoInputs {
        epsilon,
        m,
        w,
        lambda: meta.lambda,
        kappa: kap,
        omega_dm1: info.omega_dm1,
        sup_t_level,
        p_max: meta.p_max,
    })?;
    Ok(BoundsReport {
        target: target.spec().to_string(),
        manifold: target.manifold().spec(),
        d,
        m,
        w,
        zeta,
        diam_w: meta.diam_w,
        kappa: kap,
        delta: meta.delta,
        delta_provenance: meta.delta_provenance,
        lambda: meta.lambda,
        lambda_eff: leff,
        epsilon,
        epsilon_mode: mode.tag().to_string(),
        epsilon_std_error: epsilon_se,
        sup_t_level,
        sup_t_level_provenance: sup_prov.to_string(),
        p_max: meta.p_max,
        omega_dm1: info.omega_dm1,
        rho: r,
        q: q(m, w, meta.diam_w, meta.delta, meta.lambda).ok(),
        certified: certified_eps && target.preset_kind().is_some(),
    })
}

/// Smallest estimated probability, over random `(x, v, t)`, that the
/// stepping-out interval reaches the far end of the geodesic superlevel set.
/// The far end is located on a grid, so the estimate errs on the optimistic side.
fn monte_carlo_epsilon(
    target: &Target,
    params: &StepOutParams,
    probes: usize,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if probes == 0 || draws == 0 {
        return Err(Error::InsufficientData("monte-carlo epsilon needs probes and draws".into()));
    }
    let results: Vec<(f64, f64)> = (0..probes)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let mut rng = stream(seed, k as u64);
            let manifold = target.manifold();
            let x = target.sample_support_point(&mut rng)?;
            let px = target.density(&x);
            let v = manifold.sample_unit_tangent(&x, &mut rng)?;
            let t = open_unit(&mut rng) * px;
            let range = target.scan_range(&x, &v)?;
            let n = crate::target::DELTA_SCAN_POINTS;
            let step = range / n as f64;
            let oracle = |theta: f64| {
                manifold
                    .exp_map(&x, &v, theta)
                    .map(|y| target.density(&y) > t)
                    .unwrap_or(false)
            };
            let b = (0..n)
                .rev()
                .find(|&i| i == 0 || oracle(i as f64 * step))
                .map(|i| i as f64 * step)
                .unwrap_or(0.0);
            let mut hits = 0usize;
            for _ in 0..draws {
                let iv = stepping_out(oracle, params, &mut rng)?;
                if iv.hi >= b {
                    hits += 1;
                }
            }
            let p = hits as f64 / draws as f64;
            Ok((p, (p * (1.0 - p) / draws as f64).sqrt()))
        })
        .collect::<Result<_>>()?;
    let (p, se) = results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one probe");
    if !(p > 0.0) {
        return Err(inapplicable("estimated covering probability is zero for some probe"));
    }
    Ok((p, se))
}
