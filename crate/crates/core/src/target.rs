//! Unnormalised target densities and their level-set structure.
//!
//! Densities use strict superlevel sets `{p > t}` throughout. Presets carry
//! exact metadata (sup norm, support diameter, largest geodesic gap `delta`,
//! `lambda`) and exact reference samplers; custom densities fall back to
//! Monte-Carlo estimates of the level-set function.
//!
//! The support of a custom density is assumed connected; nothing checks it.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{parse_geometry_prefix, unit_ball_volume, vecops, Geometry, Manifold, Point, TangentVector};
use crate::rng::{stream, subseed};
use crate::slice1d::{open_unit, IntervalSet};

/// Draws a point uniformly from some reference region.
type PointSampler = Box<dyn Fn(&mut dyn RngCore) -> Point>;

/// Number of log-uniform grid points used to maximise `t * L(t)`.
pub const SUP_GRID_POINTS: usize = 1024;
/// Lower end of the `t` grid, relative to the sup norm.
pub const SUP_GRID_FLOOR: f64 = 1e-6;
/// Grid resolution of the geodesic scans in [`Target::estimate_delta`].
pub const DELTA_SCAN_POINTS: usize = 4096;
/// Sample size behind Monte-Carlo level-set functions.
pub const LEVEL_MC_SAMPLES: usize = 200_000;

/// Where a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    /// A statistical estimate; for suprema it is a lower bound.
    Estimated,
    UserSupplied,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::Estimated => "estimated",
            Provenance::UserSupplied => "user-supplied",
        })
    }
}

/// The built-in target families.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `p = 1` on a compact manifold.
    Uniform,
    /// Indicator of the open cap `{angle(x, pole) < colatitude}` on `S^2`.
    Cap { colatitude: f64, pole: Vec<f64> },
    /// `p(x) = exp(kappa <mean, x>)` on `S^2`.
    VonMisesFisher { kappa: f64, mean: Vec<f64> },
    /// Indicator of the open ball of the given radius around the origin.
    ConvexBall { radius: f64 },
    /// Indicator of the open box `prod (-a_i/2, a_i/2)`.
    ConvexBox { extents: Vec<f64> },
    /// `exp(-|x|^2 / (2 sigma^2))` restricted to the open ball of radius `radius`.
    BallGaussian { sigma: f64, radius: f64 },
    /// Indicator of a union of open intervals on the real line.
    Intervals(IntervalSet),
}

impl Preset {
    /// Whether the density is constant on its support.
    pub fn is_flat(&self) -> bool {
        !matches!(self, Preset::VonMisesFisher { .. } | Preset::BallGaussian { .. })
    }

    pub fn is_convex_uniform(&self) -> bool {
        matches!(self, Preset::ConvexBall { .. } | Preset::ConvexBox { .. })
    }
}

pub type DensityFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Axis-aligned box known to contain the support of a custom Euclidean density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxEnvelope {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxEnvelope {
    fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        Point(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect(),
        )
    }
}

#[derive(Clone)]
enum Density {
    Preset(Preset),
    Custom {
        f: DensityFn,
        envelope: Option<BoxEnvelope>,
    },
}

/// Metadata of a target that enters the ergodicity constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMeta {
    /// `sup p`.
    pub p_max: f64,
    /// Diameter of the support `W`.
    pub diam_w: f64,
    /// Largest gap inside the convex hull of a geodesic superlevel set.
    pub delta: f64,
    pub delta_provenance: Provenance,
    /// `sup diam W(x, v)`, `None` when infinite.
    pub lambda: Option<f64>,
    /// Riemannian measure of the support.
    pub support_measure: f64,
    pub has_reference_sampler: bool,
}

impl TargetMeta {
    pub fn lambda_finite(&self) -> bool {
        self.lambda.is_some()
    }

    pub fn lambda_value(&self) -> f64 {
        self.lambda.unwrap_or(f64::INFINITY)
    }
}

/// Metadata supplied alongside a custom density.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomMeta {
    pub p_max: f64,
    pub diam_w: f64,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub envelope: Option<BoxEnvelope>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelMeasure {
    pub value: f64,
    /// Zero for analytic values.
    pub std_error: f64,
}

/// Estimate of the largest geodesic gap; always a statistical lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub value: f64,
    pub grid_step: f64,
    pub lower_bound: bool,
}

/// An unnormalised density on a manifold.
#[derive(Clone)]
pub struct Target {
    manifold: Arc<dyn Manifold>,
    density: Density,
    scale: f64,
    meta: TargetMeta,
    spec: String,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Target")
            .field("spec", &self.spec)
            .field("meta", &self.meta)
            .finish()
    }
}

fn param_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn unit_vector(v: &[f64], dim: usize, what: &str) -> Result<Vec<f64>> {
    if v.len() != dim {
        return Err(param_err(format!("{what} needs {dim} coordinates, got {}", v.len())));
    }
    let n = vecops::norm(v);
    if !(n.is_finite() && n > 0.0) {
        return Err(param_err(format!("{what} must be a nonzero finite vector")));
    }
    Ok(vecops::normalized(v))
}

fn north(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[dim - 1] = 1.0;
    v
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(param_err(format!("{what} must be positive and finite, got {x}")))
    }
}

impl Target {
    /// Instantiates a preset on a built-in geometry.
    pub fn preset(geometry: Geometry, preset: Preset) -> Result<Target> {
        let info = geometry.info();
        let s2_only = |name: &str| -> Result<()> {
            if geometry != (Geometry::Sphere { dim: 2 }) {
                return Err(Error::Unsupported(format!("{name} is only available on sphere:2")));
            }
            Ok(())
        };
        let euclidean = |name: &str| -> Result<usize> {
            match geometry {
                Geometry::Euclidean { dim } => Ok(dim),
                _ => Err(Error::Unsupported(format!("{name} lives on Euclidean space"))),
            }
        };
        let (preset, meta) = match preset {
            Preset::Uniform => {
                if !info.total_measure.is_finite() {
                    return Err(param_err("uniform target needs a manifold of finite volume"));
                }
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: info.diameter,
                    delta: 0.0,
                    delta_provenance: Provenance::Analytic,
                    lambda: None,
                    support_measure: info.total_measure,
                    has_reference_sampler: true,
                };
                (Preset::Uniform, meta)
            }
            Preset::Cap { colatitude, pole } => {
                s2_only("cap")?;
                if !(colatitude > 0.0 && colatitude <= PI) {
                    return Err(param_err(format!("cap colatitude must lie in (0, pi], got {colatitude}")));
                }
                let pole = unit_vector(&pole, 3, "cap pole")?;
                let delta = if colatitude <= PI / 2.0 { 0.0 } else { 2.0 * (PI - colatitude) };
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: (2.0 * colatitude).min(PI),
                    delta,
                    delta_provenance: Provenance::Analytic,
                    lambda: None,
                    support_measure: TAU * (1.0 - colatitude.cos()),
                    has_reference_sampler: true,
                };
                (Preset::Cap { colatitude, pole }, meta)
            }
            Preset::VonMisesFisher { kappa, mean } => {
                s2_only("von Mises-Fisher")?;
                let kappa = positive(kappa, "concentration")?;
                if kappa > 500.0 {
                    return Err(param_err("concentration above 500 overflows the density scale"));
                }
                let mean = unit_vector(&mean, 3, "mean direction")?;
                let meta = TargetMeta {
                    p_max: kappa.exp(),
                    diam_w: PI,
                    delta: 0.0,
                    delta_provenance: Provenance::Analytic,
                    lambda: None,
                    support_measure: 4.0 * PI,
                    has_reference_sampler: true,
                };
                (Preset::VonMisesFisher { kappa, mean }, meta)
            }
            Preset::ConvexBall { radius } => {
                let dim = euclidean("convex-uniform ball")?;
                let radius = positive(radius, "ball radius")?;
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: 2.0 * radius,
                    delta: 0.0,
                    delta_provenance: Provenance::Analytic,
                    lambda: Some(2.0 * radius),
                    support_measure: unit_ball_volume(dim) * radius.powi(dim as i32),
                    has_reference_sampler: true,
                };
                (Preset::ConvexBall { radius }, meta)
            }
            Preset::ConvexBox { extents } => {
                let dim = euclidean("convex-uniform box")?;
                if extents.len() != dim {
                    return Err(param_err(format!("box needs {dim} extents, got {}", extents.len())));
                }
                for &a in &extents {
                    positive(a, "box extent")?;
                }
                let diam = vecops::norm(&extents);
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: diam,
                    delta: 0.0,
                    delta_provenance: Provenance::Analytic,
                    lambda: Some(diam),
                    support_measure: extents.iter().product(),
                    has_reference_sampler: true,
                };
                (Preset::ConvexBox { extents }, meta)
            }
            Preset::BallGaussian { sigma, radius } => {
                let dim = euclidean("ball-gaussian")?;
                let sigma = positive(sigma, "sigma")?;
                let radius = positive(radius, "ball radius")?;
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: 2.0 * radius,
                    delta: 0.0,
                    delta_provenance: Provenance::Analytic,
                    lambda: Some(2.0 * radius),
                    support_measure: unit_ball_volume(dim) * radius.powi(dim as i32),
                    has_reference_sampler: true,
                };
                (Preset::BallGaussian { sigma, radius }, meta)
            }
            Preset::Intervals(set) => {
                if geometry != (Geometry::Euclidean { dim: 1 }) {
                    return Err(Error::Unsupported("interval unions live on euclidean:1".into()));
                }
                if set.is_empty() {
                    return Err(param_err("empty interval set"));
                }
                let meta = TargetMeta {
                    p_max: 1.0,
                    diam_w: set.diameter(),
                    delta: set.gap_within(set.inf(), set.sup()),
                    delta_provenance: Provenance::Analytic,
                    lambda: Some(set.diameter()),
                    support_measure: set.measure(),
                    has_reference_sampler: true,
                };
                (Preset::Intervals(set), meta)
            }
        };
        let spec = canonical_spec(&geometry, &preset);
        Ok(Target {
            manifold: Arc::new(geometry),
            density: Density::Preset(preset),
            scale: 1.0,
            meta,
            spec,
        })
    }

    /// A user-supplied density with user-supplied metadata.
    ///
    /// Without an analytic `delta` the value is estimated by geodesic scans and
    /// flagged as [`Provenance::Estimated`].
    pub fn custom(
        manifold: Arc<dyn Manifold>,
        name: &str,
        density: DensityFn,
        meta: CustomMeta,
    ) -> Result<Target> {
        positive(meta.p_max, "p_max")?;
        positive(meta.diam_w, "support diameter")?;
        if meta.diam_w > manifold.info().diameter * (1.0 + 1e-12) {
            return Err(param_err("support diameter exceeds the manifold diameter"));
        }
        let info = manifold.info();
        let support_measure = if info.total_measure.is_finite() {
            info.total_measure
        } else if let Some(env) = &meta.envelope {
            if env.lo.len() != manifold.ambient_dim() || env.hi.len() != manifold.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    expected: manifold.ambient_dim(),
                    found: env.lo.len(),
                });
            }
            env.volume()
        } else {
            f64::INFINITY
        };
        let mut target = Target {
            manifold,
            density: Density::Custom {
                f: density,
                envelope: meta.envelope.clone(),
            },
            scale: 1.0,
            meta: TargetMeta {
                p_max: meta.p_max,
                diam_w: meta.diam_w,
                delta: meta.delta.unwrap_or(0.0),
                delta_provenance: Provenance::UserSupplied,
                lambda: meta.lambda,
                support_measure,
                has_reference_sampler: false,
            },
            spec: format!("custom:{name}"),
        };
        if meta.delta.is_none() {
            let mut rng = stream(subseed(0, "custom-delta"), 0);
            let est = target.estimate_delta(256, 8, &mut rng)?;
            target.meta.delta = est.value;
            target.meta.delta_provenance = Provenance::Estimated;
        }
        Ok(target)
    }

    /// The same target with density `c * p`.
    pub fn scaled(&self, c: f64) -> Result<Target> {
        positive(c, "scale factor")?;
        let mut out = self.clone();
        out.scale *= c;
        out.meta.p_max *= c;
        Ok(out)
    }

    pub fn manifold(&self) -> &dyn Manifold {
        self.manifold.as_ref()
    }

    pub fn manifold_arc(&self) -> Arc<dyn Manifold> {
        Arc::clone(&self.manifold)
    }

    pub fn geometry(&self) -> Option<Geometry> {
        self.manifold.as_builtin()
    }

    pub fn meta(&self) -> &TargetMeta {
        &self.meta
    }

    pub fn preset_kind(&self) -> Option<&Preset> {
        match &self.density {
            Density::Preset(p) => Some(p),
            Density::Custom { .. } => None,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    /// Whether the support is the whole sphere (up to a null set).
    pub fn has_full_sphere_support(&self) -> bool {
        matches!(self.geometry(), Some(Geometry::Sphere { .. }))
            && matches!(
                self.preset_kind(),
                Some(Preset::Uniform | Preset::VonMisesFisher { .. })
            )
    }

    /// Evaluates the unnormalised density.
    pub fn density(&self, x: &Point) -> f64 {
        let c = x.coords();
        let base = match &self.density {
            Density::Custom { f, .. } => return f(x).max(0.0),
            Density::Preset(p) => match p {
                Preset::Uniform => 1.0,
                Preset::Cap { colatitude, pole } => {
                    if vecops::dot(c, pole) > colatitude.cos() {
                        1.0
                    } else {
                        0.0
                    }
                }
                Preset::VonMisesFisher { kappa, mean } => (kappa * vecops::dot(c, mean)).exp(),
                Preset::ConvexBall { radius } => {
                    if vecops::dot(c, c) < radius * radius {
                        1.0
                    } else {
                        0.0
                    }
                }
                Preset::ConvexBox { extents } => {
                    if c.iter().zip(extents).all(|(x, a)| x.abs() < 0.5 * a) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Preset::BallGaussian { sigma, radius } => {
                    let r2 = vecops::dot(c, c);
                    if r2 < radius * radius {
                        (-r2 / (2.0 * sigma * sigma)).exp()
                    } else {
                        0.0
                    }
                }
                Preset::Intervals(set) => {
                    if set.contains(c[0]) {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
        };
        self.scale * base
    }

    /// `nu(L(t))`, the Riemannian measure of `{p > t}`.
    pub fn level_set_measure(&self, t: f64) -> Result<LevelMeasure> {
        if !(t > 0.0) {
            return Err(param_err(format!("level must be positive, got {t}")));
        }
        match &self.density {
            Density::Preset(p) => Ok(LevelMeasure {
                value: self.preset_level_measure(p, t / self.scale),
                std_error: 0.0,
            }),
            Density::Custom { .. } => Ok(self.level_set_function()?.eval(t)),
        }
    }

    fn preset_level_measure(&self, p: &Preset, u: f64) -> f64 {
        match p {
            Preset::VonMisesFisher { kappa, .. } => {
                let s = (u.ln() / kappa).clamp(-1.0, 1.0);
                TAU * (1.0 - s)
            }
            Preset::BallGaussian { sigma, radius } => {
                if u >= 1.0 {
                    return 0.0;
                }
                let rho = sigma * (-2.0 * u.ln()).sqrt();
                let dim = self.manifold.ambient_dim();
                unit_ball_volume(dim) * rho.min(*radius).powi(dim as i32)
            }
            _ => {
                if u < 1.0 {
                    self.meta.support_measure
                } else {
                    0.0
                }
            }
        }
    }

    /// The level-set function `t -> nu(L(t))`: analytic for presets, a
    /// fixed-sample Monte-Carlo estimate otherwise.
    pub fn level_set_function(&self) -> Result<LevelSetFunction> {
        match &self.density {
            Density::Preset(_) => Ok(LevelSetFunction::Analytic(self.clone())),
            Density::Custom { envelope, .. } => {
                let mut rng = stream(subseed(0, "level-set-mc"), 0);
                let (total, sampler): (f64, PointSampler) =
                    if self.manifold.info().total_measure.is_finite() {
                        let m = Arc::clone(&self.manifold);
                        (
                            m.info().total_measure,
                            Box::new(move |r: &mut dyn RngCore| m.sample_uniform(r).expect("compact")),
                        )
                    } else if let Some(env) = envelope.clone() {
                        (env.volume(), Box::new(move |r: &mut dyn RngCore| env.sample(r)))
                    } else {
                        return Err(Error::Unsupported(
                            "Monte-Carlo level sets need a finite-volume manifold or a box envelope".into(),
                        ));
                    };
                let mut values: Vec<f64> = (0..LEVEL_MC_SAMPLES)
                    .map(|_| self.density(&sampler(&mut rng)))
                    .collect();
                values.sort_by(f64::total_cmp);
                Ok(LevelSetFunction::Empirical { values, total })
            }
        }
    }

    /// `sup_t t * nu(L(t))`.
    pub fn sup_t_level(&self) -> Result<f64> {
        if let Density::Preset(p) = &self.density {
            if p.is_flat() {
                return Ok(self.meta.p_max * self.meta.support_measure);
            }
        }
        let lsf = self.level_set_function()?;
        Ok(maximize_t_level(|t| lsf.eval(t).value, self.meta.p_max))
    }

    /// An exact draw from the normalised target.
    pub fn reference_sample(&self, rng: &mut dyn RngCore) -> Result<Point> {
        let preset = match &self.density {
            Density::Preset(p) => p,
            Density::Custom { .. } => {
                return Err(Error::Unsupported("custom targets have no reference sampler".into()))
            }
        };
        let dim = self.manifold.ambient_dim();
        Ok(match preset {
            Preset::Uniform => self
                .manifold
                .sample_uniform(rng)
                .ok_or_else(|| Error::Unsupported("manifold has infinite volume".into()))?,
            Preset::Cap { colatitude, pole } => {
                let z = 1.0 - open_unit(rng) * (1.0 - colatitude.cos());
                point_about_axis(pole, z, rng)
            }
            Preset::VonMisesFisher { kappa, mean } => {
                let u = open_unit(rng);
                let z = (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0);
                point_about_axis(mean, z, rng)
            }
            Preset::ConvexBall { radius } => Point(uniform_in_ball(dim, *radius, rng)),
            Preset::ConvexBox { extents } => Point(
                extents
                    .iter()
                    .map(|a| a * (open_unit(rng) - 0.5))
                    .collect(),
            ),
            // Either propose from the Gaussian and reject outside the ball, or
            // propose uniformly in the ball and accept by density; whichever
            // wastes fewer draws.
            Preset::BallGaussian { sigma, radius } => loop {
                if *radius > 2.0 * sigma {
                    let g: Vec<f64> = (0..dim).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
                    if vecops::dot(&g, &g) < radius * radius {
                        break Point(g);
                    }
                } else {
                    let x = uniform_in_ball(dim, *radius, rng);
                    let accept = (-vecops::dot(&x, &x) / (2.0 * sigma * sigma)).exp();
                    if rng.random::<f64>() < accept {
                        break Point(x);
                    }
                }
            },
            Preset::Intervals(set) => {
                let total = set.measure();
                let mut pick = open_unit(rng) * total;
                let mut chosen = set.intervals()[set.intervals().len() - 1];
                for &(a, b) in set.intervals() {
                    if pick < b - a {
                        chosen = (a, b);
                        break;
                    }
                    pick -= b - a;
                }
                Point(vec![chosen.0 + (chosen.1 - chosen.0) * open_unit(rng)])
            }
        })
    }

    /// A point of the support, drawn from the reference sampler when
    /// available and by rejection otherwise.
    pub fn sample_support_point(&self, rng: &mut dyn RngCore) -> Result<Point> {
        if self.meta.has_reference_sampler {
            return self.reference_sample(rng);
        }
        let envelope = match &self.density {
            Density::Custom { envelope, .. } => envelope.clone(),
            Density::Preset(_) => None,
        };
        for _ in 0..100_000 {
            let x = match (&envelope, self.manifold.sample_uniform(rng)) {
                (_, Some(x)) => x,
                (Some(env), None) => env.sample(rng),
                (None, None) => {
                    return Err(Error::Unsupported("cannot locate the support without an envelope".into()))
                }
            };
            if self.density(&x) > 0.0 {
                return Ok(x);
            }
        }
        Err(Error::InsufficientData("support not found after 100000 proposals".into()))
    }

    /// Monte-Carlo lower estimate of the largest gap inside the convex hull of
    /// a geodesic superlevel set before the cut time.
    pub fn estimate_delta(
        &self,
        n_geodesics: usize,
        n_levels: usize,
        rng: &mut dyn RngCore,
    ) -> Result<DeltaEstimate> {
        let mut best = 0.0f64;
        let mut step_used = 0.0f64;
        let mut profile = vec![0.0; DELTA_SCAN_POINTS];
        for _ in 0..n_geodesics {
            let x = self.sample_support_point(rng)?;
            let px = self.density(&x);
            let v = self.manifold.sample_unit_tangent(&x, rng)?;
            let range = self.scan_range(&x, &v)?;
            let step = range / DELTA_SCAN_POINTS as f64;
            step_used = step_used.max(step);
            for (k, slot) in profile.iter_mut().enumerate() {
                *slot = if k == 0 {
                    px
                } else {
                    self.density(&self.manifold.exp_map(&x, &v, k as f64 * step)?)
                };
            }
            for _ in 0..n_levels {
                let t = open_unit(rng) * px;
                let last = profile.iter().rposition(|&p| p > t).unwrap_or(0);
                let misses = profile[..=last].iter().filter(|&&p| p <= t).count();
                best = best.max(misses as f64 * step);
            }
        }
        Ok(DeltaEstimate {
            value: best,
            grid_step: step_used,
            lower_bound: true,
        })
    }

    /// Length of the geodesic segment `[0, range)` worth scanning from `x`.
    pub(crate) fn scan_range(&self, x: &Point, v: &TangentVector) -> Result<f64> {
        let cut = self.manifold.cut_time(x, v).value;
        let reach = self.meta.diam_w * (1.0 + 2.0 / DELTA_SCAN_POINTS as f64);
        let range = cut.min(reach);
        if !range.is_finite() {
            return Err(Error::Unsupported("unbounded support along a geodesic".into()));
        }
        Ok(range)
    }

    /// A start point of the kind the uniform bound is hardest on: next to the
    /// support boundary, or at the density minimum.
    pub fn default_start(&self) -> Result<Point> {
        let geometry = self.geometry();
        let preset = self
            .preset_kind()
            .ok_or_else(|| Error::Unsupported("custom targets need an explicit start point".into()))?;
        let dim = self.manifold.ambient_dim();
        let inner = 1.0 - 1e-3;
        Ok(match preset {
            Preset::Uniform => match geometry {
                Some(Geometry::Torus { .. }) => Point(vec![0.0; dim]),
                _ => {
                    let mut e = vec![0.0; dim];
                    e[0] = 1.0;
                    Point(e)
                }
            },
            Preset::Cap { colatitude, pole } => {
                let frame = vecops::frame_with_axis(pole);
                let angle = colatitude * (1.0 - 1e-6);
                let mut x = frame[0].iter().map(|c| c * angle.sin()).collect::<Vec<_>>();
                vecops::axpy(angle.cos(), pole, &mut x);
                Point(vecops::normalized(&x))
            }
            Preset::VonMisesFisher { mean, .. } => Point(mean.iter().map(|c| 0.0 - c).collect()),
            Preset::ConvexBall { radius } | Preset::BallGaussian { radius, .. } => {
                let mut e = vec![0.0; dim];
                e[0] = radius * inner;
                Point(e)
            }
            Preset::ConvexBox { extents } => Point(extents.iter().map(|a| 0.5 * a * inner).collect()),
            Preset::Intervals(set) => {
                let (a, b) = set.intervals()[0];
                Point(vec![a + (b - a) * 1e-3])
            }
        })
    }
}

/// `sup_t t * level(t)` over `(0, p_max)`: a log-uniform grid followed by a
/// golden-section refinement around the best grid point.
pub fn maximize_t_level<F: Fn(f64) -> f64>(level: F, p_max: f64) -> f64 {
    let g = |lt: f64| {
        let t = p_max * lt.exp();
        t * level(t)
    };
    let lo = SUP_GRID_FLOOR.ln();
    let n = SUP_GRID_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| lo + (0.0 - lo) * i as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&lt| g(lt)).collect();
    let (best_i, &best_v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let (mut a, mut b) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(n - 1)]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-9 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    best_v.max(gc).max(gd)
}

/// The level-set function of a target.
#[derive(Debug, Clone)]
pub enum LevelSetFunction {
    Analytic(Target),
    /// Sorted density values at uniform sample points over a region of
    /// measure `total`.
    Empirical { values: Vec<f64>, total: f64 },
}

impl LevelSetFunction {
    pub fn eval(&self, t: f64) -> LevelMeasure {
        match self {
            LevelSetFunction::Analytic(target) => target
                .level_set_measure(t)
                .unwrap_or(LevelMeasure { value: 0.0, std_error: 0.0 }),
            LevelSetFunction::Empirical { values, total } => {
                let n = values.len() as f64;
                let above = values.len() - values.partition_point(|&v| v <= t);
                let frac = above as f64 / n;
                LevelMeasure {
                    value: total * frac,
                    std_error: total * (frac * (1.0 - frac) / n).sqrt(),
                }
            }
        }
    }
}

/// A point at height `z` along `axis` with a uniform azimuth (on `S^2`).
fn point_about_axis(axis: &[f64], z: f64, rng: &mut dyn RngCore) -> Point {
    let frame = vecops::frame_with_axis(axis);
    let phi = TAU * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let mut x: Vec<f64> = axis.iter().map(|c| z * c).collect();
    vecops::axpy(rho * phi.cos(), &frame[0], &mut x);
    vecops::axpy(rho * phi.sin(), &frame[1], &mut x);
    Point(vecops::normalized(&x))
}

fn uniform_in_ball(dim: usize, radius: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = vecops::norm(&g);
        if n == 0.0 {
            continue;
        }
        let r = radius * open_unit(rng).powf(1.0 / dim as f64);
        let x: Vec<f64> = g.iter().map(|c| c / n * r).collect();
        if vecops::dot(&x, &x) < radius * radius {
            return x;
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn canonical_spec(geometry: &Geometry, preset: &Preset) -> String {
    match preset {
        Preset::Uniform => format!("uniform:{geometry}"),
        Preset::Cap { colatitude, pole } => format!("cap:{geometry}:colat={colatitude}:pole={}", fmt_vec(pole)),
        Preset::VonMisesFisher { kappa, mean } => format!("vmf:{geometry}:kappa={kappa}:mu={}", fmt_vec(mean)),
        Preset::ConvexBall { radius } => format!("convex-uniform:ball:{}:r={radius}", geometry.intrinsic_dim()),
        Preset::ConvexBox { extents } => {
            format!("convex-uniform:box:{}:extents={}", geometry.intrinsic_dim(), fmt_vec(extents))
        }
        Preset::BallGaussian { sigma, radius } => format!("ball-gaussian:{geometry}:sigma={sigma}:r={radius}"),
        Preset::Intervals(set) => format!("intervals:{geometry}:set={set}"),
    }
}

fn parse_vec(spec: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| Error::spec(spec, format!("bad number {c:?}: {e}")))
        })
        .collect()
}

struct Params<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str, fields: &[&'a str]) -> Result<Self> {
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::spec(spec, format!("expected key=value, got {f:?}")))?;
            let k = k.trim();
            if pairs.iter().any(|(q, _)| *q == k) {
                return Err(Error::spec(spec, format!("duplicate key {k:?}")));
            }
            pairs.push((k, v.trim()));
        }
        Ok(Params { spec, pairs })
    }

    fn take(&mut self, keys: &[&str]) -> Option<&'a str> {
        let idx = self.pairs.iter().position(|(k, _)| keys.contains(k))?;
        Some(self.pairs.remove(idx).1)
    }

    fn number(&mut self, keys: &[&str]) -> Result<Option<f64>> {
        self.take(keys)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::spec(self.spec, format!("bad value for {}: {e}", keys[0])))
            })
            .transpose()
    }

    fn required(&mut self, keys: &[&str]) -> Result<f64> {
        self.number(keys)?
            .ok_or_else(|| Error::spec(self.spec, format!("missing {}=...", keys[0])))
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(Error::spec(self.spec, format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// Parses preset strings such as `uniform:sphere:2`,
    /// `vmf:sphere:2:kappa=2:mu=0,0,1`, `cap:sphere:2:colat=1.5707963267948966`,
    /// `convex-uniform:ball:2:r=1`, `convex-uniform:box:2:extents=1,2`,
    /// `ball-gaussian:euclidean:2:sigma=1:r=2` or `intervals:euclidean:1:set=0..1,1.3..2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let fields: Vec<&str> = s.split(':').collect();
        let name = fields[0].trim();
        let wrap = |e: Error| match e {
            Error::InvalidSpec { .. } => e,
            other => Error::spec(s, other.to_string()),
        };
        if name == "convex-uniform" {
            let shape = fields.get(1).copied().unwrap_or("");
            let dim = fields
                .get(2)
                .ok_or_else(|| Error::spec(s, "missing dimension"))?
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::spec(s, format!("bad dimension: {e}")))?;
            if dim == 0 || dim > 4096 {
                return Err(Error::spec(s, "dimension must be in 1..=4096"));
            }
            let geometry = Geometry::Euclidean { dim };
            let mut params = Params::parse(s, &fields[3..])?;
            let preset = match shape.trim() {
                "ball" => Preset::ConvexBall {
                    radius: params.number(&["r", "radius"])?.unwrap_or(1.0),
                },
                "box" => Preset::ConvexBox {
                    extents: parse_vec(
                        s,
                        params
                            .take(&["extents", "a"])
                            .ok_or_else(|| Error::spec(s, "missing extents=..."))?,
                    )?,
                },
                other => return Err(Error::spec(s, format!("unknown convex shape {other:?}"))),
            };
            params.finish()?;
            return Target::preset(geometry, preset).map_err(wrap);
        }
        let (geometry, used) = parse_geometry_prefix(s, &fields[1..])?;
        let mut params = Params::parse(s, &fields[1 + used..])?;
        let ambient = geometry.ambient_dim();
        let preset = match name {
            "uniform" | "uniform-manifold" => Preset::Uniform,
            "cap" | "spherical-cap-uniform" => {
                let colatitude = params.required(&["colat", "colatitude"])?;
                let pole = match params.take(&["pole"]) {
                    Some(v) => parse_vec(s, v)?,
                    None => north(ambient),
                };
                Preset::Cap { colatitude, pole }
            }
            "vmf" | "von-mises-fisher" => {
                let kappa = params.required(&["kappa", "concentration"])?;
                let mean = match params.take(&["mu", "mean"]) {
                    Some(v) => parse_vec(s, v)?,
                    None => north(ambient),
                };
                Preset::VonMisesFisher { kappa, mean }
            }
            "ball-gaussian" | "ball-truncated-gaussian" => Preset::BallGaussian {
                sigma: params.required(&["sigma"])?,
                radius: params.required(&["r", "radius"])?,
            },
            "intervals" => {
                let set = params
                    .take(&["set"])
                    .ok_or_else(|| Error::spec(s, "missing set=..."))?
                    .parse::<IntervalSet>()?;
                Preset::Intervals(set)
            }
            other => return Err(Error::spec(s, format!("unknown preset {other:?}"))),
        };
        params.finish()?;
        Target::preset(geometry, preset).map_err(wrap)
    }
}
