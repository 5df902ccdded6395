//! Built-in state spaces: Euclidean space, round spheres and flat tori.
//!
//! Points are stored in embedded coordinates: `d + 1` numbers for the sphere
//! `S^d`, `d` numbers otherwise. Geodesic evaluation renormalizes (sphere) or
//! wraps (torus) its output so long chains do not drift off the manifold.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the on-manifold invariants of points and directions.
pub const MANIFOLD_TOL: f64 = 1e-12;

const MAX_TANGENT_RESAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// A unit direction in the tangent space at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub dir: Vec<f64>,
}

/// Result of a cut-time query. `lower_bound` is set when `value` is only a
/// conservative lower bound on the true cut time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutTime {
    pub value: f64,
    pub lower_bound: bool,
}

/// Geometric constants consumed by the bounds calculator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldInfo {
    pub dim: usize,
    pub diameter: f64,
    /// `zeta` with `(d - 1) * zeta <= min Ric`.
    pub ricci_lower: f64,
    pub injectivity_radius: f64,
    /// Volume of the unit sphere of a `d`-dimensional tangent space.
    pub omega_dm1: f64,
    pub total_measure: f64,
}

/// Plug-in interface for state spaces.
///
/// Implementations outside this crate must supply their own metadata in
/// [`Manifold::info`]; the bounds calculator takes it at face value.
pub trait Manifold: Send + Sync + fmt::Debug {
    /// Length of the coordinate vector of a point.
    fn ambient_dim(&self) -> usize;

    fn info(&self) -> ManifoldInfo;

    /// The geodesic through `x` with initial direction `v`, evaluated at `theta`.
    fn exp_map(&self, x: &Point, v: &TangentVector, theta: f64) -> Result<Point>;

    /// A direction drawn from the uniform distribution on the unit tangent sphere at `x`.
    fn sample_unit_tangent(&self, x: &Point, rng: &mut dyn RngCore) -> Result<TangentVector>;

    fn distance(&self, x: &Point, y: &Point) -> Result<f64>;

    fn cut_time(&self, x: &Point, v: &TangentVector) -> CutTime;

    /// Uniform draw with respect to the Riemannian measure, when it is finite.
    fn sample_uniform(&self, rng: &mut dyn RngCore) -> Option<Point>;

    /// Whether `x` satisfies the point invariants within [`MANIFOLD_TOL`].
    fn contains(&self, x: &Point) -> bool;

    /// Canonical specification string, parseable by [`Geometry::from_str`] for built-ins.
    fn spec(&self) -> String;

    /// The built-in geometry behind this manifold, if any.
    fn as_builtin(&self) -> Option<Geometry> {
        None
    }
}

/// `omega(d)`: the volume of the unit sphere `S^d` in `R^{d+1}`.
pub fn unit_sphere_volume(d: usize) -> f64 {
    // omega_d = 2 pi omega_{d-2} / (d - 1), exact in the low dimensions.
    match d {
        0 => 2.0,
        1 => TAU,
        _ => TAU * unit_sphere_volume(d - 2) / (d - 1) as f64,
    }
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => TAU * unit_ball_volume(d - 2) / d as f64,
    }
}

/// The built-in geometries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Euclidean { dim: usize },
    Sphere { dim: usize },
    Torus { dim: usize, period: f64 },
}

impl Geometry {
    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            Geometry::Euclidean { dim } | Geometry::Sphere { dim } | Geometry::Torus { dim, .. } => dim,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let expected = self.ambient_dim();
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn wrap(period: f64, c: f64) -> f64 {
        let r = c.rem_euclid(period);
        if r >= period {
            0.0
        } else {
            r
        }
    }

    /// Brings `x` back onto the manifold: renormalize on the sphere, wrap on the torus.
    pub fn project(&self, x: &mut [f64]) {
        match *self {
            Geometry::Euclidean { .. } => {}
            Geometry::Sphere { .. } => {
                let n = vecops::norm(x);
                if n > 0.0 {
                    x.iter_mut().for_each(|c| *c /= n);
                }
            }
            Geometry::Torus { period, .. } => {
                x.iter_mut().for_each(|c| *c = Self::wrap(period, *c));
            }
        }
    }
}

impl Manifold for Geometry {
    fn ambient_dim(&self) -> usize {
        match *self {
            Geometry::Sphere { dim } => dim + 1,
            Geometry::Euclidean { dim } | Geometry::Torus { dim, .. } => dim,
        }
    }

    fn info(&self) -> ManifoldInfo {
        let dim = self.intrinsic_dim();
        let omega_dm1 = unit_sphere_volume(dim - 1);
        match *self {
            Geometry::Euclidean { .. } => ManifoldInfo {
                dim,
                diameter: f64::INFINITY,
                ricci_lower: 0.0,
                injectivity_radius: f64::INFINITY,
                omega_dm1,
                total_measure: f64::INFINITY,
            },
            Geometry::Sphere { .. } => ManifoldInfo {
                dim,
                diameter: PI,
                ricci_lower: if dim >= 2 { 1.0 } else { 0.0 },
                injectivity_radius: PI,
                omega_dm1,
                total_measure: unit_sphere_volume(dim),
            },
            Geometry::Torus { period, .. } => ManifoldInfo {
                dim,
                diameter: 0.5 * period * (dim as f64).sqrt(),
                ricci_lower: 0.0,
                injectivity_radius: 0.5 * period,
                omega_dm1,
                total_measure: period.powi(dim as i32),
            },
        }
    }

    fn exp_map(&self, x: &Point, v: &TangentVector, theta: f64) -> Result<Point> {
        self.check_dim(&x.0)?;
        self.check_dim(&v.dir)?;
        if theta == 0.0 {
            return Ok(x.clone());
        }
        let mut out = match *self {
            Geometry::Sphere { .. } => {
                let (s, c) = theta.sin_cos();
                x.0.iter().zip(&v.dir).map(|(a, b)| c * a + s * b).collect::<Vec<_>>()
            }
            Geometry::Euclidean { .. } | Geometry::Torus { .. } => {
                x.0.iter().zip(&v.dir).map(|(a, b)| a + theta * b).collect::<Vec<_>>()
            }
        };
        self.project(&mut out);
        Ok(Point(out))
    }

    fn sample_unit_tangent(&self, x: &Point, rng: &mut dyn RngCore) -> Result<TangentVector> {
        self.check_dim(&x.0)?;
        let n = self.ambient_dim();
        for _ in 0..MAX_TANGENT_RESAMPLES {
            let mut g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            if let Geometry::Sphere { .. } = self {
                let proj = vecops::dot(&g, &x.0);
                vecops::axpy(-proj, &x.0, &mut g);
            }
            let len = vecops::norm(&g);
            if len > 1e-300 && len.is_finite() {
                g.iter_mut().for_each(|c| *c /= len);
                return Ok(TangentVector {
                    base: x.clone(),
                    dir: g,
                });
            }
        }
        Err(Error::BrokenRng)
    }

    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_dim(&x.0)?;
        self.check_dim(&y.0)?;
        Ok(match *self {
            Geometry::Euclidean { .. } => vecops::dist(&x.0, &y.0),
            Geometry::Sphere { .. } => {
                let (mut d2, mut s2) = (0.0, 0.0);
                for (a, b) in x.0.iter().zip(&y.0) {
                    d2 += (a - b) * (a - b);
                    s2 += (a + b) * (a + b);
                }
                2.0 * d2.sqrt().atan2(s2.sqrt())
            }
            Geometry::Torus { period, .. } => x
                .0
                .iter()
                .zip(&y.0)
                .map(|(a, b)| {
                    let d = (a - b).rem_euclid(period);
                    let d = d.min(period - d);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        })
    }

    fn cut_time(&self, _x: &Point, v: &TangentVector) -> CutTime {
        match *self {
            Geometry::Euclidean { .. } => CutTime {
                value: f64::INFINITY,
                lower_bound: false,
            },
            Geometry::Sphere { .. } => CutTime {
                value: PI,
                lower_bound: false,
            },
            Geometry::Torus { period, .. } => {
                let axis_aligned = v.dir.iter().filter(|c| c.abs() > MANIFOLD_TOL).count() == 1;
                CutTime {
                    value: 0.5 * period,
                    lower_bound: !axis_aligned,
                }
            }
        }
    }

    fn sample_uniform(&self, rng: &mut dyn RngCore) -> Option<Point> {
        match *self {
            Geometry::Euclidean { .. } => None,
            Geometry::Sphere { dim } => loop {
                let mut g: Vec<f64> = (0..=dim).map(|_| StandardNormal.sample(rng)).collect();
                let len = vecops::norm(&g);
                if len > 1e-300 {
                    g.iter_mut().for_each(|c| *c /= len);
                    return Some(Point(g));
                }
            },
            Geometry::Torus { dim, period } => {
                use rand::Rng;
                Some(Point(
                    (0..dim)
                        .map(|_| Self::wrap(period, rng.random::<f64>() * period))
                        .collect(),
                ))
            }
        }
    }

    fn contains(&self, x: &Point) -> bool {
        if x.len() != self.ambient_dim() || x.0.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match *self {
            Geometry::Euclidean { .. } => true,
            Geometry::Sphere { .. } => (vecops::norm(&x.0) - 1.0).abs() <= MANIFOLD_TOL,
            Geometry::Torus { period, .. } => x.0.iter().all(|&c| (0.0..period).contains(&c)),
        }
    }

    fn spec(&self) -> String {
        self.to_string()
    }

    fn as_builtin(&self) -> Option<Geometry> {
        Some(*self)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Geometry::Sphere { dim } => write!(f, "sphere:{dim}"),
            Geometry::Torus { dim, period } => write!(f, "torus:{dim}:{period}"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    /// Parses `euclidean:<d>`, `sphere:<d>` or `torus:<d>:<period>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let (geometry, used) = parse_geometry_prefix(s, &parts)?;
        if used != parts.len() {
            return Err(Error::spec(s, "trailing fields after manifold"));
        }
        Ok(geometry)
    }
}

/// Parses a manifold from the leading `parts`, returning how many fields it consumed.
pub(crate) fn parse_geometry_prefix(spec: &str, parts: &[&str]) -> Result<(Geometry, usize)> {
    let kind = parts.first().copied().unwrap_or("");
    let dim = parts
        .get(1)
        .ok_or_else(|| Error::spec(spec, "missing dimension"))?
        .trim()
        .parse::<usize>()
        .map_err(|e| Error::spec(spec, format!("bad dimension: {e}")))?;
    if dim == 0 {
        return Err(Error::spec(spec, "dimension must be at least 1"));
    }
    if dim > 4096 {
        return Err(Error::spec(spec, "dimension above 4096 is not supported"));
    }
    match kind.trim() {
        "euclidean" | "R" | "r" => Ok((Geometry::Euclidean { dim }, 2)),
        "sphere" | "S" | "s" => Ok((Geometry::Sphere { dim }, 2)),
        "torus" | "T" | "t" => {
            let period = parts
                .get(2)
                .ok_or_else(|| Error::spec(spec, "torus needs a period"))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::spec(spec, format!("bad period: {e}")))?;
            if !(period.is_finite() && period > 0.0) {
                return Err(Error::spec(spec, "torus period must be positive and finite"));
            }
            Ok((Geometry::Torus { dim, period }, 3))
        }
        other => Err(Error::spec(spec, format!("unknown manifold kind {other:?}"))),
    }
}

/// Small dense-vector helpers shared across modules.
pub(crate) mod vecops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// `y += alpha * x`
    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    }

    pub fn normalized(a: &[f64]) -> Vec<f64> {
        let n = norm(a);
        a.iter().map(|c| c / n).collect()
    }

    /// An orthonormal frame whose last vector is `axis` (assumed unit length).
    pub fn frame_with_axis(axis: &[f64]) -> Vec<Vec<f64>> {
        let n = axis.len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut candidates = (0..n).map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        });
        let mut done: Vec<Vec<f64>> = vec![axis.to_vec()];
        while basis.len() + 1 < n {
            let mut c = candidates.next().expect("enough canonical vectors");
            for b in &done {
                let p = dot(&c, b);
                axpy(-p, b, &mut c);
            }
            if norm(&c) > 1e-6 {
                let c = normalized(&c);
                done.push(c.clone());
                basis.push(c);
            }
        }
        basis.push(axis.to_vec());
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::f64::consts::FRAC_PI_2;

    fn tv(base: &[f64], dir: &[f64]) -> TangentVector {
        TangentVector {
            base: Point(base.to_vec()),
            dir: dir.to_vec(),
        }
    }

    #[test]
    fn exp_map_at_zero_is_identity() {
        let s2 = Geometry::Sphere { dim: 2 };
        let x = Point(vec![0.6, 0.0, 0.8]);
        let v = tv(&x.0, &[0.8, 0.0, -0.6]);
        assert_eq!(s2.exp_map(&x, &v, 0.0).unwrap(), x);
    }

    /// Integrates the geodesic ODE x'' = -|x'|^2 x of the embedded sphere with RK4.
    fn integrate_sphere_geodesic(x: &[f64], v: &[f64], t: f64, steps: usize) -> Vec<f64> {
        let h = t / steps as f64;
        let n = x.len();
        let f = |s: &[f64]| -> Vec<f64> {
            let (p, q) = s.split_at(n);
            let speed2: f64 = q.iter().map(|c| c * c).sum();
            q.iter().copied().chain(p.iter().map(|c| -speed2 * c)).collect()
        };
        let mut s: Vec<f64> = x.iter().chain(v).copied().collect();
        for _ in 0..steps {
            let k1 = f(&s);
            let s2: Vec<f64> = s.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
            let k2 = f(&s2);
            let s3: Vec<f64> = s.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
            let k3 = f(&s3);
            let s4: Vec<f64> = s.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
            let k4 = f(&s4);
            for i in 0..s.len() {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        s.truncate(n);
        s
    }

    #[test]
    fn sphere_quarter_turn_matches_ode() {
        let s2 = Geometry::Sphere { dim: 2 };
        let x = Point(vec![0.0, 0.0, 1.0]);
        let v = tv(&x.0, &[1.0, 0.0, 0.0]);
        let y = s2.exp_map(&x, &v, FRAC_PI_2).unwrap();
        let ode = integrate_sphere_geodesic(&x.0, &v.dir, FRAC_PI_2, 2000);
        for (a, b) in y.0.iter().zip(&ode) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in y.0.iter().zip(&[1.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn euclidean_straight_line() {
        let r2 = Geometry::Euclidean { dim: 2 };
        let x = Point(vec![1.0, 2.0]);
        let y = r2.exp_map(&x, &tv(&x.0, &[0.0, 1.0]), 3.0).unwrap();
        assert_eq!(y.0, vec![1.0, 5.0]);
    }

    #[test]
    fn exp_map_rejects_dimension_mismatch() {
        let s2 = Geometry::Sphere { dim: 2 };
        let x = Point(vec![0.0, 1.0]);
        let err = s2.exp_map(&x, &tv(&x.0, &[1.0, 0.0]), 1.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn tangent_on_sphere_is_orthogonal_unit() {
        let s2 = Geometry::Sphere { dim: 2 };
        let x = Point(vec![0.0, 0.0, 1.0]);
        let mut rng = stream(1, 0);
        for _ in 0..1000 {
            let v = s2.sample_unit_tangent(&x, &mut rng).unwrap();
            assert!(v.dir[2].abs() < 1e-12);
            assert!((vecops::norm(&v.dir) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_tangent_is_balanced() {
        let s1 = Geometry::Sphere { dim: 1 };
        let x = Point(vec![0.6, 0.8]);
        let rot = [-0.8, 0.6];
        let mut rng = stream(2, 0);
        let n = 10_000;
        let mut plus = 0;
        for _ in 0..n {
            let v = s1.sample_unit_tangent(&x, &mut rng).unwrap();
            let d = vecops::dot(&v.dir, &rot);
            assert!((d.abs() - 1.0).abs() < 1e-12);
            if d > 0.0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01 + 3.0 * (0.25 / n as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn planar_tangent_angles_are_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let r2 = Geometry::Euclidean { dim: 2 };
        let x = Point(vec![0.0, 0.0]);
        let mut rng = stream(3, 0);
        let n = 100_000;
        let mut counts = [0usize; 36];
        for _ in 0..n {
            let v = r2.sample_unit_tangent(&x, &mut rng).unwrap();
            let a = v.dir[1].atan2(v.dir[0]).rem_euclid(2.0 * PI);
            counts[((a / (2.0 * PI) * 36.0) as usize).min(35)] += 1;
        }
        let e = n as f64 / 36.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(35.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn distances() {
        let s2 = Geometry::Sphere { dim: 2 };
        let n = Point(vec![0.0, 0.0, 1.0]);
        let s = Point(vec![0.0, 0.0, -1.0]);
        assert_eq!(s2.distance(&n, &n).unwrap(), 0.0);
        assert!((s2.distance(&n, &s).unwrap() - PI).abs() < 1e-15);

        let t = Geometry::Torus { dim: 2, period: 2.0 * PI };
        let d = t
            .distance(&Point(vec![0.1, 0.0]), &Point(vec![6.2, 0.0]))
            .unwrap();
        // Oracle: minimum over lattice shifts k * 2pi of |0.1 - 6.2 + k 2pi|.
        let oracle = (-3..=3)
            .map(|k| (0.1 - 6.2 + k as f64 * 2.0 * PI).abs())
            .fold(f64::INFINITY, f64::min);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 0.1832).abs() < 1e-4);
    }

    #[test]
    fn cut_times() {
        let r3 = Geometry::Euclidean { dim: 3 };
        let x = Point(vec![0.0; 3]);
        assert_eq!(r3.cut_time(&x, &tv(&x.0, &[1.0, 0.0, 0.0])).value, f64::INFINITY);
        let s3 = Geometry::Sphere { dim: 3 };
        let y = Point(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s3.cut_time(&y, &tv(&y.0, &[0.0, 1.0, 0.0, 0.0])).value, PI);
        let t = Geometry::Torus { dim: 2, period: 2.0 * PI };
        let z = Point(vec![1.0, 1.0]);
        let axis = t.cut_time(&z, &tv(&z.0, &[0.0, 1.0]));
        assert_eq!(axis, CutTime { value: PI, lower_bound: false });
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let generic = t.cut_time(&z, &tv(&z.0, &[s, s]));
        assert_eq!(generic, CutTime { value: PI, lower_bound: true });
    }

    #[test]
    fn metadata() {
        let s2 = Geometry::Sphere { dim: 2 }.info();
        assert_eq!(s2.ricci_lower, 1.0);
        assert_eq!(s2.diameter, PI);
        assert!((s2.omega_dm1 - 2.0 * PI).abs() < 1e-12);
        assert!((s2.total_measure - 4.0 * PI).abs() < 1e-12);
        let s1 = Geometry::Sphere { dim: 1 }.info();
        assert_eq!(s1.ricci_lower, 0.0);
        assert!((s1.omega_dm1 - 2.0).abs() < 1e-12);
        assert_eq!(Geometry::Torus { dim: 3, period: 1.0 }.info().ricci_lower, 0.0);
        assert_eq!(Geometry::Euclidean { dim: 3 }.info().ricci_lower, 0.0);
    }

    #[test]
    fn omega_ratio_lower_bound() {
        for d in 1..=20 {
            let ratio = unit_sphere_volume(d) / unit_sphere_volume(d - 1);
            assert!(ratio >= (2.0 * PI / d as f64).sqrt(), "d = {d}");
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!("sphere:2".parse::<Geometry>().unwrap(), Geometry::Sphere { dim: 2 });
        assert_eq!(
            "torus:3:6.5".parse::<Geometry>().unwrap(),
            Geometry::Torus { dim: 3, period: 6.5 }
        );
        for bad in ["", "sphere", "sphere:0", "torus:2", "torus:2:-1", "cube:3", "sphere:2:1"] {
            assert!(bad.parse::<Geometry>().is_err(), "{bad}");
        }
        let g = Geometry::Torus { dim: 2, period: 2.5 };
        assert_eq!(g.to_string().parse::<Geometry>().unwrap(), g);
    }

    #[test]
    fn frame_is_orthonormal() {
        let axis = vecops::normalized(&[1.0, 2.0, 2.0]);
        let f = vecops::frame_with_axis(&axis);
        for i in 0..3 {
            for j in 0..3 {
                let d = vecops::dot(&f[i], &f[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert_eq!(f[2], axis);
    }
}
