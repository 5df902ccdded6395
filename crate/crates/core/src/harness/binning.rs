//! Partitions of the state space with exact target masses per bin.

use std::f64::consts::TAU;

use serde::Serialize;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::manifold::{vecops, Geometry, Manifold, Point};
use crate::target::{Preset, Target};

/// Distribution function of the axial coordinate on the sphere.
type AxisCdf = Box<dyn Fn(f64) -> f64>;

/// Bin-count overrides; `None` selects the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BinSpec {
    /// Equal-angle bins on the circle (default 64).
    pub circle_bins: Option<usize>,
    /// Latitude bands on `S^2` (default 16).
    pub bands: Option<usize>,
    /// Longitude sectors on `S^2` (default 32).
    pub sectors: Option<usize>,
    /// Grid cells per axis in flat spaces (default 32, capped so the total
    /// stays at or below 4096).
    pub per_axis: Option<usize>,
}

pub const MAX_GRID_BINS: usize = 4096;
/// Radial shells used for rotationally symmetric targets off the plane grid.
pub const RADIAL_SHELLS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
enum Scheme {
    /// Equal-angle sectors of the circle.
    Circle { bins: usize },
    /// Bands of equal height in `z = <x, axis>` over `(z_lo, 1)`, each cut
    /// into equal longitude sectors.
    SphereBands {
        frame: [Vec<f64>; 3],
        z_lo: f64,
        bands: usize,
        sectors: usize,
    },
    /// Uniform grid on the box `[lo, hi)`.
    Grid { lo: Vec<f64>, hi: Vec<f64>, per_axis: usize },
    /// Shells of radius `edges` crossed with the sign orthant of the first
    /// `orthant_dims` coordinates.
    Radial { edges: Vec<f64>, orthant_dims: usize },
}

/// A partition of the state space together with the target mass of each bin.
///
/// Points that fall outside every bin (outside the target support) are
/// counted against a phantom bin of mass zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    scheme: Scheme,
    masses: Vec<f64>,
    dim: usize,
    description: String,
}

impl Binning {
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The default partition for a preset target.
    pub fn for_target(target: &Target, spec: BinSpec) -> Result<Binning> {
        let preset = target
            .preset_kind()
            .ok_or_else(|| Error::Unsupported("binning needs a preset target with known bin masses".into()))?;
        let geometry = target
            .geometry()
            .ok_or_else(|| Error::Unsupported("binning needs a built-in geometry".into()))?;
        let positive = |v: Option<usize>, default: usize, what: &str| -> Result<usize> {
            match v {
                Some(0) => Err(Error::InvalidParameter(format!("{what} must be positive"))),
                Some(k) => Ok(k),
                None => Ok(default),
            }
        };
        let dim = geometry.ambient_dim();
        let binning = match (geometry, preset) {
            (Geometry::Sphere { dim: 1 }, Preset::Uniform) => {
                let bins = positive(spec.circle_bins, 64, "circle bins")?;
                Binning {
                    scheme: Scheme::Circle { bins },
                    masses: vec![1.0 / bins as f64; bins],
                    dim,
                    description: format!("{bins} equal-angle sectors"),
                }
            }
            (Geometry::Sphere { dim: 2 }, _) => {
                let bands = positive(spec.bands, 16, "bands")?;
                let sectors = positive(spec.sectors, 32, "sectors")?;
                let (axis, z_lo, cdf): (Vec<f64>, f64, AxisCdf) = match preset {
                    Preset::Uniform => (vec![0.0, 0.0, 1.0], -1.0, Box::new(|z| (z + 1.0) / 2.0)),
                    Preset::Cap { colatitude, pole } => {
                        let c = colatitude.cos();
                        (pole.clone(), c, Box::new(move |z| (z - c) / (1.0 - c)))
                    }
                    Preset::VonMisesFisher { kappa, mean } => {
                        let k = *kappa;
                        let floor = (-2.0 * k).exp();
                        (
                            mean.clone(),
                            -1.0,
                            Box::new(move |z| ((k * (z - 1.0)).exp() - floor) / (1.0 - floor)),
                        )
                    }
                    _ => return Err(Error::Unsupported("no binning for this target on S^2".into())),
                };
                let fr = vecops::frame_with_axis(&axis);
                let frame = [fr[0].clone(), fr[1].clone(), axis];
                let mut masses = Vec::with_capacity(bands * sectors);
                for b in 0..bands {
                    let z0 = z_lo + (1.0 - z_lo) * b as f64 / bands as f64;
                    let z1 = z_lo + (1.0 - z_lo) * (b + 1) as f64 / bands as f64;
                    let band = (cdf(z1) - cdf(z0)).max(0.0);
                    masses.extend(std::iter::repeat_n(band / sectors as f64, sectors));
                }
                Binning {
                    scheme: Scheme::SphereBands { frame, z_lo, bands, sectors },
                    masses,
                    dim,
                    description: format!("{bands} equal-height bands x {sectors} sectors"),
                }
            }
            (Geometry::Torus { dim: d, period }, Preset::Uniform) => {
                let k = grid_per_axis(spec.per_axis, d)?;
                Binning {
                    scheme: Scheme::Grid {
                        lo: vec![0.0; d],
                        hi: vec![period; d],
                        per_axis: k,
                    },
                    masses: vec![1.0 / (k.pow(d as u32)) as f64; k.pow(d as u32)],
                    dim,
                    description: format!("{k}^{d} grid"),
                }
            }
            (Geometry::Euclidean { dim: d }, Preset::ConvexBox { extents }) => {
                let k = grid_per_axis(spec.per_axis, d)?;
                Binning {
                    scheme: Scheme::Grid {
                        lo: extents.iter().map(|a| -a / 2.0).collect(),
                        hi: extents.iter().map(|a| a / 2.0).collect(),
                        per_axis: k,
                    },
                    masses: vec![1.0 / (k.pow(d as u32)) as f64; k.pow(d as u32)],
                    dim,
                    description: format!("{k}^{d} grid"),
                }
            }
            (Geometry::Euclidean { dim: 2 }, Preset::ConvexBall { radius }) => {
                let k = grid_per_axis(spec.per_axis, 2)?;
                let r = *radius;
                let edge = |i: usize| -r + 2.0 * r * i as f64 / k as f64;
                let total = std::f64::consts::PI * r * r;
                let mut masses = Vec::with_capacity(k * k);
                for i in 0..k {
                    for j in 0..k {
                        let a = disk_rect_area(edge(i), edge(i + 1), edge(j), edge(j + 1), r);
                        masses.push(a / total);
                    }
                }
                Binning {
                    scheme: Scheme::Grid {
                        lo: vec![-r, -r],
                        hi: vec![r, r],
                        per_axis: k,
                    },
                    masses,
                    dim,
                    description: format!("{k}^2 grid with exact disk masses"),
                }
            }
            (Geometry::Euclidean { dim: d }, Preset::ConvexBall { radius } | Preset::BallGaussian { radius, .. }) => {
                let radial_cdf: Box<dyn Fn(f64) -> f64> = match preset {
                    Preset::BallGaussian { sigma, .. } => {
                        let s = *sigma;
                        let a = d as f64 / 2.0;
                        let norm = gamma_lr(a, radius * radius / (2.0 * s * s));
                        Box::new(move |r: f64| if r > 0.0 { gamma_lr(a, r * r / (2.0 * s * s)) / norm } else { 0.0 })
                    }
                    _ => {
                        let rr = *radius;
                        Box::new(move |r: f64| (r / rr).powi(d as i32))
                    }
                };
                let edges: Vec<f64> = (0..=RADIAL_SHELLS)
                    .map(|i| radius * i as f64 / RADIAL_SHELLS as f64)
                    .collect();
                let orthant_dims = d.min(3);
                let orthants = 1usize << orthant_dims;
                let mut masses = Vec::with_capacity(RADIAL_SHELLS * orthants);
                for s in 0..RADIAL_SHELLS {
                    let shell = radial_cdf(edges[s + 1]) - radial_cdf(edges[s]);
                    masses.extend(std::iter::repeat_n(shell / orthants as f64, orthants));
                }
                Binning {
                    scheme: Scheme::Radial { edges, orthant_dims },
                    masses,
                    dim,
                    description: format!("{RADIAL_SHELLS} radial shells x {orthants} orthants"),
                }
            }
            (Geometry::Euclidean { dim: 1 }, Preset::Intervals(set)) => {
                let k = positive(spec.per_axis, 32, "cells per axis")?;
                let (lo, hi) = (set.inf(), set.sup());
                let total = set.measure();
                let masses = (0..k)
                    .map(|i| {
                        let a = lo + (hi - lo) * i as f64 / k as f64;
                        let b = lo + (hi - lo) * (i + 1) as f64 / k as f64;
                        set.measure_within(a, b) / total
                    })
                    .collect();
                Binning {
                    scheme: Scheme::Grid {
                        lo: vec![lo],
                        hi: vec![hi],
                        per_axis: k,
                    },
                    masses,
                    dim,
                    description: format!("{k} cells"),
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "no binning with exact masses for {}",
                    target.spec()
                )))
            }
        };
        let sum: f64 = binning.masses.iter().sum();
        debug_assert!((sum - 1.0).abs() < 1e-10, "bin masses sum to {sum}");
        Ok(binning)
    }

    /// Index of the bin containing `x`; `None` outside every bin.
    pub fn locate(&self, x: &Point) -> Result<Option<usize>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let c = x.coords();
        Ok(match &self.scheme {
            Scheme::Circle { bins } => {
                let a = c[1].atan2(c[0]).rem_euclid(TAU);
                Some(((a / TAU * *bins as f64) as usize).min(bins - 1))
            }
            Scheme::SphereBands { frame, z_lo, bands, sectors } => {
                let z = vecops::dot(c, &frame[2]);
                if z <= *z_lo {
                    return Ok(None);
                }
                let b = (((z - z_lo) / (1.0 - z_lo) * *bands as f64) as usize).min(bands - 1);
                let phi = vecops::dot(c, &frame[1]).atan2(vecops::dot(c, &frame[0])).rem_euclid(TAU);
                let s = ((phi / TAU * *sectors as f64) as usize).min(sectors - 1);
                Some(b * sectors + s)
            }
            Scheme::Grid { lo, hi, per_axis } => {
                let mut idx = 0usize;
                for k in 0..c.len() {
                    let u = (c[k] - lo[k]) / (hi[k] - lo[k]);
                    if !(0.0..1.0).contains(&u) {
                        return Ok(None);
                    }
                    idx = idx * per_axis + ((u * *per_axis as f64) as usize).min(per_axis - 1);
                }
                Some(idx)
            }
            Scheme::Radial { edges, orthant_dims } => {
                let r = vecops::norm(c);
                let rmax = *edges.last().expect("non-empty edges");
                if r >= rmax {
                    return Ok(None);
                }
                let shell = ((r / rmax * (edges.len() - 1) as f64) as usize).min(edges.len() - 2);
                let orthant = (0..*orthant_dims).fold(0usize, |acc, k| (acc << 1) | usize::from(c[k] >= 0.0));
                Some(shell * (1 << orthant_dims) + orthant)
            }
        })
    }

    /// Bin counts plus the number of points outside every bin.
    pub fn counts(&self, points: &[Point]) -> Result<(Vec<u64>, u64)> {
        let mut counts = vec![0u64; self.len()];
        let mut outside = 0u64;
        for p in points {
            match self.locate(p)? {
                Some(i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        Ok((counts, outside))
    }
}

fn grid_per_axis(requested: Option<usize>, d: usize) -> Result<usize> {
    if let Some(k) = requested {
        if k == 0 || (k as f64).powi(d as i32) > 1e7 {
            return Err(Error::InvalidParameter(format!("{k} cells per axis is unusable in dimension {d}")));
        }
        return Ok(k);
    }
    let mut k = 32usize;
    while k > 1 && k.checked_pow(d as u32).is_none_or(|n| n > MAX_GRID_BINS) {
        k -= 1;
    }
    Ok(k)
}

/// Area of `{u < x, v < y}` inside the disk of radius `r` about the origin.
fn disk_lower_left(x: f64, y: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    let y = y.clamp(-r, r);
    let prim = |u: f64| (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin()) / 2.0;
    let half_chord = |lo: f64, hi: f64| {
        let hi = hi.min(x);
        if hi > lo {
            prim(hi) - prim(lo)
        } else {
            0.0
        }
    };
    let span = |lo: f64, hi: f64| (hi.min(x) - lo).max(0.0);
    let a = (r * r - y * y).max(0.0).sqrt();
    // Columns with |u| >= a have chord half-length <= |y|: fully below y when
    // y >= 0 and fully above when y < 0.
    let outer = if y >= 0.0 {
        2.0 * (half_chord(-r, -a) + half_chord(a, r))
    } else {
        0.0
    };
    let inner = y * span(-a, a) + half_chord(-a, a);
    outer + inner
}

/// Area of the rectangle `[x0, x1] x [y0, y1]` inside the disk of radius `r`.
pub fn disk_rect_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    (disk_lower_left(x1, y1, r) - disk_lower_left(x0, y1, r) - disk_lower_left(x1, y0, r) + disk_lower_left(x0, y0, r))
        .max(0.0)
}
