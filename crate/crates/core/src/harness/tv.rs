//! Binned total-variation distance to the target, with bootstrap errors.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::binning::Binning;
use crate::error::{Error, Result};
use crate::manifold::Point;
use crate::rng::stream;

pub const MIN_TV_POINTS: usize = 1000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    /// Half-L1 distance between bin frequencies and target bin masses.
    pub tv: f64,
    /// Bootstrap standard error.
    pub se: f64,
    /// Expected value of the estimate for an exact sample: the estimator's
    /// positive bias, of order `sqrt(bins / n)`.
    pub bias: f64,
    pub n: usize,
}

impl TvEstimate {
    /// Whether the estimate is consistent with a true distance of at most `bound`.
    pub fn within(&self, bound: f64) -> bool {
        self.tv <= bound + 3.0 * self.se + self.bias
    }
}

/// Expected half-L1 error of multinomial frequencies with `n` draws, under
/// the normal approximation to each bin count.
pub fn null_bias(masses: &[f64], n: usize) -> f64 {
    0.5 * masses
        .iter()
        .map(|&p| (2.0 * p * (1.0 - p) / (PI * n as f64)).sqrt())
        .sum::<f64>()
}

fn half_l1(counts: &[u64], outside: u64, masses: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    let inside: f64 = counts
        .iter()
        .zip(masses)
        .map(|(&c, &p)| (c as f64 / nf - p).abs())
        .sum();
    0.5 * (inside + outside as f64 / nf)
}

/// Estimates the total-variation distance between the empirical law of
/// `points` and the target, through `binning`.
///
/// The bootstrap resample `b` draws from `stream(seed, b)`.
pub fn estimate_tv(points: &[Point], binning: &Binning, seed: u64) -> Result<TvEstimate> {
    let n = points.len();
    if n < MIN_TV_POINTS {
        return Err(Error::InsufficientData(format!(
            "total-variation estimation needs at least {MIN_TV_POINTS} points, got {n}"
        )));
    }
    let outside_slot = binning.len();
    let labels: Vec<usize> = points
        .iter()
        .map(|p| binning.locate(p).map(|b| b.unwrap_or(outside_slot)))
        .collect::<Result<_>>()?;
    let tally = |idx: &mut dyn Iterator<Item = usize>| {
        let mut counts = vec![0u64; outside_slot + 1];
        for i in idx {
            counts[i] += 1;
        }
        let outside = counts.pop().expect("outside slot");
        half_l1(&counts, outside, binning.masses(), n)
    };
    let tv = tally(&mut labels.iter().copied());
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            tally(&mut (0..n).map(|_| labels[rng.random_range(0..n)]))
        })
        .collect();
    let mean = boot.iter().sum::<f64>() / boot.len() as f64;
    let var = boot.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64;
    Ok(TvEstimate {
        tv,
        se: var.sqrt(),
        bias: null_bias(binning.masses(), n),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::binning::BinSpec;
    use crate::target::Target;

    #[test]
    fn degenerate_sample_in_one_bin() {
        // 50 equal bins of mass 0.02 on the circle.
        let target: Target = "uniform:sphere:1".parse().unwrap();
        let spec = BinSpec {
            circle_bins: Some(50),
            ..BinSpec::default()
        };
        let b = Binning::for_target(&target, spec).unwrap();
        let pts = vec![Point(vec![1.0, 1e-6]); 2000];
        let est = estimate_tv(&pts, &b, 1).unwrap();
        assert!((est.tv - 0.98).abs() < 1e-12);
        assert!(est.se < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let target: Target = "uniform:sphere:1".parse().unwrap();
        let b = Binning::for_target(&target, BinSpec::default()).unwrap();
        assert!(estimate_tv(&vec![Point(vec![1.0, 0.0]); 999], &b, 1).is_err());
    }

    #[test]
    fn outside_points_count_fully() {
        let target: Target = "convex-uniform:ball:2:r=1".parse().unwrap();
        let b = Binning::for_target(&target, BinSpec::default()).unwrap();
        let pts = vec![Point(vec![5.0, 5.0]); 1000];
        assert!((estimate_tv(&pts, &b, 1).unwrap().tv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_samples_are_within_noise() {
        let target: Target = "uniform:sphere:1".parse().unwrap();
        let spec = BinSpec {
            circle_bins: Some(50),
            ..BinSpec::default()
        };
        let b = Binning::for_target(&target, spec).unwrap();
        let mut rng = stream(3, 0);
        let pts: Vec<Point> = (0..100_000).map(|_| target.reference_sample(&mut rng).unwrap()).collect();
        let est = estimate_tv(&pts, &b, 4).unwrap();
        assert!(est.tv <= est.bias + 3.0 * est.se, "{est:?}");
    }

    #[test]
    fn bootstrap_error_scales_like_root_n() {
        let target: Target = "vmf:sphere:2:kappa=2:mu=0,0,1".parse().unwrap();
        let b = Binning::for_target(&target, BinSpec::default()).unwrap();
        let mut ratios = Vec::new();
        for trial in 0..10 {
            let mut rng = stream(100 + trial, 0);
            let pts: Vec<Point> = (0..40_000).map(|_| target.reference_sample(&mut rng).unwrap()).collect();
            let small = estimate_tv(&pts[..20_000], &b, trial).unwrap().se;
            let large = estimate_tv(&pts, &b, trial).unwrap().se;
            ratios.push(large / small);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((0.6..=0.85).contains(&mean), "{ratios:?}");
    }
}
