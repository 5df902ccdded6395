//! Two-sample test based on the sliced energy distance.
//!
//! Points are compared through their embedded coordinates. For each of a
//! fixed set of unit directions the samples are projected to the line, where
//! the energy distance has the closed form `2 * integral (F - G)^2`; the test
//! statistic averages this over directions. Since the pooled sort order of
//! each projection does not depend on the labels, a permutation costs
//! `O(directions * N)`.
//!
//! Two p-values are reported: the plain permutation p-value (resolution
//! `1 / (permutations + 1)`), and a tail probability from a gamma law
//! matched to the mean and variance of the permutation distribution, which
//! resolves p-values far below the permutation floor.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::manifold::{vecops, Point};
use crate::rng::{stream, subseed};

pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const PROJECTIONS: usize = 16;
/// Significance level of every two-sample test in the harness.
pub const ALPHA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTest {
    pub statistic: f64,
    /// `(1 + #{permuted >= observed}) / (1 + permutations)`.
    pub p_permutation: f64,
    /// Gamma-approximated tail probability of the permutation law.
    pub p_value: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    pub permutations: usize,
}

impl EnergyTest {
    pub fn pass(&self) -> bool {
        self.p_value > ALPHA
    }
}

fn directions(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0]];
    }
    if dim == 2 {
        return (0..PROJECTIONS)
            .map(|k| {
                let a = PI * k as f64 / PROJECTIONS as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut rng = stream(subseed(seed, "projections"), 0);
    (0..PROJECTIONS)
        .map(|_| loop {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = vecops::norm(&g);
            if n > 1e-12 {
                break g.iter().map(|c| c / n).collect();
            }
        })
        .collect()
}

/// One projection: pooled values in sorted order, with the original index
/// of each.
struct Projection {
    gaps: Vec<f64>,
    order: Vec<u32>,
}

impl Projection {
    fn statistic(&self, is_a: &[bool], na: usize, nb: usize) -> f64 {
        let (wa, wb) = (1.0 / na as f64, 1.0 / nb as f64);
        let mut diff = 0.0;
        let mut acc = 0.0;
        for (k, &idx) in self.order[..self.order.len() - 1].iter().enumerate() {
            if is_a[idx as usize] {
                diff += wa;
            } else {
                diff -= wb;
            }
            acc += diff * diff * self.gaps[k];
        }
        2.0 * acc
    }
}

/// Sliced energy two-sample test between `a` and `b`.
///
/// Permutation `k` shuffles the labels with `stream(seed, k)`.
pub fn energy_test(a: &[Point], b: &[Point], permutations: usize, seed: u64) -> Result<EnergyTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("each sample needs at least two points".into()));
    }
    if permutations < 2 {
        return Err(Error::InvalidParameter("need at least two permutations".into()));
    }
    let dim = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let pooled: Vec<&Point> = a.iter().chain(b).collect();
    let n = pooled.len();
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter("samples too large".into()));
    }
    let projections: Vec<Projection> = directions(dim, seed)
        .par_iter()
        .map(|dir| {
            let vals: Vec<f64> = pooled.iter().map(|p| vecops::dot(p.coords(), dir)).collect();
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&i, &j| vals[i as usize].total_cmp(&vals[j as usize]));
            let gaps = order
                .windows(2)
                .map(|w| vals[w[1] as usize] - vals[w[0] as usize])
                .collect();
            Projection { gaps, order }
        })
        .collect();
    let (na, nb) = (a.len(), b.len());
    let stat = |labels: &[bool]| projections.iter().map(|p| p.statistic(labels, na, nb)).sum::<f64>() / projections.len() as f64;
    let labels: Vec<bool> = (0..n).map(|i| i < na).collect();
    let observed = stat(&labels);
    let null: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map_init(
            || labels.clone(),
            |lab, k| {
                lab.copy_from_slice(&labels);
                lab.shuffle(&mut stream(seed, k as u64));
                stat(lab)
            },
        )
        .collect();
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    let mean = null.iter().sum::<f64>() / permutations as f64;
    let var = null.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (permutations - 1) as f64;
    let p_value = if var > 0.0 && mean > 0.0 {
        let shape = mean * mean / var;
        let scale = var / mean;
        gamma_ur(shape, observed / scale)
    } else if observed > mean {
        0.0
    } else {
        1.0
    };
    Ok(EnergyTest {
        statistic: observed,
        p_permutation: (1 + exceed) as f64 / (1 + permutations) as f64,
        p_value,
        null_mean: mean,
        null_sd: var.sqrt(),
        permutations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_cloud(n: usize, shift: f64, seed: u64) -> Vec<Point> {
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                Point(vec![x + shift, y])
            })
            .collect()
    }

    #[test]
    fn one_dimensional_statistic_matches_pairwise_formula() {
        // 2 E|X-Y| - E|X-X'| - E|Y-Y'| equals 2 * integral (F - G)^2 on the line.
        let mut rng = stream(1, 0);
        let a: Vec<Point> = (0..40).map(|_| Point(vec![rng.random::<f64>()])).collect();
        let b: Vec<Point> = (0..30).map(|_| Point(vec![rng.random::<f64>() * 1.5])).collect();
        let mean_abs = |u: &[Point], v: &[Point]| {
            let mut s = 0.0;
            for p in u {
                for q in v {
                    s += (p.0[0] - q.0[0]).abs();
                }
            }
            s / (u.len() * v.len()) as f64
        };
        let pairwise = 2.0 * mean_abs(&a, &b) - mean_abs(&a, &a) - mean_abs(&b, &b);
        let t = energy_test(&a, &b, 10, 0).unwrap();
        assert!((t.statistic - pairwise).abs() < 1e-12, "{} vs {pairwise}", t.statistic);
    }

    #[test]
    fn same_law_passes() {
        let t = energy_test(&gaussian_cloud(5000, 0.0, 1), &gaussian_cloud(5000, 0.0, 2), 200, 3).unwrap();
        assert!(t.pass(), "{t:?}");
        assert!(t.p_permutation > ALPHA);
    }

    #[test]
    fn shifted_law_fails_hard() {
        let t = energy_test(&gaussian_cloud(5000, 0.0, 1), &gaussian_cloud(5000, 0.3, 2), 200, 3).unwrap();
        assert!(t.p_value < 1e-6, "{t:?}");
        assert_eq!(t.p_permutation, 1.0 / 201.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = gaussian_cloud(500, 0.0, 1);
        let b = gaussian_cloud(500, 0.1, 2);
        assert_eq!(energy_test(&a, &b, 50, 9).unwrap(), energy_test(&a, &b, 50, 9).unwrap());
    }

    #[test]
    fn null_p_values_are_roughly_uniform() {
        let mut small = 0;
        for s in 0..40 {
            let t = energy_test(&gaussian_cloud(300, 0.0, 2 * s), &gaussian_cloud(300, 0.0, 2 * s + 1), 200, s).unwrap();
            if t.p_value < 0.1 {
                small += 1;
            }
        }
        assert!(small <= 12, "{small} of 40 null p-values below 0.1");
    }
}
