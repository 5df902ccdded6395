//! One-step invariance: exact target samples pushed through the kernel must
//! still be distributed according to the target.

use std::fmt::Write as _;

use serde::Serialize;

use super::energy::{energy_test, EnergyTest, DEFAULT_PERMUTATIONS};
use crate::error::{Error, Result};
use crate::kernel::{evolve_once, GssConfig};
use crate::manifold::Point;
use crate::rng::{stream, subseed};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub target: String,
    pub samples: usize,
    pub seed: u64,
    pub test: EnergyTest,
    pub pass: bool,
}

impl InvarianceReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "invariance {}: {} samples, energy statistic {:.3e} (null mean {:.3e}, sd {:.3e})",
            self.target, self.samples, self.test.statistic, self.test.null_mean, self.test.null_sd
        );
        let _ = writeln!(
            s,
            "p = {:.3e} (gamma tail), permutation p = {:.4} over {} permutations: {}",
            self.test.p_value,
            self.test.p_permutation,
            self.test.permutations,
            if self.pass { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn reference_draws(config: &GssConfig, n: usize, seed: u64) -> Result<Vec<Point>> {
    (0..n)
        .map(|r| config.target.reference_sample(&mut stream(seed, r as u64)))
        .collect()
}

/// Evolves `samples` exact draws by one transition and compares them with
/// `samples` fresh exact draws.
pub fn invariance_test(config: &GssConfig, samples: usize) -> Result<InvarianceReport> {
    if !config.target.meta().has_reference_sampler {
        return Err(Error::Unsupported("invariance testing needs a reference sampler".into()));
    }
    let seed = config.seed;
    let start = reference_draws(config, samples, subseed(seed, "start"))?;
    let evolved = evolve_once(&start, config, subseed(seed, "step"))?;
    let fresh = reference_draws(config, samples, subseed(seed, "fresh"))?;
    let test = energy_test(&evolved, &fresh, DEFAULT_PERMUTATIONS, subseed(seed, "permutations"))?;
    Ok(InvarianceReport {
        target: config.target.spec().to_string(),
        samples,
        seed,
        pass: test.pass(),
        test,
    })
}
