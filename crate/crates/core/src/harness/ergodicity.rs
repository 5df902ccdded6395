//! Empirical total-variation decay against the certified envelope `rho^n`.

use std::fmt::Write as _;

use serde::Serialize;

use super::binning::{BinSpec, Binning};
use super::tv::{estimate_tv, TvEstimate};
use crate::bounds::{full_report, BoundsReport, EpsilonMode};
use crate::error::{Error, Result};
use crate::kernel::{endpoint_snapshots, GssConfig};
use crate::manifold::Point;
use crate::rng::subseed;

/// Outcome of a statistical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound rests on a statistical estimate and cannot certify anything.
    Advisory,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Advisory => "ADVISORY",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvPoint {
    pub n: u64,
    pub tv: f64,
    pub se: f64,
    pub bias: f64,
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvCurve {
    pub points: Vec<TvPoint>,
    pub bounds: BoundsReport,
    pub replicates: usize,
    pub x0: Vec<f64>,
    pub binning: String,
    pub verdict: Verdict,
}

impl TvCurve {
    /// CSV with columns `n,tv,se,envelope,pass`, preceded by `#` comment
    /// lines from `header`.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            let _ = writeln!(s, "# {h}");
        }
        let bias = self.points.first().map_or(0.0, |p| p.bias);
        let _ = writeln!(s, "# rho = {}  ({})", self.bounds.rho, self.bounds.status());
        let _ = writeln!(s, "# binning = {}; tv bias term = {bias}", self.binning);
        let _ = writeln!(s, "n,tv,se,envelope,pass");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{},{}", p.n, p.tv, p.se, p.envelope, p.pass);
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "target {}  m = {}  w = {}  rho = {} ({})",
            self.bounds.target,
            self.bounds.m,
            self.bounds.w,
            self.bounds.rho,
            self.bounds.status()
        );
        let _ = writeln!(s, "start {:?}, {} replicates, {}", self.x0, self.replicates, self.binning);
        for p in &self.points {
            let _ = writeln!(
                s,
                "n = {:>4}  tv = {:.5} +- {:.5} (bias {:.5})  envelope = {:.5}  {}",
                p.n,
                p.tv,
                p.se,
                p.bias,
                p.envelope,
                if p.pass { "ok" } else { "VIOLATION" }
            );
        }
        let _ = writeln!(s, "verdict: {}", self.verdict);
        s
    }
}

/// Settings of an ergodicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPlan {
    pub n_list: Vec<u64>,
    pub replicates: usize,
    pub epsilon_mode: EpsilonMode,
    pub bins: BinSpec,
}

/// Runs `replicates` chains from `x0`, estimates the total-variation distance
/// to the target after each `n` in the plan, and checks
/// `tv <= rho^n + 3 se + bias`.
///
/// Reports whose `rho` is not certified yield [`Verdict::Advisory`].
pub fn verify_uniform_ergodicity(config: &GssConfig, x0: &Point, plan: &VerifyPlan) -> Result<TvCurve> {
    if plan.n_list.is_empty() {
        return Err(Error::InvalidParameter("empty list of step counts".into()));
    }
    let seed = config.seed;
    let bounds = full_report(&config.target, config.m(), config.w(), plan.epsilon_mode, subseed(seed, "epsilon"))?;
    let binning = Binning::for_target(&config.target, plan.bins)?;
    let snaps = endpoint_snapshots(x0, &plan.n_list, plan.replicates, config, subseed(seed, "chains"))?;
    let mut points = Vec::with_capacity(plan.n_list.len());
    for (k, (&n, pts)) in plan.n_list.iter().zip(&snaps).enumerate() {
        let TvEstimate { tv, se, bias, .. } = estimate_tv(pts, &binning, subseed(seed, &format!("bootstrap-{k}")))?;
        let envelope = bounds.rho.powf(n as f64);
        points.push(TvPoint {
            n,
            tv,
            se,
            bias,
            envelope,
            pass: tv <= envelope + 3.0 * se + bias,
        });
    }
    let verdict = if !bounds.certified {
        Verdict::Advisory
    } else if points.iter().all(|p| p.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(TvCurve {
        points,
        bounds,
        replicates: plan.replicates,
        x0: x0.0.clone(),
        binning: binning.description().to_string(),
        verdict,
    })
}
