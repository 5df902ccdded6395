//! The geodesic slice sampler transition kernel and chain execution.
//!
//! One transition from `x`:
//! 1. draw a level `t = U * p(x)` with `U` uniform on the open unit interval;
//! 2. draw a uniformly distributed unit direction `v` at `x`;
//! 3. step out along the geodesic `theta -> exp_x(theta v)` to find an
//!    interval around `0`;
//! 4. shrink on that interval until a parameter in the superlevel set
//!    `{p > t}` is found, and move there.
//!
//! Chains can be streamed to any [`ChainSink`]; [`JsonlSink`] writes the
//! JSON-lines persistence format read back by [`read_chain_jsonl`].

use std::io::{BufRead, Write};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Point, TangentVector};
use crate::rng::stream;
use crate::slice1d::{
    open_unit, shrink, stepping_out, StepBudget, StepOutParams, DEFAULT_MAX_SHRINK_ITERS,
};
use crate::target::Target;

/// Hyperparameters and caps of the sampler, together with its target.
#[derive(Debug, Clone)]
pub struct GssConfig {
    pub target: Target,
    pub params: StepOutParams,
    pub max_shrink_iters: u64,
    pub seed: u64,
    broken_shrinkage: bool,
}

impl GssConfig {
    /// Validates the hyperparameters against the target.
    ///
    /// An unbounded stepping-out budget is only allowed when every geodesic
    /// superlevel set has bounded diameter (finite `lambda`); otherwise
    /// stepping-out would not terminate on targets with unbounded level sets.
    pub fn new(target: Target, w: f64, m: StepBudget, seed: u64) -> Result<GssConfig> {
        let params = StepOutParams::new(w, m)?;
        if let StepBudget::Finite(0) = m {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !m.is_finite() && !target.meta().lambda_finite() {
            return Err(Error::InvalidParameter(format!(
                "m = inf requires a finite lambda (the supremum of geodesic superlevel-set \
                 diameters); lambda = inf for target {}, so choose a finite m",
                target.spec()
            )));
        }
        Ok(GssConfig {
            target,
            params,
            max_shrink_iters: DEFAULT_MAX_SHRINK_ITERS,
            seed,
            broken_shrinkage: false,
        })
    }

    pub fn with_max_expansions(mut self, cap: u64) -> Self {
        self.params.max_expansions = cap.max(1);
        self
    }

    pub fn with_max_shrink_iters(mut self, cap: u64) -> Self {
        self.max_shrink_iters = cap.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// A deliberately incorrect kernel that accepts the first shrinkage
    /// proposal unconditionally. Exists only to check that the statistical
    /// tests can detect a broken sampler.
    #[doc(hidden)]
    pub fn with_broken_shrinkage(mut self) -> Self {
        self.broken_shrinkage = true;
        self
    }

    pub fn w(&self) -> f64 {
        self.params.w
    }

    pub fn m(&self) -> StepBudget {
        self.params.m
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            target: self.target.spec().to_string(),
            manifold: self.target.manifold().spec(),
            w: self.params.w,
            m: self.params.m,
            max_expansions: self.params.max_expansions,
            max_shrink_iters: self.max_shrink_iters,
        }
    }
}

/// Serializable view of a [`GssConfig`] (without the seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub target: String,
    pub manifold: String,
    pub w: f64,
    pub m: StepBudget,
    pub max_expansions: u64,
    pub max_shrink_iters: u64,
}

/// A transition together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x: Point,
    pub level: f64,
    pub direction: TangentVector,
    pub interval_width: f64,
    pub shrink_iterations: u64,
}

/// One transition of the kernel.
pub fn step(x: &Point, config: &GssConfig, rng: &mut dyn RngCore) -> Result<Point> {
    step_with_diagnostics(x, config, rng).map(|o| o.x)
}

/// One transition of the kernel, with the level, direction, interval width
/// and shrinkage iteration count.
pub fn step_with_diagnostics(
    x: &Point,
    config: &GssConfig,
    rng: &mut dyn RngCore,
) -> Result<StepOutcome> {
    let target = &config.target;
    let manifold = target.manifold();
    if x.len() != manifold.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.ambient_dim(),
            found: x.len(),
        });
    }
    let px = target.density(x);
    if !(px > 0.0 && px.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "current state {:?} has density {px}; it must lie in the support",
            x.0
        )));
    }
    let level = loop {
        let t = open_unit(rng) * px;
        if t > 0.0 && t < px {
            break t;
        }
    };
    let v = manifold.sample_unit_tangent(x, rng)?;
    let oracle = |theta: f64| match manifold.exp_map(x, &v, theta) {
        Ok(y) => target.density(&y) > level,
        Err(_) => false,
    };
    let wrap = |e: Error| Error::Step {
        x: x.0.clone(),
        v: v.dir.clone(),
        level,
        source: Box::new(e),
    };
    let interval = stepping_out(oracle, &config.params, rng).map_err(wrap)?;
    let outcome = shrink(
        oracle,
        interval.lo,
        interval.hi,
        rng,
        config.max_shrink_iters,
        !config.broken_shrinkage,
    )
    .map_err(wrap)?;
    let y = manifold.exp_map(x, &v, outcome.theta).map_err(wrap)?;
    debug_assert!(config.broken_shrinkage || target.density(&y) > level);
    if let StepBudget::Finite(m) = config.params.m {
        debug_assert!(interval.width() <= m as f64 * config.params.w * (1.0 + 1e-12));
    }
    Ok(StepOutcome {
        x: y,
        level,
        direction: v,
        interval_width: interval.width(),
        shrink_iterations: outcome.iterations,
    })
}

/// A retained chain state, as persisted (one JSON line per state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainLine {
    /// Index of the transition that produced the state (1-based, burn-in included).
    pub i: u64,
    pub x: Vec<f64>,
    /// Level of that transition.
    pub t: f64,
    /// Width of the stepping-out interval.
    pub w_int: f64,
    /// Number of shrinkage proposals.
    pub k_shrink: u64,
}

/// First line of a persisted chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainHeader {
    pub format: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ConfigSnapshot,
    pub x0: Vec<f64>,
    pub n: u64,
    pub burn_in: u64,
    pub thin: u64,
}

pub const CHAIN_FORMAT: &str = "geoslice-chain";

/// A chain held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub header: ChainHeader,
    pub states: Vec<ChainLine>,
}

/// Destination for retained chain states.
pub trait ChainSink {
    fn begin(&mut self, _header: &ChainHeader) -> Result<()> {
        Ok(())
    }

    fn record(&mut self, line: &ChainLine) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl ChainSink for Vec<ChainLine> {
    fn record(&mut self, line: &ChainLine) -> Result<()> {
        self.push(line.clone());
        Ok(())
    }
}

/// Streams a chain as JSON lines.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> ChainSink for JsonlSink<W> {
    fn begin(&mut self, header: &ChainHeader) -> Result<()> {
        serde_json::to_writer(&mut self.out, header)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn record(&mut self, line: &ChainLine) -> Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Chain length and thinning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainPlan {
    /// Number of retained states.
    pub n: u64,
    pub burn_in: u64,
    /// Keep every `thin`-th state after burn-in.
    pub thin: u64,
}

/// Summary of a completed chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStats {
    pub transitions: u64,
    pub retained: u64,
    pub mean_shrink_iterations: f64,
    pub mean_interval_width: f64,
}

/// Runs a chain from `x0`, streaming retained states to `sink`.
///
/// The chain draws from `stream(config.seed, 0)`, so two runs with the same
/// configuration produce identical states.
pub fn run_chain(
    x0: &Point,
    plan: ChainPlan,
    config: &GssConfig,
    command: &str,
    sink: &mut dyn ChainSink,
) -> Result<ChainStats> {
    if plan.thin == 0 {
        return Err(Error::InvalidParameter("thin must be at least 1".into()));
    }
    if !(config.target.density(x0) > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "start point {:?} is outside the support",
            x0.0
        )));
    }
    let header = ChainHeader {
        format: CHAIN_FORMAT.into(),
        version: crate::VERSION.into(),
        command: command.into(),
        seed: config.seed,
        config: config.snapshot(),
        x0: x0.0.clone(),
        n: plan.n,
        burn_in: plan.burn_in,
        thin: plan.thin,
    };
    sink.begin(&header)?;
    let total = plan
        .burn_in
        .checked_add(plan.n.checked_mul(plan.thin).ok_or_else(too_long)?)
        .ok_or_else(too_long)?;
    let mut rng = stream(config.seed, 0);
    let mut x = x0.clone();
    let (mut shrink_sum, mut width_sum) = (0.0, 0.0);
    let mut retained = 0;
    for i in 1..=total {
        let o = step_with_diagnostics(&x, config, &mut rng)?;
        shrink_sum += o.shrink_iterations as f64;
        width_sum += o.interval_width;
        x = o.x;
        if i > plan.burn_in && (i - plan.burn_in).is_multiple_of(plan.thin) {
            sink.record(&ChainLine {
                i,
                x: x.0.clone(),
                t: o.level,
                w_int: o.interval_width,
                k_shrink: o.shrink_iterations,
            })?;
            retained += 1;
        }
    }
    sink.finish()?;
    let denom = total.max(1) as f64;
    Ok(ChainStats {
        transitions: total,
        retained,
        mean_shrink_iterations: shrink_sum / denom,
        mean_interval_width: width_sum / denom,
    })
}

fn too_long() -> Error {
    Error::InvalidParameter("chain length overflows".into())
}

/// Runs a chain and keeps it in memory.
pub fn collect_chain(x0: &Point, plan: ChainPlan, config: &GssConfig, command: &str) -> Result<ChainRecord> {
    struct Collect {
        header: Option<ChainHeader>,
        states: Vec<ChainLine>,
    }
    impl ChainSink for Collect {
        fn begin(&mut self, header: &ChainHeader) -> Result<()> {
            self.header = Some(header.clone());
            Ok(())
        }
        fn record(&mut self, line: &ChainLine) -> Result<()> {
            self.states.push(line.clone());
            Ok(())
        }
    }
    let mut sink = Collect {
        header: None,
        states: Vec::new(),
    };
    run_chain(x0, plan, config, command, &mut sink)?;
    Ok(ChainRecord {
        header: sink.header.expect("header written before states"),
        states: sink.states,
    })
}

/// Parses a persisted chain and checks its internal consistency.
pub fn read_chain_jsonl<R: BufRead>(input: R) -> Result<ChainRecord> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("empty chain file".into()))??;
    let header: ChainHeader = serde_json::from_str(&first)?;
    if header.format != CHAIN_FORMAT {
        return Err(Error::InvalidParameter(format!("not a chain file: format {:?}", header.format)));
    }
    if header.thin == 0 {
        return Err(Error::InvalidParameter("thin must be at least 1".into()));
    }
    let dim = header.x0.len();
    let mut states: Vec<ChainLine> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ChainLine = serde_json::from_str(&line)?;
        let bad = |why: &str| Error::InvalidParameter(format!("record {}: {why}", k + 1));
        if rec.x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rec.x.len(),
            });
        }
        if rec.x.iter().any(|c| !c.is_finite()) {
            return Err(bad("non-finite coordinate"));
        }
        if !(rec.t > 0.0 && rec.t.is_finite()) {
            return Err(bad("level must be positive"));
        }
        if !(rec.w_int > 0.0 && rec.w_int.is_finite()) {
            return Err(bad("interval width must be positive"));
        }
        if rec.k_shrink == 0 {
            return Err(bad("shrinkage takes at least one proposal"));
        }
        if let Some(prev) = states.last() {
            if rec.i <= prev.i {
                return Err(bad("step indices must increase"));
            }
        }
        states.push(rec);
    }
    if states.len() as u64 > header.n {
        return Err(Error::InvalidParameter(format!(
            "{} records but the header announces {}",
            states.len(),
            header.n
        )));
    }
    Ok(ChainRecord { header, states })
}

/// Final states of `replicates` independent chains of length `n_steps`
/// started at `x0`: a sample from the `n_steps`-step transition law.
///
/// Replicate `r` uses `stream(seed, r)`, so the result does not depend on
/// the number of worker threads.
pub fn endpoint_ensemble(
    x0: &Point,
    n_steps: u64,
    replicates: usize,
    config: &GssConfig,
    seed: u64,
) -> Result<Vec<Point>> {
    Ok(endpoint_snapshots(x0, &[n_steps], replicates, config, seed)?
        .pop()
        .expect("one snapshot per requested step count"))
}

/// Like [`endpoint_ensemble`], but records every chain at each step count in
/// `n_list`; snapshot `k` holds the states after `n_list[k]` transitions.
pub fn endpoint_snapshots(
    x0: &Point,
    n_list: &[u64],
    replicates: usize,
    config: &GssConfig,
    seed: u64,
) -> Result<Vec<Vec<Point>>> {
    if !(config.target.density(x0) > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "start point {:?} is outside the support",
            x0.0
        )));
    }
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let per_chain: Vec<Vec<Point>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let mut x = x0.clone();
            let mut snaps = vec![None; n_list.len()];
            for (k, &n) in n_list.iter().enumerate() {
                if n == 0 {
                    snaps[k] = Some(x.clone());
                }
            }
            for s in 1..=max_n {
                x = step(&x, config, &mut rng)?;
                for (k, &n) in n_list.iter().enumerate() {
                    if n == s {
                        snaps[k] = Some(x.clone());
                    }
                }
            }
            Ok(snaps.into_iter().map(|p| p.expect("every step count reached")).collect())
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<Point>> = vec![Vec::with_capacity(replicates); n_list.len()];
    for chain in per_chain {
        for (k, p) in chain.into_iter().enumerate() {
            out[k].push(p);
        }
    }
    Ok(out)
}

/// Applies one transition to each point, with point `r` using `stream(seed, r)`.
pub fn evolve_once(points: &[Point], config: &GssConfig, seed: u64) -> Result<Vec<Point>> {
    points
        .par_iter()
        .enumerate()
        .map(|(r, x)| step(x, config, &mut stream(seed, r as u64)))
        .collect()
}
