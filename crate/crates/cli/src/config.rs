//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};
use geoslice::bounds::EpsilonMode;
use geoslice::harness::BinSpec;
use geoslice::kernel::GssConfig;
use geoslice::{StepBudget, Target};

/// Environment variable supplying the default worker-thread count.
pub const THREADS_ENV: &str = "GEOSLICE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Run a chain and write its states as JSON lines.
    Sample,
    /// Report every constant of the convergence bound.
    Bounds,
    /// Compare the empirical total-variation decay with the bound.
    Verify,
    /// Check that one transition preserves the target.
    Invariance,
    /// Run the Monte-Carlo checks of the one-dimensional building blocks.
    Lemmas,
    /// Tabulate the hyperparameters maximising the covering constant.
    Hyperopt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Bounds => "bounds",
            Command::Verify => "verify",
            Command::Invariance => "invariance",
            Command::Lemmas => "lemmas",
            Command::Hyperopt => "hyperopt",
        }
    }

    fn needs_target(self) -> bool {
        !matches!(self, Command::Lemmas | Command::Hyperopt)
    }
}

#[derive(Debug, Parser)]
#[command(name = "geoslice", version, about = "Geodesic slice sampling with explicit convergence bounds")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Flat `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub options: RawOptions,
}

/// Unvalidated settings, as given on the command line or in a config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RawOptions {
    /// Target specification, e.g. `vmf:sphere:2:kappa=2:mu=0,0,1`.
    #[arg(long)]
    pub target: Option<String>,
    /// Manifold specification, e.g. `sphere:2`; checked against the target.
    #[arg(long)]
    pub manifold: Option<String>,
    /// Stepping-out budget: a positive integer or `inf`.
    #[arg(long)]
    pub m: Option<String>,
    /// Stepping-out width.
    #[arg(long)]
    pub w: Option<String>,
    /// Master seed; drawn at random and reported when absent
    #[arg(long)]
    pub seed: Option<String>,
    /// Independent chains per step count (verify).
    #[arg(long)]
    pub replicates: Option<String>,
    /// Comma-separated step counts (verify).
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    /// Retained states (sample).
    #[arg(long)]
    pub n: Option<String>,
    /// Transitions discarded before the first retained state (sample)
    #[arg(long = "burn-in")]
    pub burn_in: Option<String>,
    /// Keep every k-th state after burn-in (sample)
    #[arg(long)]
    pub thin: Option<String>,
    /// Comma-separated start point; defaults to a worst-case start of the target.
    #[arg(long)]
    pub x0: Option<String>,
    /// Main output file (JSONL, CSV or text); standard output if absent.
    #[arg(long)]
    pub out: Option<String>,
    /// Machine-readable JSON record.
    #[arg(long)]
    pub json: Option<String>,
    /// Also write a gnuplot script plotting the CSV (verify).
    #[arg(long)]
    pub gnuplot: Option<String>,
    /// `auto`, `analytic`, `corollary` or `monte-carlo`.
    #[arg(long = "epsilon-mode")]
    pub epsilon_mode: Option<String>,
    /// Number of arcs when binning the circle (verify)
    #[arg(long = "circle-bins")]
    pub circle_bins: Option<String>,
    /// Latitude bands on the 2-sphere (verify)
    #[arg(long)]
    pub bands: Option<String>,
    /// Longitude sectors per band on the 2-sphere (verify)
    #[arg(long)]
    pub sectors: Option<String>,
    /// Grid cells per axis in flat spaces (verify)
    #[arg(long = "per-axis")]
    pub per_axis: Option<String>,
    /// Sample size of the invariance test.
    #[arg(long)]
    pub samples: Option<String>,
    /// Safety cap on stepping-out expansions when m = inf
    #[arg(long = "max-expansions")]
    pub max_expansions: Option<String>,
    /// Safety cap on shrinkage proposals per transition
    #[arg(long = "max-shrink-iters")]
    pub max_shrink_iters: Option<String>,
    /// Worker threads (default: GEOSLICE_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<String>,
}

/// Every key accepted in a config file, spelled as the corresponding flag.
pub const KEYS: &[&str] = &[
    "target",
    "manifold",
    "m",
    "w",
    "seed",
    "replicates",
    "n-list",
    "n",
    "burn-in",
    "thin",
    "x0",
    "out",
    "json",
    "gnuplot",
    "epsilon-mode",
    "circle-bins",
    "bands",
    "sectors",
    "per-axis",
    "samples",
    "max-expansions",
    "max-shrink-iters",
    "threads",
];

impl RawOptions {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "target" => &mut self.target,
            "manifold" => &mut self.manifold,
            "m" => &mut self.m,
            "w" => &mut self.w,
            "seed" => &mut self.seed,
            "replicates" => &mut self.replicates,
            "n-list" => &mut self.n_list,
            "n" => &mut self.n,
            "burn-in" => &mut self.burn_in,
            "thin" => &mut self.thin,
            "x0" => &mut self.x0,
            "out" => &mut self.out,
            "json" => &mut self.json,
            "gnuplot" => &mut self.gnuplot,
            "epsilon-mode" => &mut self.epsilon_mode,
            "circle-bins" => &mut self.circle_bins,
            "bands" => &mut self.bands,
            "sectors" => &mut self.sectors,
            "per-axis" => &mut self.per_axis,
            "samples" => &mut self.samples,
            "max-expansions" => &mut self.max_expansions,
            "max-shrink-iters" => &mut self.max_shrink_iters,
            "threads" => &mut self.threads,
            _ => return None,
        })
    }

    /// Fills every unset option from `file`.
    pub fn fill_from(&mut self, file: &RawOptions) {
        let mut file = file.clone();
        for key in KEYS {
            let theirs = file.slot(key).and_then(Option::take);
            let ours = self.slot(key).expect("known key");
            if ours.is_none() {
                *ours = theirs;
            }
        }
    }
}

/// A configuration or usage problem (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parses a flat config file: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored. Keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<RawOptions, UsageError> {
    let mut raw = RawOptions::default();
    let mut seen = HashSet::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if value.is_empty() {
            return Err(usage(format!("config line {}: empty value for `{key}`", no + 1)));
        }
        let slot = raw
            .slot(&key)
            .ok_or_else(|| usage(format!("config line {}: unknown key `{key}`", no + 1)))?;
        if !seen.insert(key.clone()) {
            return Err(usage(format!("config line {}: duplicate key `{key}`", no + 1)));
        }
        *slot = Some(value.to_string());
    }
    Ok(raw)
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// The command line as invoked.
    pub command_line: String,
    pub target: Option<Target>,
    pub m: StepBudget,
    pub w: Option<f64>,
    pub seed: u64,
    /// Whether the seed was drawn at random because none was given.
    pub seed_was_random: bool,
    pub replicates: usize,
    pub n_list: Vec<u64>,
    pub n: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub x0: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub gnuplot: Option<PathBuf>,
    /// `None` means: analytic where available, otherwise the corollary.
    pub epsilon_mode: Option<EpsilonMode>,
    pub bins: BinSpec,
    pub samples: usize,
    pub max_expansions: Option<u64>,
    pub max_shrink_iters: Option<u64>,
    pub threads: Option<usize>,
}

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_N_LIST: &[u64] = &[1, 2, 5, 10];
pub const DEFAULT_CHAIN_LENGTH: u64 = 1_000;
pub const DEFAULT_INVARIANCE_SAMPLES: usize = 20_000;

fn parse_num<T: std::str::FromStr>(key: &str, v: &Option<String>) -> Result<Option<T>, UsageError>
where
    T::Err: fmt::Display,
{
    v.as_deref()
        .map(|s| s.trim().parse::<T>().map_err(|e| usage(format!("invalid --{key} {s:?}: {e}"))))
        .transpose()
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>, UsageError>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| usage(format!("invalid --{key} entry {p:?}: {e}"))))
        .collect()
}

fn resolve_target(target: Option<&str>, manifold: Option<&str>) -> Result<Option<Target>, UsageError> {
    let Some(spec) = target else {
        return Ok(None);
    };
    // A bare preset name takes its geometry from --manifold.
    let full = match (spec.contains(':'), manifold) {
        (false, Some(m)) => format!("{spec}:{m}"),
        _ => spec.to_string(),
    };
    let target: Target = full.parse().map_err(|e| usage(format!("{e}")))?;
    if let Some(m) = manifold {
        let given: geoslice::Geometry = m.parse().map_err(|e| usage(format!("{e}")))?;
        let actual = target.manifold().spec();
        if given.to_string() != actual {
            return Err(usage(format!("--manifold {m} does not match the target's manifold {actual}")));
        }
    }
    Ok(Some(target))
}

impl RunConfig {
    /// Validates and resolves `raw` for `command`, filling defaults.
    pub fn resolve(command: Command, raw: &RawOptions, command_line: String) -> Result<RunConfig, UsageError> {
        let target = resolve_target(raw.target.as_deref(), raw.manifold.as_deref())?;
        if command.needs_target() && target.is_none() {
            return Err(usage(format!("`{}` needs --target", command.name())));
        }
        let m: StepBudget = match &raw.m {
            Some(s) => s.parse().map_err(|e| usage(format!("invalid --m {s:?}: {e}")))?,
            None => StepBudget::Finite(1),
        };
        let w = parse_num::<f64>("w", &raw.w)?;
        let (seed, seed_was_random) = match parse_num::<u64>("seed", &raw.seed)? {
            Some(s) => (s, false),
            None => (rand::random::<u64>(), true),
        };
        let n_list = match &raw.n_list {
            Some(s) => parse_list::<u64>("n-list", s)?,
            None => DEFAULT_N_LIST.to_vec(),
        };
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(usage("--n-list needs positive step counts"));
        }
        let x0 = raw.x0.as_deref().map(|s| parse_list::<f64>("x0", s)).transpose()?;
        let epsilon_mode = match raw.epsilon_mode.as_deref().map(str::trim) {
            None | Some("auto") => None,
            Some(s) => Some(s.parse::<EpsilonMode>().map_err(|e| usage(e.to_string()))?),
        };
        let threads = match parse_num::<usize>("threads", &raw.threads)? {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) if !v.trim().is_empty() => Some(
                    v.trim()
                        .parse()
                        .map_err(|e| usage(format!("invalid {THREADS_ENV} {v:?}: {e}")))?,
                ),
                _ => None,
            },
        };
        if threads == Some(0) {
            return Err(usage("--threads must be at least 1"));
        }
        let cfg = RunConfig {
            command,
            command_line,
            target,
            m,
            w,
            seed,
            seed_was_random,
            replicates: parse_num("replicates", &raw.replicates)?.unwrap_or(DEFAULT_REPLICATES),
            n_list,
            n: parse_num("n", &raw.n)?.unwrap_or(DEFAULT_CHAIN_LENGTH),
            burn_in: parse_num("burn-in", &raw.burn_in)?.unwrap_or(0),
            thin: parse_num("thin", &raw.thin)?.unwrap_or(1),
            x0,
            out: raw.out.as_ref().map(PathBuf::from),
            json: raw.json.as_ref().map(PathBuf::from),
            gnuplot: raw.gnuplot.as_ref().map(PathBuf::from),
            epsilon_mode,
            bins: BinSpec {
                circle_bins: parse_num("circle-bins", &raw.circle_bins)?,
                bands: parse_num("bands", &raw.bands)?,
                sectors: parse_num("sectors", &raw.sectors)?,
                per_axis: parse_num("per-axis", &raw.per_axis)?,
            },
            samples: parse_num("samples", &raw.samples)?.unwrap_or(DEFAULT_INVARIANCE_SAMPLES),
            max_expansions: parse_num("max-expansions", &raw.max_expansions)?,
            max_shrink_iters: parse_num("max-shrink-iters", &raw.max_shrink_iters)?,
            threads,
        };
        if cfg.thin == 0 {
            return Err(usage("--thin must be at least 1"));
        }
        if cfg.gnuplot.is_some() && cfg.out.is_none() {
            return Err(usage("--gnuplot needs --out for the CSV it plots"));
        }
        if cfg.target.is_some() {
            // Surface invalid hyperparameters now rather than mid-run.
            cfg.sampler()?;
        }
        Ok(cfg)
    }

    /// Step width: the given `w`, or `2 diam(W)` (optimal for `m = 1`).
    pub fn effective_w(&self) -> Option<f64> {
        self.w.or_else(|| self.target.as_ref().map(|t| 2.0 * t.meta().diam_w))
    }

    /// The sampler configuration for the target.
    pub fn sampler(&self) -> Result<GssConfig, UsageError> {
        let target = self.target.clone().ok_or_else(|| usage("no target given"))?;
        let w = self.effective_w().ok_or_else(|| usage("no step width given"))?;
        let mut cfg = GssConfig::new(target, w, self.m, self.seed).map_err(|e| usage(e.to_string()))?;
        if let Some(c) = self.max_expansions {
            cfg = cfg.with_max_expansions(c);
        }
        if let Some(c) = self.max_shrink_iters {
            cfg = cfg.with_max_shrink_iters(c);
        }
        Ok(cfg)
    }

    /// The fully resolved configuration in config-file syntax; feeding it
    /// back through `--config` reproduces the run.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let mut kv = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        if let Some(t) = &self.target {
            kv("target", t.spec().to_string());
            kv("manifold", t.manifold().spec());
            kv("m", self.m.to_string());
            if let Some(w) = self.effective_w() {
                kv("w", w.to_string());
            }
        }
        kv("seed", self.seed.to_string());
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self.command {
            Command::Sample => {
                kv("n", self.n.to_string());
                kv("burn-in", self.burn_in.to_string());
                kv("thin", self.thin.to_string());
            }
            Command::Verify => {
                kv("replicates", self.replicates.to_string());
                kv("n-list", join(&self.n_list));
                let bins = self.bins;
                for (k, v) in [
                    ("circle-bins", bins.circle_bins),
                    ("bands", bins.bands),
                    ("sectors", bins.sectors),
                    ("per-axis", bins.per_axis),
                ] {
                    if let Some(v) = v {
                        kv(k, v.to_string());
                    }
                }
            }
            Command::Invariance => kv("samples", self.samples.to_string()),
            _ => {}
        }
        if matches!(self.command, Command::Bounds | Command::Verify) {
            kv("epsilon-mode", self.epsilon_mode.map_or("auto", |e| e.tag()).to_string());
        }
        if let Some(x0) = &self.x0 {
            kv("x0", x0.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        }
        if let Some(c) = self.max_expansions {
            kv("max-expansions", c.to_string());
        }
        if let Some(c) = self.max_shrink_iters {
            kv("max-shrink-iters", c.to_string());
        }
        lines
    }
}

/// Parses `argv` (including the program name), layering flags over the
/// optional config file.
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let command_line = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let cli = Cli::try_parse_from(&args).map_err(ParseOutcome::Clap)?;
    let mut raw = cli.options.clone();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParseOutcome::Usage(usage(format!("cannot read config {}: {e}", path.display()))))?;
        raw.fill_from(&parse_config_file(&text).map_err(ParseOutcome::Usage)?);
    }
    RunConfig::resolve(cli.command, &raw, command_line).map_err(ParseOutcome::Usage)
}

/// Why [`parse_config`] did not produce a configuration.
#[derive(Debug)]
pub enum ParseOutcome {
    /// Help, version, or a malformed command line; clap renders it.
    Clap(clap::Error),
    Usage(UsageError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, ParseOutcome> {
        parse_config(std::iter::once("geoslice").chain(args.iter().copied()))
    }

    #[test]
    fn bounds_invocation_resolves() {
        let cfg = parse(&["bounds", "--target", "uniform:sphere:1", "--m", "1", "--w", "6.5"]).unwrap();
        assert_eq!(cfg.command, Command::Bounds);
        assert_eq!(cfg.m, StepBudget::Finite(1));
        assert_eq!(cfg.w, Some(6.5));
        assert!(cfg.seed_was_random);
        assert!(cfg.echo().iter().any(|l| l.starts_with("seed = ")));
    }

    #[test]
    fn unbounded_budget_needs_finite_lambda() {
        match parse(&["sample", "--target", "uniform:sphere:2", "--m", "inf"]) {
            Err(ParseOutcome::Usage(e)) => assert!(e.0.contains("lambda = inf"), "{e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(matches!(parse(&["bounds", "--colour", "red"]), Err(ParseOutcome::Clap(_))));
    }

    #[test]
    fn bad_spec_is_a_usage_error() {
        assert!(matches!(parse(&["bounds", "--target", "uniform:klein:2"]), Err(ParseOutcome::Usage(_))));
        assert!(matches!(parse(&["sample"]), Err(ParseOutcome::Usage(_))));
    }

    #[test]
    fn config_file_syntax() {
        let raw = parse_config_file("# comment\ntarget = uniform:sphere:2\n\nburn_in = 3  # trailing\n").unwrap();
        assert_eq!(raw.target.as_deref(), Some("uniform:sphere:2"));
        assert_eq!(raw.burn_in.as_deref(), Some("3"));
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("w = 1\nw = 2").is_err());
        assert!(parse_config_file("just words").is_err());
        assert!(parse_config_file("w =").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut flags = RawOptions {
            w: Some("1.0".into()),
            ..RawOptions::default()
        };
        let file = parse_config_file("w = 3\nm = 2\ntarget = uniform:sphere:2").unwrap();
        flags.fill_from(&file);
        assert_eq!(flags.w.as_deref(), Some("1.0"));
        assert_eq!(flags.m.as_deref(), Some("2"));
        let cfg = RunConfig::resolve(Command::Sample, &flags, String::new()).unwrap();
        assert!(cfg.echo().contains(&"w = 1".to_string()));
    }

    #[test]
    fn bare_preset_takes_manifold() {
        let cfg = parse(&["bounds", "--target", "uniform", "--manifold", "sphere:2", "--seed", "1"]).unwrap();
        assert_eq!(cfg.target.unwrap().spec(), "uniform:sphere:2");
        assert!(parse(&["bounds", "--target", "uniform:sphere:2", "--manifold", "sphere:3"]).is_err());
    }

    #[test]
    fn echo_round_trips_through_config_file() {
        let cfg = parse(&["verify", "--target", "uniform:sphere:1", "--seed", "9", "--n-list", "1,3"]).unwrap();
        let again = RunConfig::resolve(
            Command::Verify,
            &parse_config_file(&cfg.echo().join("\n")).unwrap(),
            String::new(),
        )
        .unwrap();
        assert_eq!(cfg.echo(), again.echo());
    }

    #[test]
    fn every_key_has_a_slot() {
        let mut raw = RawOptions::default();
        for k in KEYS {
            assert!(raw.slot(k).is_some(), "{k}");
        }
    }
}
