//! Execution of a resolved [`RunConfig`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use geoslice::bounds::{full_report, optimal_hyperparameters, BoundsReport, EpsilonMode};
use geoslice::harness::{invariance_test, lemma_suite, verify_uniform_ergodicity, Verdict, VerifyPlan};
use geoslice::kernel::{run_chain, ChainPlan, GssConfig, JsonlSink};
use geoslice::rng::subseed;
use geoslice::{Error, Point, Target, VERSION};
use serde_json::json;

use crate::config::{Command, RunConfig};

/// Result of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Success, a passing check, or an advisory-only check.
    Success,
    /// A statistical check failed.
    Fail,
}

/// Targets tabulated by `hyperopt` when none is given.
pub const HYPEROPT_PRESETS: &[&str] = &[
    "uniform:sphere:1",
    "uniform:sphere:2",
    "cap:sphere:2:colatitude=1.5707963267948966",
    "vmf:sphere:2:kappa=2:mu=0,0,1",
    "convex-uniform:ball:2:r=1",
    "convex-uniform:box:2:extents=1,2",
    "ball-gaussian:euclidean:2:sigma=0.5:r=1",
    "intervals:euclidean:1:set=0..1,2..3",
    "uniform:torus:2:1",
];

/// Comment lines opening every text artifact: tool version, command line,
/// seed and the resolved configuration.
pub fn header_lines(cfg: &RunConfig) -> Vec<String> {
    let mut h = vec![
        format!("geoslice {VERSION}"),
        format!("command line: {}", cfg.command_line),
        if cfg.seed_was_random {
            format!("seed: {} (drawn at random; pass --seed {} to reproduce)", cfg.seed, cfg.seed)
        } else {
            format!("seed: {}", cfg.seed)
        },
    ];
    h.extend(cfg.echo().into_iter().map(|l| format!("config: {l}")));
    h
}

fn commented(header: &[String]) -> String {
    header.iter().map(|l| format!("# {l}\n")).collect()
}

fn write_text(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn write_json(path: Option<&Path>, cfg: &RunConfig, result: serde_json::Value) -> Result<(), Error> {
    let Some(path) = path else {
        return Ok(());
    };
    let record = json!({
        "tool": "geoslice",
        "version": VERSION,
        "command_line": cfg.command_line,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn start_point(cfg: &RunConfig, sampler: &GssConfig) -> Result<Point, Error> {
    match &cfg.x0 {
        Some(x) => Ok(Point(x.clone())),
        None => sampler.target.default_start(),
    }
}

fn bounds_report(cfg: &RunConfig, target: &Target, w: f64) -> Result<BoundsReport, Error> {
    let seed = subseed(cfg.seed, "epsilon");
    match cfg.epsilon_mode {
        Some(mode) => full_report(target, cfg.m, w, mode, seed),
        None => match full_report(target, cfg.m, w, EpsilonMode::Analytic, seed) {
            Err(Error::BoundInapplicable(_)) => full_report(target, cfg.m, w, EpsilonMode::Corollary, seed),
            other => other,
        },
    }
}

/// Runs the command on the current thread pool.
pub fn dispatch(cfg: &RunConfig) -> Result<Outcome, Error> {
    match cfg.command {
        Command::Sample => sample(cfg),
        Command::Bounds => bounds(cfg),
        Command::Verify => verify(cfg),
        Command::Invariance => invariance(cfg),
        Command::Lemmas => lemmas(cfg),
        Command::Hyperopt => hyperopt(cfg),
    }
}

fn sampler(cfg: &RunConfig) -> Result<GssConfig, Error> {
    cfg.sampler().map_err(|e| Error::InvalidParameter(e.0))
}

fn sample(cfg: &RunConfig) -> Result<Outcome, Error> {
    let s = sampler(cfg)?;
    let x0 = start_point(cfg, &s)?;
    let plan = ChainPlan {
        n: cfg.n,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
    };
    let stats = match &cfg.out {
        Some(path) => {
            let mut sink = JsonlSink::new(BufWriter::new(File::create(path)?));
            run_chain(&x0, plan, &s, &cfg.command_line, &mut sink)?
        }
        None => {
            let mut sink = JsonlSink::new(BufWriter::new(io::stdout().lock()));
            run_chain(&x0, plan, &s, &cfg.command_line, &mut sink)?
        }
    };
    eprintln!(
        "{} transitions, {} retained; mean interval width {:.4}, mean shrinkage proposals {:.3}",
        stats.transitions, stats.retained, stats.mean_interval_width, stats.mean_shrink_iterations
    );
    write_json(
        cfg.json.as_deref(),
        cfg,
        json!({
            "transitions": stats.transitions,
            "retained": stats.retained,
            "mean_interval_width": stats.mean_interval_width,
            "mean_shrink_iterations": stats.mean_shrink_iterations,
        }),
    )?;
    Ok(Outcome::Success)
}

fn bounds(cfg: &RunConfig) -> Result<Outcome, Error> {
    let s = sampler(cfg)?;
    let report = bounds_report(cfg, &s.target, s.w())?;
    let mut text = commented(&header_lines(cfg));
    text.push_str(&report.to_text());
    write_text(cfg.out.as_deref(), &text)?;
    write_json(cfg.json.as_deref(), cfg, serde_json::to_value(&report)?)?;
    Ok(Outcome::Success)
}

fn verify(cfg: &RunConfig) -> Result<Outcome, Error> {
    let s = sampler(cfg)?;
    let x0 = start_point(cfg, &s)?;
    let mode = match cfg.epsilon_mode {
        Some(m) => m,
        // Resolve the automatic choice the same way `bounds` does.
        None => match bounds_report(cfg, &s.target, s.w())?.epsilon_mode.as_str() {
            "analytic" => EpsilonMode::Analytic,
            _ => EpsilonMode::Corollary,
        },
    };
    let plan = VerifyPlan {
        n_list: cfg.n_list.clone(),
        replicates: cfg.replicates,
        epsilon_mode: mode,
        bins: cfg.bins,
    };
    let curve = verify_uniform_ergodicity(&s, &x0, &plan)?;
    let csv = curve.to_csv(&header_lines(cfg));
    write_text(cfg.out.as_deref(), &csv)?;
    if cfg.out.is_some() {
        print!("{}", curve.summary());
    } else {
        eprint!("{}", curve.summary());
    }
    if let (Some(script), Some(data)) = (&cfg.gnuplot, &cfg.out) {
        std::fs::write(script, gnuplot_script(&header_lines(cfg), data))?;
    }
    write_json(cfg.json.as_deref(), cfg, serde_json::to_value(&curve)?)?;
    Ok(match curve.verdict {
        Verdict::Fail => Outcome::Fail,
        Verdict::Pass | Verdict::Advisory => Outcome::Success,
    })
}

/// A gnuplot script drawing the TV estimates with 3-SE error bars against
/// the envelope, on a log scale.
pub fn gnuplot_script(header: &[String], csv: &Path) -> String {
    let mut s = commented(header);
    let data = csv.display().to_string().replace('\'', "''");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set xlabel 'n'");
    let _ = writeln!(s, "set ylabel 'total variation'");
    let _ = writeln!(
        s,
        "plot '{data}' using 1:2:(3*$3) with yerrorbars title 'estimate +- 3 se', \\\n     '{data}' using 1:4 with linespoints title 'rho^n'"
    );
    s
}

fn invariance(cfg: &RunConfig) -> Result<Outcome, Error> {
    let s = sampler(cfg)?;
    let report = invariance_test(&s, cfg.samples)?;
    let mut text = commented(&header_lines(cfg));
    text.push_str(&report.summary());
    write_text(cfg.out.as_deref(), &text)?;
    write_json(cfg.json.as_deref(), cfg, serde_json::to_value(&report)?)?;
    Ok(if report.pass { Outcome::Success } else { Outcome::Fail })
}

fn lemmas(cfg: &RunConfig) -> Result<Outcome, Error> {
    let report = lemma_suite(cfg.seed)?;
    let mut text = commented(&header_lines(cfg));
    text.push_str(&report.to_text());
    write_text(cfg.out.as_deref(), &text)?;
    write_json(cfg.json.as_deref(), cfg, serde_json::to_value(&report)?)?;
    Ok(if report.all_pass() { Outcome::Success } else { Outcome::Fail })
}

fn hyperopt(cfg: &RunConfig) -> Result<Outcome, Error> {
    let targets: Vec<Target> = match &cfg.target {
        Some(t) => vec![t.clone()],
        None => HYPEROPT_PRESETS.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
    };
    let mut text = commented(&header_lines(cfg));
    let _ = writeln!(text, "target,diam_w,delta,lambda,regime,m,w,q,attained,ties");
    let mut rows = Vec::new();
    for t in &targets {
        let meta = t.meta();
        let opt = optimal_hyperparameters(meta.diam_w, meta.delta, meta.lambda)?;
        let lambda = meta.lambda.map_or("inf".to_string(), |l| l.to_string());
        let _ = writeln!(
            text,
            "\"{}\",{},{},{},{},{},{},{},{},\"{}\"",
            t.spec(),
            meta.diam_w,
            meta.delta,
            lambda,
            opt.regime,
            opt.m,
            opt.w,
            opt.q,
            opt.attained,
            opt.ties.as_deref().unwrap_or("")
        );
        rows.push(json!({ "target": t.spec(), "optimum": opt }));
    }
    write_text(cfg.out.as_deref(), &text)?;
    write_json(cfg.json.as_deref(), cfg, serde_json::Value::Array(rows))?;
    Ok(Outcome::Success)
}
