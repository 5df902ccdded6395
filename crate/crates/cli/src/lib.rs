//! Command-line front end: configuration, dispatch and artifact output.
//!
//! Exit codes: 0 on success (or a passing check), 1 when a statistical check
//! fails, 2 on usage errors, 3 on runtime errors.

pub mod commands;
pub mod config;

pub use commands::{dispatch, Outcome};
pub use config::{parse_config, Command, ParseOutcome, RawOptions, RunConfig, UsageError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_config(argv) {
        Ok(cfg) => cfg,
        Err(ParseOutcome::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
        Err(ParseOutcome::Usage(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(&cfg)) {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::Fail) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
