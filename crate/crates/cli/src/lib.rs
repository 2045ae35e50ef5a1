//! Command-line front end for the `stdcoder` library.
//!
//! [`run`] parses arguments, dispatches to a subcommand and maps the outcome to an
//! exit code: 0 on success, 1 on usage errors, 2 on data or model errors.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod pipeline;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::AuthorState;
pub use crate::error::{CliError, CliResult};

/// Run one command line (without the program name) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv = std::iter::once(OsString::from("stdcoder")).chain(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 1;
        }
        // A pool built earlier in this process stays in force.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, seed).map(|_| 0),
        Command::Simulate(a) => commands::simulate(a, seed).map(|_| 0),
        Command::TrainHmm(a) => {
            let statuses = commands::train_hmm_cmd(a, seed)?;
            if a.all {
                println!("{}", serde_json::to_string(&statuses).expect("status serializes"));
            }
            Ok(if statuses.iter().any(|s| s.status == AuthorState::Failed) {
                2
            } else {
                0
            })
        }
        Command::CodingTimes(a) => commands::coding_times(a, seed).map(|_| 0),
        Command::BuildDict(a) => commands::build_dict(a, seed).map(|_| 0),
        Command::Featurize(a) => commands::featurize_cmd(a, seed).map(|_| 0),
        Command::TrainMdn(a) => commands::train_mdn_cmd(a, seed).map(|_| 0),
        Command::Predict(a) => commands::predict(a, seed).map(|_| 0),
        Command::Analyze(a) => analyze::run(&a.analysis, seed).map(|_| 0),
        Command::Pipeline(a) => {
            let summary = pipeline::pipeline(a, cli.seed)?;
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Ok(summary.exit_code)
        }
    }
}
