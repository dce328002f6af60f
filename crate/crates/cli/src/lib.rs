//! Library side of the `airtran` command-line tool: each subcommand is a
//! plain function so it can be driven from tests.

pub mod commands;
pub mod error;
pub mod io;
pub mod plot;

pub use commands::{
    cmd_eval, cmd_plot, cmd_sample, cmd_score, cmd_sweep, cmd_synth, cmd_validate, PoolSummary, RunOptions, SweepPlan,
    SweepRow,
};
pub use error::{exit, CliError, Result};
