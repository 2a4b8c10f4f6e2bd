//! Front end for `ppir-core`: scenario files in, traces and reports out.
//!
//! Exit codes: 0 success, 2 unreadable input or bad arguments, 3 scenario
//! refused by the precondition checks, 4 a user failed to recover a new
//! message. Anything else (I/O, internal) exits 1.

pub mod commands;
pub mod schema;
pub mod selftest;

pub use commands::{
    cmd_audit, cmd_rates, cmd_run, read_scenario, AuditOptions, CliError, RunOptions, DEFAULT_RUNS, EXIT_FAILURE,
    EXIT_OK, EXIT_PARSE, EXIT_RECOVERY, EXIT_VALIDATION,
};
pub use schema::{load_scenario, ReportFile, ScenarioFile, TraceFile};
pub use selftest::{run_selftest, FixtureResult, Fixtures};
