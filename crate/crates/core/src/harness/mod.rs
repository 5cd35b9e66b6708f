//! Seeded Monte Carlo experiments: configuration, trial execution on a
//! worker pool, CSV/JSON output and bound-coverage checks.
//!
//! Trial `i` of an experiment with master seed `s` runs on seed
//! `expand_seed(s, i)`; agent `a` inside it draws from
//! `expand_seed(expand_seed(s, i), a)`. See [`crate::rng`] for the expansion
//! function and its test vectors.

mod config;
mod record;
mod run;
pub mod scenarios;
mod verify;

pub use config::{AlgorithmKind, ExperimentConfig, GraphFamily, GraphSpec, GRAPH_STREAM};
pub use record::{emit_csv, read_csv, write_csv, Row, TrialRecord, TrialSummary, CSV_HEADER};
pub use run::{
    median, run_experiment, run_trials, sweep, trial_csv_path, ExperimentSummary, GraphInfo,
    Prepared, SweepPoint, CONTRACTION_STREAM, SUMMARY_FILE,
};
pub use verify::{tally_rows, verify_bounds, wilson_interval, BoundCheck, BoundReport, BoundTally};
