//! Robust mean estimation from adversarially corrupted data streams.
//!
//! The crate provides two online trimmed-mean estimators, one with trimming
//! thresholds fixed after a warm-up period and one that re-derives them from a
//! growing order-statistic multiset at every step, together with a
//! multi-agent variant in which agents blend their estimates through
//! neighbour averaging on a communication graph.
//!
//! Layout:
//!
//! * [`order_stats`]: balanced multiset with logarithmic insert and k-th
//!   smallest selection.
//! * [`estimator`]: the trim operator, the epsilon schedule, both online
//!   estimators and closed-form error bounds.
//! * [`corruption`]: clean-data sampling and budget-limited adversaries.
//! * [`network`]: graphs, the averaging (Perron) matrix, its spectrum, and the
//!   distributed simulator.
//! * [`harness`]: seeded Monte Carlo experiments, bound coverage and CSV/JSON
//!   persistence.

pub mod corruption;
pub mod distribution;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod network;
pub mod order_stats;
pub mod rng;

pub use corruption::{Adversary, AdversarySpec, AgentStream, Strategy, StreamRecord};
pub use distribution::DistributionSpec;
pub use error::{Error, Result};
pub use estimator::{
    AdaptiveTrimEstimator, DiagnosticsRecord, Epsilon, Estimate, FixedTrimEstimator,
    RobustnessParams, TrimBounds,
};
pub use network::{Algorithm, Dissemination, DistributedRun, Graph, PerronMatrix};
pub use order_stats::OrderStatMultiset;
