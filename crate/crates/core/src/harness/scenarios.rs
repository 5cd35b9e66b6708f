//! The reference experiment: unit Gaussian data where a 2% share of the
//! stream is replaced by draws from a Gaussian centred at 100.

use super::config::{AlgorithmKind, ExperimentConfig, GraphFamily, GraphSpec};
use crate::corruption::{AdversarySpec, Strategy};
use crate::distribution::DistributionSpec;
use crate::estimator::RobustnessParams;

pub const ETA: f64 = 0.02;
pub const DELTA: f64 = 0.3;
pub const T0: usize = 100;
pub const HORIZON: usize = 1_000;
pub const AGENTS: usize = 5;

pub fn clean() -> DistributionSpec {
    DistributionSpec::Gaussian {
        mean: 0.0,
        std: 1.0,
    }
}

pub fn contamination() -> AdversarySpec {
    AdversarySpec {
        strategy: Strategy::FixedDistribution {
            dist: DistributionSpec::Gaussian {
                mean: 100.0,
                std: 1.0,
            },
        },
        eta: ETA,
    }
}

pub fn params() -> RobustnessParams {
    RobustnessParams::new(ETA, DELTA).expect("reference parameters are valid")
}

/// One agent, `T = 1000`, either estimator.
pub fn reference_single_agent(algorithm: AlgorithmKind) -> ExperimentConfig {
    ExperimentConfig {
        scenario: format!(
            "reference-single-{}",
            match algorithm {
                AlgorithmKind::Fixed => "fixed",
                AlgorithmKind::Adaptive => "adaptive",
            }
        ),
        dist: clean(),
        adversary: contamination(),
        params: params(),
        algorithm,
        t0: (algorithm == AlgorithmKind::Fixed).then_some(T0),
        graph: GraphSpec::default(),
        k: 0,
        horizon: HORIZON,
        trials: 1,
        seed: 0,
        output_dir: "out".into(),
        dissemination: Default::default(),
        threshold_source: None,
        bounds: true,
    }
}

/// Five agents on a cycle running fixed thresholds with `k` consensus
/// rounds per step.
pub fn reference_network(k: usize) -> ExperimentConfig {
    ExperimentConfig {
        scenario: format!("reference-network-k{k}"),
        graph: GraphSpec::family(GraphFamily::Cycle, AGENTS),
        k,
        ..reference_single_agent(AlgorithmKind::Fixed)
    }
}
