use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corruption::AdversarySpec;
use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::RobustnessParams;
use crate::network::{Algorithm, Dissemination, Graph};
use crate::rng::{expand_seed, stream_rng};

/// Sub-stream of the master seed used to draw random graphs.
pub const GRAPH_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    Complete,
    Path,
    Cycle,
    Star,
    Random,
}

/// Either a named family with `m` agents or an edge-list file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GraphFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Extra-edge probability for the random family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec::family(GraphFamily::Complete, 1)
    }
}

impl GraphSpec {
    pub fn family(family: GraphFamily, m: usize) -> Self {
        GraphSpec {
            family: Some(family),
            m: Some(m),
            edge_prob: None,
            path: None,
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        GraphSpec {
            family: None,
            m: None,
            edge_prob: None,
            path: Some(path.into()),
        }
    }

    /// Builds the graph. Random graphs are drawn from the `GRAPH_STREAM`
    /// sub-seed of `seed`, so every trial shares one topology.
    pub fn build(&self, seed: u64) -> Result<Graph> {
        match (&self.family, &self.path) {
            (Some(family), None) => {
                let m = self
                    .m
                    .ok_or_else(|| Error::config("graph family needs `m`"))?;
                if self.edge_prob.is_some() && *family != GraphFamily::Random {
                    return Err(Error::config(
                        "`edge_prob` only applies to the random family",
                    ));
                }
                match family {
                    GraphFamily::Complete => Graph::complete(m),
                    GraphFamily::Path => Graph::path(m),
                    GraphFamily::Cycle => Graph::cycle(m),
                    GraphFamily::Star => Graph::star(m),
                    GraphFamily::Random => {
                        let mut rng = stream_rng(expand_seed(seed, GRAPH_STREAM));
                        Graph::random_connected(m, self.edge_prob.unwrap_or(0.2), &mut rng)
                    }
                }
            }
            (None, Some(path)) => {
                if self.m.is_some() || self.edge_prob.is_some() {
                    return Err(Error::config("a graph file takes no `m` or `edge_prob`"));
                }
                Graph::load(path)
            }
            _ => Err(Error::config(
                "graph needs exactly one of `family` or `path`",
            )),
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_bounds() -> bool {
    true
}

/// One experiment, as read from a JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub dist: DistributionSpec,
    #[serde(default = "AdversarySpec::none")]
    pub adversary: AdversarySpec,
    pub params: RobustnessParams,
    pub algorithm: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<usize>,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub k: usize,
    pub horizon: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dissemination: Dissemination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_source: Option<usize>,
    /// Fill the bound columns.
    #[serde(default = "default_bounds")]
    pub bounds: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        // graph files are relative to the config file
        if let Some(p) = &config.graph.path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    config.graph.path = Some(dir.join(p));
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        match (self.algorithm, self.t0) {
            (AlgorithmKind::Fixed, Some(t0)) => Ok(Algorithm::Fixed { t0 }),
            (AlgorithmKind::Fixed, None) => Err(Error::config("fixed algorithm needs `t0`")),
            (AlgorithmKind::Adaptive, None) => Ok(Algorithm::Adaptive),
            (AlgorithmKind::Adaptive, Some(_)) => {
                Err(Error::config("`t0` only applies to the fixed algorithm"))
            }
        }
    }

    /// Checks everything that can be checked without running: ranges,
    /// the graph source, and the algorithm/horizon combination.
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        self.adversary.validate()?;
        let algorithm = self.algorithm()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        if let Algorithm::Fixed { t0 } = algorithm {
            if t0 == 0 || t0 >= self.horizon {
                return Err(Error::config(format!(
                    "need 0 < t0 < horizon, got t0={t0}, horizon={}",
                    self.horizon
                )));
            }
        }
        if let Some(p) = &self.graph.path {
            if !p.exists() {
                return Err(Error::config(format!(
                    "graph file {} does not exist",
                    p.display()
                )));
            }
        }
        let graph = self.graph.build(self.seed)?;
        if let Some(o) = self.threshold_source {
            if o >= graph.m() {
                return Err(Error::config(format!(
                    "threshold source {o} out of range for m = {}",
                    graph.m()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": "demo",
        "dist": {"family": "gaussian", "mean": 0.0, "std": 1.0},
        "adversary": {"strategy": {"type": "constant_value", "value": 50.0}, "eta": 0.02},
        "params": {"eta": 0.02, "delta": 0.3},
        "algorithm": "fixed",
        "t0": 100,
        "horizon": 1000,
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.k, 0);
        assert_eq!(c.trials, 1);
        assert!(c.bounds);
        assert_eq!(c.graph, GraphSpec::family(GraphFamily::Complete, 1));
        assert_eq!(c.algorithm().unwrap(), Algorithm::Fixed { t0: 100 });
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = MINIMAL.replace("\"horizon\"", "\"horizn\": 3, \"horizon\"");
        assert!(matches!(
            ExperimentConfig::from_json(&text),
            Err(Error::Config(_))
        ));
        let text = MINIMAL.replace(
            "\"eta\": 0.02, \"delta\"",
            "\"eta\": 0.02, \"gamma\": 1, \"delta\"",
        );
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        for (from, to) in [
            ("\"t0\": 100", "\"t0\": 1000"),
            ("\"eta\": 0.02, \"delta\"", "\"eta\": 0.2, \"delta\""),
            ("\"horizon\": 1000", "\"horizon\": 0"),
            ("\"algorithm\": \"fixed\"", "\"algorithm\": \"adaptive\""),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_json(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn graph_sources() {
        assert_eq!(
            GraphSpec::family(GraphFamily::Cycle, 5)
                .build(0)
                .unwrap()
                .m(),
            5
        );
        let r1 = GraphSpec {
            edge_prob: Some(0.3),
            ..GraphSpec::family(GraphFamily::Random, 10)
        };
        assert_eq!(r1.build(4).unwrap(), r1.build(4).unwrap());
        let both = GraphSpec {
            path: Some("g.txt".into()),
            ..GraphSpec::family(GraphFamily::Path, 3)
        };
        assert!(both.build(0).is_err());
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("g.txt");
        std::fs::write(&file, "m 3\n0 1\n1 2\n").unwrap();
        assert_eq!(
            GraphSpec::file(&file).build(0).unwrap(),
            Graph::path(3).unwrap()
        );
        let missing = MINIMAL.replace(
            "\"horizon\"",
            "\"graph\": {\"path\": \"/nonexistent/g.txt\"}, \"horizon\"",
        );
        assert!(ExperimentConfig::from_json(&missing).is_err());
    }
}
