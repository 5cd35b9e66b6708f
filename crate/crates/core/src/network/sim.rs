//! Multi-agent simulation: each agent runs an online trimmed mean on its own
//! corrupted stream, using the thresholds of one source agent, then performs
//! `K` rounds of neighbourhood averaging per time step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::perron::PerronMatrix;
use crate::corruption::{AdversarySpec, AgentStream};
use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::{
    compute_epsilon, threshold_sandwich, AdaptiveTrimEstimator, DiagnosticsRecord,
    FixedTrimEstimator, RobustnessParams, TrimBounds,
};
use crate::rng::{expand_seed, stream_rng};

/// Local update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Fixed { t0: usize },
    Adaptive,
}

/// How the source agent's thresholds reach the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissemination {
    /// Everyone sees the source thresholds as soon as they exist.
    #[default]
    Instant,
    /// One hop per time step; until they arrive an agent uses its own.
    Flooding,
}

/// Sub-stream of the master seed that picks the threshold source.
const SOURCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: Graph,
    pub params: RobustnessParams,
    pub algorithm: Algorithm,
    pub rounds: usize,
    /// One spec per agent, or a single spec shared by all.
    pub adversaries: Vec<AdversarySpec>,
    pub dist: DistributionSpec,
    pub horizon: usize,
    pub seed: u64,
    pub dissemination: Dissemination,
    /// Agent whose thresholds everyone uses; drawn from the seed if unset.
    pub threshold_source: Option<usize>,
}

impl RunConfig {
    pub fn new(
        graph: Graph,
        params: RobustnessParams,
        algorithm: Algorithm,
        rounds: usize,
        adversary: AdversarySpec,
        dist: DistributionSpec,
        horizon: usize,
        seed: u64,
    ) -> Self {
        RunConfig {
            graph,
            params,
            algorithm,
            rounds,
            adversaries: vec![adversary],
            dist,
            horizon,
            seed,
            dissemination: Dissemination::Instant,
            threshold_source: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.graph.m();
        if self.adversaries.len() != 1 && self.adversaries.len() != m {
            return Err(Error::config(format!(
                "need 1 or {m} adversary specs, got {}",
                self.adversaries.len()
            )));
        }
        for a in &self.adversaries {
            a.validate()?;
        }
        self.dist.validate()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if let Algorithm::Fixed { t0 } = self.algorithm {
            if t0 == 0 || self.horizon <= t0 {
                return Err(Error::config(format!(
                    "fixed thresholds need 0 < t0 < horizon, got t0={t0}, horizon={}",
                    self.horizon
                )));
            }
        }
        if let Some(o) = self.threshold_source {
            if o >= m {
                return Err(Error::config(format!(
                    "threshold source {o} out of range for m = {m}"
                )));
            }
        }
        Ok(())
    }

    fn adversary(&self, agent: usize) -> AdversarySpec {
        if self.adversaries.len() == 1 {
            self.adversaries[0]
        } else {
            self.adversaries[agent]
        }
    }
}

/// Time series of one agent. Index `t - 1` holds step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHistory {
    rounds: usize,
    /// `mu_(i,t)^k` at `(t - 1) * (K + 1) + k`; NaN during warm-up.
    estimates: Vec<f64>,
    pub corrupted: Vec<bool>,
    /// Thresholds applied in the local update (None during warm-up).
    pub bounds_used: Vec<Option<TrimBounds>>,
    /// Plain mean of every emitted averaging-stream sample.
    pub naive_mean: f64,
    pub fallbacks: u64,
}

impl AgentHistory {
    fn new(rounds: usize, horizon: usize) -> Self {
        AgentHistory {
            rounds,
            estimates: Vec::with_capacity(horizon * (rounds + 1)),
            corrupted: Vec::with_capacity(horizon),
            bounds_used: Vec::with_capacity(horizon),
            naive_mean: 0.0,
            fallbacks: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.corrupted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corrupted.is_empty()
    }

    /// `mu_(i,t)^k`, or None during warm-up.
    pub fn estimate(&self, t: usize, k: usize) -> Option<f64> {
        assert!(t >= 1 && k <= self.rounds, "t={t}, k={k} out of range");
        let v = self.estimates[(t - 1) * (self.rounds + 1) + k];
        (!v.is_nan()).then_some(v)
    }

    /// Post-consensus estimate `mu_(i,t)^K`.
    pub fn final_estimate(&self, t: usize) -> Option<f64> {
        self.estimate(t, self.rounds)
    }

    pub fn terminal(&self) -> Option<f64> {
        self.final_estimate(self.len())
    }
}

/// Result of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedRun {
    pub algorithm: Algorithm,
    pub rounds: usize,
    pub horizon: usize,
    pub source: usize,
    /// Steps the source thresholds take to reach each agent.
    pub delays: Vec<usize>,
    pub agents: Vec<AgentHistory>,
    /// Thresholds held by the source agent at each step.
    pub source_thresholds: Vec<Option<TrimBounds>>,
    /// Trim fraction behind the source thresholds at each step.
    pub epsilon: Vec<Option<f64>>,
    /// Plain average of the local (`k = 0`) updates, NaN during warm-up.
    pub uniform_consensus: Vec<f64>,
    /// Stationary-weighted average of the local updates, NaN during warm-up.
    pub weighted_consensus: Vec<f64>,
    /// Sandwich-based bad events of the source thresholds (adaptive only,
    /// and only when the clean distribution has quantiles).
    pub diagnostics: Option<DiagnosticsRecord>,
}

impl DistributedRun {
    pub fn m(&self) -> usize {
        self.agents.len()
    }

    /// `max(|alpha_o|, |beta_o|)` per step, 0 where none exist yet.
    pub fn threshold_magnitudes(&self) -> Vec<f64> {
        self.source_thresholds
            .iter()
            .map(|b| b.map(|b| b.magnitude()).unwrap_or(0.0))
            .collect()
    }
}

enum Local {
    Fixed(FixedTrimEstimator),
    Adaptive(AdaptiveTrimEstimator),
}

impl Local {
    fn replace(&mut self, v: f64) -> Result<()> {
        match self {
            Local::Fixed(e) => e.replace_estimate(v),
            Local::Adaptive(e) => e.replace_estimate(v),
        }
    }
}

/// Runs the simulation. Agent `i` draws its data from the stream seeded by
/// `expand_seed(seed, i)`.
pub fn distributed_run(config: &RunConfig) -> Result<DistributedRun> {
    config.validate()?;
    let m = config.graph.m();
    let k_rounds = config.rounds;
    let horizon = config.horizon;
    let perron = PerronMatrix::new(&config.graph)?;
    let weights = perron.stationary_weights();

    let source = match config.threshold_source {
        Some(o) => o,
        None => stream_rng(expand_seed(config.seed, SOURCE_STREAM)).random_range(0..m),
    };
    let delays: Vec<usize> = match config.dissemination {
        Dissemination::Instant => vec![0; m],
        Dissemination::Flooding => config
            .graph
            .distances_from(source)
            .into_iter()
            .map(|d| d.expect("graph is connected"))
            .collect(),
    };

    let mut streams = (0..m)
        .map(|i| {
            AgentStream::new(
                config.dist,
                config.adversary(i),
                expand_seed(config.seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut locals = (0..m)
        .map(|_| {
            Ok(match config.algorithm {
                Algorithm::Fixed { t0 } => {
                    Local::Fixed(FixedTrimEstimator::new(config.params, t0)?)
                }
                Algorithm::Adaptive => Local::Adaptive(AdaptiveTrimEstimator::new(config.params)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut histories: Vec<AgentHistory> = (0..m)
        .map(|_| AgentHistory::new(k_rounds, horizon))
        .collect();
    let mut naive_sums = vec![0.0; m];
    let mut xs = vec![0.0; m];
    let mut last_bounds: Vec<Option<TrimBounds>> = vec![None; m];

    let mut source_thresholds = Vec::with_capacity(horizon);
    let mut epsilon = Vec::with_capacity(horizon);
    let mut uniform_consensus = Vec::with_capacity(horizon);
    let mut weighted_consensus = Vec::with_capacity(horizon);
    let has_quantiles = config.dist.std_dev() > 0.0;
    let mut diagnostics = match config.algorithm {
        Algorithm::Adaptive if has_quantiles => Some(DiagnosticsRecord::default()),
        _ => None,
    };

    let mut current = vec![0.0; m];
    let mut next = vec![0.0; m];

    for t in 1..=horizon {
        // data arrival; an adversary sees the thresholds its agent applied last
        for i in 0..m {
            let record = match &mut locals[i] {
                Local::Fixed(est) => {
                    let ctx = last_bounds[i].or(est.bounds());
                    let r = streams[i].next_x(t as u64, ctx.as_ref())?;
                    if t <= est.t0() {
                        est.observe_warmup(r.emitted_value)?;
                        if t == est.t0() {
                            est.warmup_finish()?;
                        }
                    }
                    r
                }
                Local::Adaptive(est) => {
                    let ctx = last_bounds[i];
                    let (rx, ry) = streams[i].next_pair(t as u64, ctx.as_ref())?;
                    est.insert_threshold_sample(ry.emitted_value)?;
                    rx
                }
            };
            xs[i] = record.emitted_value;
            naive_sums[i] += record.emitted_value;
            histories[i].corrupted.push(record.corrupted);
        }

        // thresholds held by the source after this arrival
        let (src_bounds, src_eps) = match &locals[source] {
            Local::Fixed(est) => (est.bounds(), est.epsilon().map(|e| e.value)),
            Local::Adaptive(est) => {
                let (b, e) = est.current_bounds()?;
                (Some(b), Some(e.value))
            }
        };
        source_thresholds.push(src_bounds);
        epsilon.push(src_eps);
        if let (Some(diag), Some(b)) = (diagnostics.as_mut(), src_bounds) {
            let eps = compute_epsilon(&config.params, t).value;
            let bad = match threshold_sandwich(&config.dist, eps, &b)? {
                Some(s) => !s.all(),
                None => true,
            };
            diag.push(bad);
        }

        // local updates
        let mut active = true;
        for i in 0..m {
            let shared = t
                .checked_sub(delays[i])
                .filter(|&s| s >= 1)
                .and_then(|s| source_thresholds[s - 1]);
            let value = match &mut locals[i] {
                Local::Fixed(est) => {
                    if t <= est.t0() {
                        active = false;
                        histories[i].bounds_used.push(None);
                        continue;
                    }
                    let b = shared.or(est.bounds()).expect("warm-up finished");
                    histories[i].bounds_used.push(Some(b));
                    last_bounds[i] = Some(b);
                    est.step_with(&b, xs[i])?
                }
                Local::Adaptive(est) => {
                    let b = match shared {
                        Some(b) => b,
                        None => est.current_bounds()?.0,
                    };
                    histories[i].bounds_used.push(Some(b));
                    last_bounds[i] = Some(b);
                    est.update_with(&b, xs[i])?
                }
            };
            current[i] = value;
        }

        if !active {
            for h in histories.iter_mut() {
                h.estimates
                    .extend(std::iter::repeat_n(f64::NAN, k_rounds + 1));
            }
            uniform_consensus.push(f64::NAN);
            weighted_consensus.push(f64::NAN);
            continue;
        }

        uniform_consensus.push(current.iter().sum::<f64>() / m as f64);
        weighted_consensus.push(weights.iter().zip(&current).map(|(w, x)| w * x).sum());
        for (h, &v) in histories.iter_mut().zip(&current) {
            h.estimates.push(v);
        }
        for _ in 0..k_rounds {
            perron.consensus_round_into(&current, &mut next)?;
            std::mem::swap(&mut current, &mut next);
            for (h, &v) in histories.iter_mut().zip(&current) {
                h.estimates.push(v);
            }
        }
        if k_rounds > 0 {
            for (local, &v) in locals.iter_mut().zip(&current) {
                local.replace(v)?;
            }
        }
    }

    for (i, h) in histories.iter_mut().enumerate() {
        h.naive_mean = naive_sums[i] / horizon as f64;
        h.fallbacks =
            streams[i].x_adversary().fallback_count() + streams[i].y_adversary().fallback_count();
    }

    Ok(DistributedRun {
        algorithm: config.algorithm,
        rounds: k_rounds,
        horizon,
        source,
        delays,
        agents: histories,
        source_thresholds,
        epsilon,
        uniform_consensus,
        weighted_consensus,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruption::Strategy;

    fn params() -> RobustnessParams {
        RobustnessParams::new(0.02, 0.3).unwrap()
    }

    fn contaminated() -> AdversarySpec {
        AdversarySpec::new(
            Strategy::FixedDistribution {
                dist: DistributionSpec::gaussian(100.0, 1.0).unwrap(),
            },
            0.02,
        )
        .unwrap()
    }

    fn config(graph: Graph, algorithm: Algorithm, rounds: usize, seed: u64) -> RunConfig {
        RunConfig::new(
            graph,
            params(),
            algorithm,
            rounds,
            contaminated(),
            DistributionSpec::gaussian(0.0, 1.0).unwrap(),
            400,
            seed,
        )
    }

    #[test]
    fn single_agent_matches_fixed_estimator() {
        for rounds in [0, 1, 3] {
            let cfg = config(
                Graph::complete(1).unwrap(),
                Algorithm::Fixed { t0: 100 },
                rounds,
                5,
            );
            let run = distributed_run(&cfg).unwrap();
            let mut stream =
                AgentStream::new(cfg.dist, cfg.adversaries[0], expand_seed(5, 0)).unwrap();
            let mut est = FixedTrimEstimator::new(params(), 100).unwrap();
            for t in 1..=400u64 {
                let ctx = est.bounds();
                let r = stream.next_x(t, ctx.as_ref()).unwrap();
                let e = est.push(r.emitted_value).unwrap().value();
                let got = run.agents[0].final_estimate(t as usize);
                assert_eq!(got.map(f64::to_bits), e.map(f64::to_bits), "t={t}");
            }
        }
    }

    #[test]
    fn single_agent_matches_adaptive_estimator() {
        let cfg = config(Graph::complete(1).unwrap(), Algorithm::Adaptive, 2, 9);
        let run = distributed_run(&cfg).unwrap();
        let mut stream = AgentStream::new(cfg.dist, cfg.adversaries[0], expand_seed(9, 0)).unwrap();
        let mut est = AdaptiveTrimEstimator::new(params());
        for t in 1..=400u64 {
            let ctx = est.bounds();
            let (x, y) = stream.next_pair(t, ctx.as_ref()).unwrap();
            let e = est.step(x.emitted_value, y.emitted_value).unwrap();
            assert_eq!(
                run.agents[0].final_estimate(t as usize).unwrap().to_bits(),
                e.to_bits()
            );
        }
    }

    #[test]
    fn complete_graph_agrees_each_step() {
        for algorithm in [Algorithm::Fixed { t0: 100 }, Algorithm::Adaptive] {
            let run =
                distributed_run(&config(Graph::complete(5).unwrap(), algorithm, 1, 3)).unwrap();
            for t in 1..=400 {
                let Some(first) = run.agents[0].final_estimate(t) else {
                    continue;
                };
                let pooled: f64 = run
                    .agents
                    .iter()
                    .map(|a| a.estimate(t, 0).unwrap())
                    .sum::<f64>()
                    / 5.0;
                for a in &run.agents {
                    assert!((a.final_estimate(t).unwrap() - first).abs() <= 1e-12);
                }
                assert!((first - pooled).abs() <= 1e-12);
                assert!((run.uniform_consensus[t - 1] - pooled).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn history_shape() {
        let run = distributed_run(&config(
            Graph::path(3).unwrap(),
            Algorithm::Fixed { t0: 100 },
            2,
            1,
        ))
        .unwrap();
        for a in &run.agents {
            assert_eq!(a.len(), 400);
            assert!(a.estimate(100, 2).is_none());
            assert!(a.estimate(101, 0).is_some());
            assert_eq!(a.bounds_used[99], None);
            // everyone uses the source thresholds
            assert_eq!(a.bounds_used[150], run.source_thresholds[149]);
        }
        assert!(run.epsilon[98].is_none());
        assert!(run.diagnostics.is_none());
    }

    #[test]
    fn flooding_delays_thresholds() {
        let mut cfg = config(Graph::path(4).unwrap(), Algorithm::Adaptive, 1, 2);
        cfg.dissemination = Dissemination::Flooding;
        cfg.threshold_source = Some(0);
        let run = distributed_run(&cfg).unwrap();
        assert_eq!(run.delays, vec![0, 1, 2, 3]);
        for t in 10..400 {
            assert_eq!(
                run.agents[3].bounds_used[t - 1],
                run.source_thresholds[t - 4]
            );
        }
        assert!(run.diagnostics.as_ref().unwrap().len() == 400);
    }

    #[test]
    fn deterministic() {
        let cfg = config(Graph::cycle(5).unwrap(), Algorithm::Adaptive, 1, 77);
        assert_eq!(
            distributed_run(&cfg).unwrap(),
            distributed_run(&cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(Graph::path(3).unwrap(), Algorithm::Fixed { t0: 400 }, 1, 1);
        assert!(matches!(distributed_run(&cfg), Err(Error::Config(_))));
        cfg.algorithm = Algorithm::Adaptive;
        cfg.adversaries = vec![AdversarySpec::none(); 2];
        assert!(distributed_run(&cfg).is_err());
        cfg.adversaries = vec![AdversarySpec::none()];
        cfg.threshold_source = Some(3);
        assert!(distributed_run(&cfg).is_err());
    }
}
