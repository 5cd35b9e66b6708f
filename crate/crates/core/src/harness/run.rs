use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::record::{emit_csv, Row, TrialRecord, TrialSummary};
use super::verify::{tally_rows, BoundReport, BoundTally};
use crate::error::{Error, Result};
use crate::estimator::{
    compute_epsilon, estimation_error_bound, theorem1_bound, threshold_envelope,
};
use crate::network::{
    contraction_factor, distributed_run, Algorithm, DistributedRun, Graph, PerronMatrix, RunConfig,
};
use crate::rng::{expand_seed, stream_rng};

/// Sub-stream of the master seed used to measure the contraction constant.
pub const CONTRACTION_STREAM: u64 = u64::MAX - 2;

/// Spectral facts about the experiment graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub m: usize,
    pub spectrum: Vec<f64>,
    pub lambda: f64,
    pub contraction_rate: f64,
    /// Measured constant `c` of the geometric consensus terms.
    pub c: f64,
}

impl GraphInfo {
    pub fn measure(graph: &Graph, seed: u64) -> Result<Self> {
        let p = PerronMatrix::new(graph)?;
        let mut rng = stream_rng(expand_seed(seed, CONTRACTION_STREAM));
        Ok(GraphInfo {
            m: graph.m(),
            spectrum: p.spectrum().to_vec(),
            lambda: p.lambda(),
            contraction_rate: p.contraction_rate(),
            c: p.measure_contraction_constant(32, 60, &mut rng),
        })
    }
}

/// A validated config with its graph built and measured.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub algorithm: Algorithm,
    pub graph: Graph,
    pub info: GraphInfo,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let graph = config.graph.build(config.seed)?;
        let info = GraphInfo::measure(&graph, config.seed)?;
        Ok(Prepared {
            config: config.clone(),
            algorithm: config.algorithm()?,
            graph,
            info,
        })
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        expand_seed(self.config.seed, trial as u64)
    }

    pub fn run_config(&self, trial: usize) -> RunConfig {
        let c = &self.config;
        let mut rc = RunConfig::new(
            self.graph.clone(),
            c.params,
            self.algorithm,
            c.k,
            c.adversary,
            c.dist,
            c.horizon,
            self.trial_seed(trial),
        );
        rc.dissemination = c.dissemination;
        rc.threshold_source = c.threshold_source;
        rc
    }

    /// Runs one trial and lays it out as rows.
    pub fn run_trial(&self, trial: usize) -> Result<TrialRecord> {
        let run = distributed_run(&self.run_config(trial))?;
        Ok(self.record(trial, &run))
    }

    fn record(&self, trial: usize, run: &DistributedRun) -> TrialRecord {
        let c = &self.config;
        let mu = c.dist.mean();
        let horizon = run.horizon;
        let k_last = run.rounds;
        let series = if c.bounds {
            self.bound_series(run)
        } else {
            BoundSeries::empty(run.m(), horizon)
        };
        let mut rows = Vec::with_capacity(horizon * run.m() * (k_last + 1));
        for t in 1..=horizon {
            for (i, agent) in run.agents.iter().enumerate() {
                let used = agent.bounds_used[t - 1];
                for k in 0..=k_last {
                    let estimate = agent.estimate(t, k);
                    let last = k == k_last;
                    rows.push(Row {
                        t,
                        agent: i,
                        k,
                        estimate,
                        error: estimate.map(|e| e - mu),
                        corrupted: agent.corrupted[t - 1],
                        eps_t: run.epsilon[t - 1],
                        alpha: used.map(|b| b.alpha()),
                        beta: used.map(|b| b.beta()),
                        bound_thm1: series.thm1[i][t - 1].filter(|_| last),
                        bound_thm2: series.thm2[i][t - 1].filter(|_| last),
                    });
                }
            }
        }
        let final_errors = run
            .agents
            .iter()
            .map(|a| a.terminal().map(|e| (e - mu).abs()).unwrap_or(f64::NAN))
            .collect();
        let summary = TrialSummary {
            trial,
            seed: self.trial_seed(trial),
            final_errors,
            naive_errors: run
                .agents
                .iter()
                .map(|a| (a.naive_mean - mu).abs())
                .collect(),
            naive_means: run.agents.iter().map(|a| a.naive_mean).collect(),
            corrupted_counts: run
                .agents
                .iter()
                .map(|a| a.corrupted.iter().filter(|&&x| x).count())
                .collect(),
            source: run.source,
            t_bar: run.diagnostics.as_ref().map(|d| d.first_clean_time()),
            bad_events: run.diagnostics.as_ref().map(|d| d.bad_event_count()),
            max_bias_fallbacks: run.agents.iter().map(|a| a.fallbacks).sum(),
        };
        TrialRecord { rows, summary }
    }

    fn bound_series(&self, run: &DistributedRun) -> BoundSeries {
        let c = &self.config;
        let sigma = c.dist.std_dev();
        let m = run.m();
        let mut s = BoundSeries::empty(m, run.horizon);
        match self.algorithm {
            Algorithm::Fixed { t0 } if m == 1 => {
                for t in 2 * t0..=run.horizon {
                    s.thm1[0][t - 1] = theorem1_bound(&c.params, sigma, t0, t).ok();
                }
            }
            Algorithm::Fixed { t0 } => {
                let Some(b) = run.source_thresholds[t0 - 1] else {
                    return s;
                };
                let values = network_fixed_series(
                    &self.config,
                    sigma,
                    m,
                    t0,
                    run.horizon,
                    self.rate_factor(run.rounds),
                    b.magnitude(),
                );
                for row in s.thm1.iter_mut() {
                    row.clone_from(&values);
                }
            }
            Algorithm::Adaptive => {
                let Some(diag) = &run.diagnostics else {
                    return s;
                };
                let t_bar = diag.first_clean_time();
                if t_bar >= run.horizon {
                    return s;
                }
                let mu = c.dist.mean();
                // error of the pooled value and per-agent disagreement at t_bar
                let pooled = if m == 1 {
                    run.agents[0]
                        .final_estimate(t_bar)
                        .expect("adaptive has estimates")
                } else {
                    run.uniform_consensus[t_bar - 1]
                };
                let err = (pooled - mu).abs();
                let r = if m == 1 {
                    0.0
                } else {
                    self.rate_factor(run.rounds)
                };
                let magnitudes = run.threshold_magnitudes();
                let mut mixing = 0.0;
                let mut envelope = 0.0;
                let mut shared = vec![(0.0, 0.0); run.horizon];
                for t in t_bar + 1..=run.horizon {
                    mixing = r * (mixing + 2.0 * magnitudes[t - 1] / t as f64);
                    envelope += threshold_envelope(&c.params, sigma, t);
                    let value = t_bar as f64 / t as f64 * err + envelope / t as f64;
                    shared[t - 1] = (mixing + value, r.powf((t - t_bar) as f64));
                }
                for (i, agent) in run.agents.iter().enumerate() {
                    let d = if m == 1 {
                        0.0
                    } else {
                        (agent.final_estimate(t_bar).expect("adaptive has estimates") - pooled)
                            .abs()
                    };
                    for t in t_bar + 1..=run.horizon {
                        let (base, decay) = shared[t - 1];
                        s.thm2[i][t - 1] = Some(base + decay * d);
                    }
                }
            }
        }
        s
    }

    fn rate_factor(&self, rounds: usize) -> f64 {
        contraction_factor(self.info.c, self.info.contraction_rate, rounds)
    }
}

/// Fixed-threshold network bound for every `t`, summed incrementally.
/// Every agent starts from the same placeholder at `t0`, so the initial
/// disagreement term is zero.
fn network_fixed_series(
    config: &ExperimentConfig,
    sigma: f64,
    m: usize,
    t0: usize,
    horizon: usize,
    r: f64,
    magnitude: f64,
) -> Vec<Option<f64>> {
    let mut out = vec![None; horizon];
    let Ok(init) = estimation_error_bound(sigma, 4.0 * compute_epsilon(&config.params, t0).value)
    else {
        return out;
    };
    let mut mixing = 0.0;
    for t in t0 + 1..=horizon {
        mixing = r * (mixing + 2.0 * magnitude / (t - t0) as f64);
        let precondition = t >= 2 * t0 && config.params.delta() >= 4.0 * (-((t - t0) as f64)).exp();
        if precondition {
            let sampling = 2.0 * sigma * (config.params.log_term() / (m * (t - t0)) as f64).sqrt();
            out[t - 1] = Some(mixing + 3.0 * init + sampling);
        }
    }
    out
}

struct BoundSeries {
    thm1: Vec<Vec<Option<f64>>>,
    thm2: Vec<Vec<Option<f64>>>,
}

impl BoundSeries {
    fn empty(m: usize, horizon: usize) -> Self {
        BoundSeries {
            thm1: vec![vec![None; horizon]; m],
            thm2: vec![vec![None; horizon]; m],
        }
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

/// Runs every trial in memory. Output order follows the trial index
/// whatever the thread count.
pub fn run_trials(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(GraphInfo, Vec<TrialRecord>)> {
    let prepared = Prepared::new(config)?;
    let records = pool(threads)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| prepared.run_trial(trial))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((prepared.info, records))
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub scenario: String,
    pub config: ExperimentConfig,
    pub graph: GraphInfo,
    /// Median over trials of the largest per-agent terminal error.
    pub median_final_error: f64,
    pub max_final_error: f64,
    pub median_naive_error: f64,
    pub report: BoundReport,
    pub notes: Vec<String>,
    pub trials: Vec<TrialSummary>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn trial_csv_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial_{trial:04}.csv"))
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Runs all trials, writing `trial_NNNN.csv` for each plus `summary.json`
/// into the output directory. Configuration errors surface before anything
/// is written. Rows are dropped once written, so memory stays per-trial.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentSummary> {
    let prepared = Prepared::new(config)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results: Vec<(TrialSummary, Vec<BoundTally>)> = pool(threads)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let record = prepared.run_trial(trial)?;
                emit_csv(&record.rows, &trial_csv_path(dir, trial))?;
                let tallies = if config.bounds {
                    tally_rows(&record.rows, config)
                } else {
                    Vec::new()
                };
                Ok((record.summary, tallies))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(&prepared, results);
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

fn summarize(
    prepared: &Prepared,
    results: Vec<(TrialSummary, Vec<BoundTally>)>,
) -> ExperimentSummary {
    let config = &prepared.config;
    let mut notes = Vec::new();
    let mut trials = Vec::with_capacity(results.len());
    let mut tallies = Vec::new();
    for (s, t) in results {
        trials.push(s);
        tallies.extend(t);
    }
    if !config.bounds {
        notes.push("bound evaluation disabled".to_string());
    } else if prepared.algorithm == Algorithm::Adaptive && config.dist.std_dev() == 0.0 {
        notes.push(
            "adaptive bound skipped: point-mass data has no quantiles for diagnostics".to_string(),
        );
    }
    if prepared.info.m > 1 {
        notes.push(format!(
            "network bounds use measured c = {:.6} and contraction rate {:.6}",
            prepared.info.c, prepared.info.contraction_rate
        ));
    }
    if let Algorithm::Fixed { t0 } = prepared.algorithm {
        if 2 * t0 > config.horizon {
            notes.push(format!(
                "horizon {} < 2*t0; fixed-threshold bound never applies",
                config.horizon
            ));
        }
    }
    let fallbacks: u64 = trials.iter().map(|t| t.max_bias_fallbacks).sum();
    if fallbacks > 0 {
        notes.push(format!(
            "max_bias adversary had no thresholds to read {fallbacks} times"
        ));
    }
    let mut finals: Vec<f64> = trials.iter().map(TrialSummary::max_final_error).collect();
    let max_final_error = finals.iter().copied().fold(0.0, f64::max);
    let mut naive: Vec<f64> = trials
        .iter()
        .map(|t| t.naive_errors.iter().copied().fold(0.0, f64::max))
        .collect();
    ExperimentSummary {
        scenario: config.scenario.clone(),
        config: config.clone(),
        graph: prepared.info.clone(),
        median_final_error: median(&mut finals),
        max_final_error,
        median_naive_error: median(&mut naive),
        report: BoundReport::from_tallies(tallies, Vec::new()),
        notes,
        trials,
    }
}

/// One point of a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    pub k: usize,
    pub eta: f64,
    pub t0: Option<usize>,
    pub median_final_error: f64,
    pub max_final_error: f64,
    pub pass: bool,
}

/// Runs `base` over every combination of `ks`, `etas` and `t0s` (an empty
/// list keeps the base value). `eta` is applied to both the parameters and
/// the adversary budget. Each point writes into its own subdirectory.
pub fn sweep(
    base: &ExperimentConfig,
    ks: &[usize],
    etas: &[f64],
    t0s: &[usize],
    threads: Option<usize>,
) -> Result<Vec<SweepPoint>> {
    let ks = if ks.is_empty() {
        vec![base.k]
    } else {
        ks.to_vec()
    };
    let etas = if etas.is_empty() {
        vec![base.params.eta()]
    } else {
        etas.to_vec()
    };
    let t0s: Vec<Option<usize>> = if t0s.is_empty() {
        vec![base.t0]
    } else {
        t0s.iter().copied().map(Some).collect()
    };
    let mut configs = Vec::new();
    for &k in &ks {
        for &eta in &etas {
            for &t0 in &t0s {
                let mut c = base.clone();
                c.k = k;
                c.params = crate::estimator::RobustnessParams::new(eta, base.params.delta())
                    .map_err(|e| Error::config(e.to_string()))?;
                if !matches!(c.adversary.strategy, crate::corruption::Strategy::None) {
                    c.adversary.eta = eta;
                }
                c.t0 = t0;
                let label = match t0 {
                    Some(t0) => format!("k{k}_eta{eta}_t0{t0}"),
                    None => format!("k{k}_eta{eta}"),
                };
                c.output_dir = base.output_dir.join(&label);
                c.scenario = format!("{}/{label}", base.scenario);
                c.validate()?;
                configs.push((label, c));
            }
        }
    }
    let mut points = Vec::with_capacity(configs.len());
    for (label, c) in configs {
        let s = run_experiment(&c, threads)?;
        points.push(SweepPoint {
            label,
            k: c.k,
            eta: c.params.eta(),
            t0: c.t0,
            median_final_error: s.median_final_error,
            max_final_error: s.max_final_error,
            pass: s.report.pass(),
        });
    }
    let path = base.output_dir.join("sweep.json");
    let text = serde_json::to_string_pretty(&points).expect("sweep serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(points)
}
