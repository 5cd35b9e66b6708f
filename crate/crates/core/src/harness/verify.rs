use serde::{Deserialize, Serialize};

use super::config::{AlgorithmKind, ExperimentConfig};
use super::record::Row;
use crate::estimator::corollary2_bound;

/// Counts for one bound over some set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTally {
    pub name: String,
    pub covered: usize,
    pub total: usize,
    /// Required coverage: `1 - delta` for high-probability statements, 1 for
    /// almost-sure ones.
    pub target: f64,
    /// Largest `|error| / bound` seen.
    pub worst_ratio: f64,
}

impl BoundTally {
    fn new(name: &str, target: f64) -> Self {
        BoundTally {
            name: name.to_string(),
            covered: 0,
            total: 0,
            target,
            worst_ratio: 0.0,
        }
    }

    fn add(&mut self, holds: bool, ratio: f64) {
        self.total += 1;
        self.covered += usize::from(holds);
        self.worst_ratio = self.worst_ratio.max(ratio);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub covered: usize,
    pub total: usize,
    pub coverage: f64,
    pub target: f64,
    /// 95% Wilson score interval for the coverage.
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub worst_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Merges per-trial tallies by bound name, keeping first-seen order.
    pub fn from_tallies<I>(tallies: I, notes: Vec<String>) -> Self
    where
        I: IntoIterator<Item = BoundTally>,
    {
        let mut merged: Vec<BoundTally> = Vec::new();
        for t in tallies {
            match merged.iter_mut().find(|m| m.name == t.name) {
                Some(m) => {
                    m.covered += t.covered;
                    m.total += t.total;
                    m.worst_ratio = m.worst_ratio.max(t.worst_ratio);
                }
                None => merged.push(t),
            }
        }
        let checks = merged
            .into_iter()
            .filter(|t| t.total > 0)
            .map(|t| {
                let coverage = t.covered as f64 / t.total as f64;
                let (wilson_low, wilson_high) = wilson_interval(t.covered, t.total, 1.96);
                BoundCheck {
                    pass: coverage >= t.target,
                    name: t.name,
                    covered: t.covered,
                    total: t.total,
                    coverage,
                    target: t.target,
                    wilson_low,
                    wilson_high,
                    worst_ratio: t.worst_ratio,
                }
            })
            .collect();
        BoundReport { checks, notes }
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn ratio(err: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        err / bound
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Bound tallies for the rows of one trial.
///
/// * fixed thresholds: the `bound_thm1` column at `t = 2 t0`, one sample per
///   agent, target `1 - delta`;
/// * adaptive thresholds: every filled `bound_thm2` cell of an agent must
///   hold (one sample per agent, target 1), and the terminal error must sit
///   under `sigma / (2 sqrt(eta))`.
///
/// Single-agent runs report the bounds as `theorem1`/`theorem2`, networks as
/// `theorem3`/`theorem4`.
pub fn tally_rows(rows: &[Row], config: &ExperimentConfig) -> Vec<BoundTally> {
    let Some(last_k) = rows.iter().map(|r| r.k).max() else {
        return Vec::new();
    };
    let m = rows.iter().map(|r| r.agent).max().unwrap_or(0) + 1;
    let horizon = rows.iter().map(|r| r.t).max().unwrap_or(0);
    let post: Vec<&Row> = rows.iter().filter(|r| r.k == last_k).collect();
    let delta = config.params.delta();
    let mut out = Vec::new();
    match config.algorithm {
        AlgorithmKind::Fixed => {
            let name = if m == 1 { "theorem1" } else { "theorem3" };
            let mut tally = BoundTally::new(name, 1.0 - delta);
            if let Some(t0) = config.t0 {
                for r in post.iter().filter(|r| r.t == 2 * t0) {
                    if let (Some(e), Some(b)) = (r.error, r.bound_thm1) {
                        tally.add(e.abs() <= b, ratio(e.abs(), b));
                    }
                }
            }
            out.push(tally);
        }
        AlgorithmKind::Adaptive => {
            let name = if m == 1 { "theorem2" } else { "theorem4" };
            let mut tally = BoundTally::new(name, 1.0);
            for agent in 0..m {
                let mut seen = false;
                let mut holds = true;
                let mut worst = 0.0f64;
                for r in post.iter().filter(|r| r.agent == agent) {
                    if let (Some(e), Some(b)) = (r.error, r.bound_thm2) {
                        seen = true;
                        holds &= e.abs() <= b;
                        worst = worst.max(ratio(e.abs(), b));
                    }
                }
                if seen {
                    tally.add(holds, worst);
                }
            }
            out.push(tally);
            if let Ok(ceiling) = corollary2_bound(config.params.eta(), config.dist.std_dev()) {
                let mut tally = BoundTally::new("corollary2", 1.0);
                for r in post.iter().filter(|r| r.t == horizon) {
                    if let Some(e) = r.error {
                        tally.add(e.abs() <= ceiling, ratio(e.abs(), ceiling));
                    }
                }
                out.push(tally);
            }
        }
    }
    out
}

/// Coverage report over stored trial rows.
pub fn verify_bounds(trials: &[Vec<Row>], config: &ExperimentConfig) -> BoundReport {
    let mut notes = Vec::new();
    let has_bounds = trials
        .iter()
        .flatten()
        .any(|r| r.bound_thm1.is_some() || r.bound_thm2.is_some());
    if !has_bounds {
        notes.push("no bound columns in the records; nothing to verify".to_string());
    }
    let tallies = trials.iter().flat_map(|rows| tally_rows(rows, config));
    let mut report = BoundReport::from_tallies(tallies, notes);
    for name in ["theorem1", "theorem2", "theorem3", "theorem4"] {
        let expected = match config.algorithm {
            AlgorithmKind::Fixed => name == "theorem1" || name == "theorem3",
            AlgorithmKind::Adaptive => name == "theorem2" || name == "theorem4",
        };
        let m_matches = trials
            .iter()
            .flatten()
            .map(|r| r.agent)
            .max()
            .map(|a| (a == 0) == (name == "theorem1" || name == "theorem2"))
            .unwrap_or(false);
        if expected && m_matches && has_bounds && report.check(name).is_none() {
            report
                .notes
                .push(format!("{name}: no rows where the bound applies; skipped"));
        }
    }
    report
}
