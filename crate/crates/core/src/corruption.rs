//! Clean-data sampling and budget-limited adversaries.
//!
//! Corruption follows a deterministic schedule: step `t` is corrupted iff
//! `floor(eta t) > floor(eta (t - 1))`, so exactly `floor(eta t)` of the
//! first `t` samples are replaced. What replaces them depends on the
//! [`Strategy`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::TrimBounds;
use crate::rng::{expand_seed, stream_rng, StreamRng};

/// Replacement value used by `MaxBias` when it cannot see the thresholds.
pub const MAX_BIAS_FALLBACK: f64 = 1e12;

/// One i.i.d. draw from the clean distribution.
pub fn next_clean<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R) -> f64 {
    dist.sample(rng)
}

/// Whether step `t` (1-based) is one of the corrupted steps.
pub fn is_corruption_time(eta: f64, t: u64) -> bool {
    t >= 1 && (eta * t as f64).floor() > (eta * (t - 1) as f64).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    None,
    /// Replacement drawn from another distribution.
    FixedDistribution {
        dist: DistributionSpec,
    },
    ConstantValue {
        value: f64,
    },
    /// Emits one unit past the current upper (`direction = 1`) or lower
    /// (`direction = -1`) threshold, which clamps to that threshold and
    /// pushes the estimate as far as the trim operator allows.
    MaxBias {
        direction: i8,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub strategy: Strategy,
    /// Corruption budget as a fraction of the prefix length.
    pub eta: f64,
}

impl AdversarySpec {
    pub fn none() -> Self {
        AdversarySpec {
            strategy: Strategy::None,
            eta: 0.0,
        }
    }

    pub fn new(strategy: Strategy, eta: f64) -> Result<Self> {
        let spec = AdversarySpec { strategy, eta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::domain(format!(
                "adversary budget must lie in [0, 1), got {}",
                self.eta
            )));
        }
        match self.strategy {
            Strategy::None => {}
            Strategy::FixedDistribution { dist } => dist.validate()?,
            Strategy::ConstantValue { value } => {
                if !value.is_finite() {
                    return Err(Error::domain("constant corruption value must be finite"));
                }
            }
            Strategy::MaxBias { direction } => {
                if direction != 1 && direction != -1 {
                    return Err(Error::domain(format!(
                        "max_bias direction must be +1 or -1, got {direction}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the strategy reads estimator state.
    pub fn inspects_estimator(&self) -> bool {
        matches!(self.strategy, Strategy::MaxBias { .. })
    }
}

/// One emitted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub time: u64,
    pub clean_value: f64,
    pub emitted_value: f64,
    pub corrupted: bool,
}

/// Stateful adversary for a single stream.
#[derive(Debug, Clone)]
pub struct Adversary {
    spec: AdversarySpec,
    rng: StreamRng,
    last_t: u64,
    corrupted: u64,
    fallbacks: u64,
}

impl Adversary {
    pub fn new(spec: AdversarySpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Adversary {
            spec,
            rng: stream_rng(seed),
            last_t: 0,
            corrupted: 0,
            fallbacks: 0,
        })
    }

    pub fn spec(&self) -> &AdversarySpec {
        &self.spec
    }

    /// Samples corrupted so far.
    pub fn corrupted_count(&self) -> u64 {
        self.corrupted
    }

    /// Times `MaxBias` had no thresholds to read and emitted
    /// `±MAX_BIAS_FALLBACK` instead.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks
    }

    /// Processes the clean sample of step `t`, which must follow the
    /// previous call's step.
    pub fn corrupt_step(
        &mut self,
        t: u64,
        clean: f64,
        context: Option<&TrimBounds>,
    ) -> Result<StreamRecord> {
        if t != self.last_t + 1 {
            return Err(Error::state(format!(
                "adversary expected step {}, got {t}",
                self.last_t + 1
            )));
        }
        self.last_t = t;
        let active = !matches!(self.spec.strategy, Strategy::None);
        let corrupted = active && is_corruption_time(self.spec.eta, t);
        let emitted = if corrupted {
            self.corrupted += 1;
            match self.spec.strategy {
                Strategy::None => unreachable!(),
                Strategy::FixedDistribution { dist } => dist.sample(&mut self.rng),
                Strategy::ConstantValue { value } => value,
                Strategy::MaxBias { direction } => match (context, direction > 0) {
                    (Some(b), true) => b.beta() + 1.0,
                    (Some(b), false) => b.alpha() - 1.0,
                    (None, up) => {
                        self.fallbacks += 1;
                        if up {
                            MAX_BIAS_FALLBACK
                        } else {
                            -MAX_BIAS_FALLBACK
                        }
                    }
                },
            }
        } else {
            clean
        };
        Ok(StreamRecord {
            time: t,
            clean_value: clean,
            emitted_value: emitted,
            corrupted,
        })
    }
}

/// The data source of one agent: a clean generator and independent
/// adversaries for the averaging stream (`x`) and the threshold stream (`y`),
/// each with its own budget.
///
/// Sub-stream seeds below `seed`: 0 clean data, 1 x-adversary, 2 y-adversary.
#[derive(Debug, Clone)]
pub struct AgentStream {
    dist: DistributionSpec,
    clean_rng: StreamRng,
    x_adversary: Adversary,
    y_adversary: Adversary,
}

impl AgentStream {
    pub fn new(dist: DistributionSpec, adversary: AdversarySpec, seed: u64) -> Result<Self> {
        dist.validate()?;
        Ok(AgentStream {
            dist,
            clean_rng: stream_rng(expand_seed(seed, 0)),
            x_adversary: Adversary::new(adversary, expand_seed(seed, 1))?,
            y_adversary: Adversary::new(adversary, expand_seed(seed, 2))?,
        })
    }

    pub fn x_adversary(&self) -> &Adversary {
        &self.x_adversary
    }

    pub fn y_adversary(&self) -> &Adversary {
        &self.y_adversary
    }

    /// Next sample of a single-stream consumer.
    pub fn next_x(&mut self, t: u64, context: Option<&TrimBounds>) -> Result<StreamRecord> {
        let clean = next_clean(&self.dist, &mut self.clean_rng);
        self.x_adversary.corrupt_step(t, clean, context)
    }

    /// Next `(x, y)` pair. The underlying clean stream alternates: even
    /// positions feed `x`, odd positions feed `y`.
    pub fn next_pair(
        &mut self,
        t: u64,
        context: Option<&TrimBounds>,
    ) -> Result<(StreamRecord, StreamRecord)> {
        let clean_x = next_clean(&self.dist, &mut self.clean_rng);
        let clean_y = next_clean(&self.dist, &mut self.clean_rng);
        let x = self.x_adversary.corrupt_step(t, clean_x, context)?;
        let y = self.y_adversary.corrupt_step(t, clean_y, context)?;
        Ok((x, y))
    }
}
