use serde::{Deserialize, Serialize};

use super::{compute_epsilon, trimming_thresholds, Epsilon, RobustnessParams, TrimBounds};
use crate::error::{Error, Result};
use crate::order_stats::OrderStatMultiset;

/// Reading of an online estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimate {
    /// The fixed-threshold estimator has not yet seen its warm-up samples.
    WarmingUp {
        remaining: usize,
    },
    Ready(f64),
}

impl Estimate {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Estimate::Ready(v) => Some(v),
            Estimate::WarmingUp { .. } => None,
        }
    }
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite, got {x}")))
    }
}

/// Online trimmed mean whose thresholds are fixed from the first `t0`
/// samples. Needs `O(1)` memory once warm-up is over.
#[derive(Debug, Clone)]
pub struct FixedTrimEstimator {
    params: RobustnessParams,
    t0: usize,
    warmup: Vec<f64>,
    bounds: Option<TrimBounds>,
    epsilon: Option<Epsilon>,
    t: usize,
    mu_hat: f64,
}

impl FixedTrimEstimator {
    pub fn new(params: RobustnessParams, t0: usize) -> Result<Self> {
        if t0 == 0 {
            return Err(Error::domain("warm-up length t0 must be positive"));
        }
        Ok(FixedTrimEstimator {
            params,
            t0,
            warmup: Vec::with_capacity(t0),
            bounds: None,
            epsilon: None,
            t: 0,
            mu_hat: 0.0,
        })
    }

    pub fn params(&self) -> &RobustnessParams {
        &self.params
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    /// Number of samples consumed so far, warm-up included.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn bounds(&self) -> Option<TrimBounds> {
        self.bounds
    }

    /// `eps_t0`, available once warm-up has finished.
    pub fn epsilon(&self) -> Option<Epsilon> {
        self.epsilon
    }

    pub fn is_warm(&self) -> bool {
        self.bounds.is_some()
    }

    pub fn estimate(&self) -> Estimate {
        if self.t <= self.t0 {
            Estimate::WarmingUp {
                remaining: self.t0 - self.t,
            }
        } else {
            Estimate::Ready(self.mu_hat)
        }
    }

    /// Buffers one warm-up sample.
    pub fn observe_warmup(&mut self, x: f64) -> Result<()> {
        check_finite(x, "sample")?;
        if self.warmup.len() >= self.t0 || self.bounds.is_some() {
            return Err(Error::state("warm-up buffer is already full"));
        }
        self.warmup.push(x);
        self.t += 1;
        Ok(())
    }

    /// Derives the thresholds from the `t0` buffered samples at `eps_t0` and
    /// releases the buffer.
    pub fn warmup_finish(&mut self) -> Result<TrimBounds> {
        if self.bounds.is_some() {
            return Err(Error::state("warm-up already finished"));
        }
        if self.warmup.len() != self.t0 {
            return Err(Error::state(format!(
                "warm-up needs exactly {} samples, have {}",
                self.t0,
                self.warmup.len()
            )));
        }
        let y: OrderStatMultiset = self.warmup.iter().copied().collect();
        let eps = compute_epsilon(&self.params, self.t0);
        let bounds = trimming_thresholds(&y, eps.value)?;
        self.bounds = Some(bounds);
        self.epsilon = Some(eps);
        self.warmup = Vec::new();
        Ok(bounds)
    }

    /// `mu_t = ((t - t0 - 1) mu_(t-1) + phi(x_t)) / (t - t0)` with the
    /// thresholds set at warm-up.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        let bounds = self
            .bounds
            .ok_or_else(|| Error::state("step called before warm-up finished"))?;
        self.step_with(&bounds, x)
    }

    /// Same recursion as [`step`](Self::step) but clamping with externally
    /// supplied thresholds (the distributed setting shares one agent's
    /// thresholds with everyone).
    pub fn step_with(&mut self, bounds: &TrimBounds, x: f64) -> Result<f64> {
        check_finite(x, "sample")?;
        if self.bounds.is_none() {
            return Err(Error::state("step called before warm-up finished"));
        }
        self.t += 1;
        let n = (self.t - self.t0) as f64;
        self.mu_hat = ((n - 1.0) * self.mu_hat + bounds.clamp(x)) / n;
        Ok(self.mu_hat)
    }

    /// Routes a sample to warm-up or to the recursive update.
    pub fn push(&mut self, x: f64) -> Result<Estimate> {
        if self.bounds.is_none() {
            self.observe_warmup(x)?;
            if self.warmup.len() == self.t0 {
                self.warmup_finish()?;
            }
        } else {
            self.step(x)?;
        }
        Ok(self.estimate())
    }

    /// Overwrites the running estimate, e.g. with a post-consensus value. The
    /// next step then folds the new sample into this value.
    pub fn replace_estimate(&mut self, value: f64) -> Result<()> {
        check_finite(value, "estimate")?;
        if self.t <= self.t0 {
            return Err(Error::state("no estimate exists during warm-up"));
        }
        self.mu_hat = value;
        Ok(())
    }
}

/// Online trimmed mean whose thresholds are recomputed at every step from
/// all threshold samples seen so far.
#[derive(Debug, Clone)]
pub struct AdaptiveTrimEstimator {
    params: RobustnessParams,
    y_set: OrderStatMultiset,
    t: usize,
    mu_hat: f64,
    bounds: Option<TrimBounds>,
    epsilon: Option<Epsilon>,
}

impl AdaptiveTrimEstimator {
    pub fn new(params: RobustnessParams) -> Self {
        AdaptiveTrimEstimator {
            params,
            y_set: OrderStatMultiset::new(),
            t: 0,
            mu_hat: 0.0,
            bounds: None,
            epsilon: None,
        }
    }

    pub fn params(&self) -> &RobustnessParams {
        &self.params
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn estimate(&self) -> f64 {
        self.mu_hat
    }

    /// Thresholds applied at the latest step.
    pub fn bounds(&self) -> Option<TrimBounds> {
        self.bounds
    }

    pub fn epsilon(&self) -> Option<Epsilon> {
        self.epsilon
    }

    pub fn threshold_samples(&self) -> &OrderStatMultiset {
        &self.y_set
    }

    pub fn insert_threshold_sample(&mut self, y: f64) -> Result<()> {
        self.y_set.insert(y)
    }

    /// Thresholds from the stored threshold samples at `eps_n`, where `n`
    /// is the number of stored samples.
    pub fn current_bounds(&self) -> Result<(TrimBounds, Epsilon)> {
        if self.y_set.is_empty() {
            return Err(Error::state("no threshold samples yet"));
        }
        let eps = compute_epsilon(&self.params, self.y_set.len());
        Ok((trimming_thresholds(&self.y_set, eps.value)?, eps))
    }

    /// `mu_t = ((t - 1) mu_(t-1) + phi_t(x_t)) / t` with the given thresholds.
    pub fn update_with(&mut self, bounds: &TrimBounds, x: f64) -> Result<f64> {
        check_finite(x, "sample")?;
        self.t += 1;
        let n = self.t as f64;
        self.mu_hat = ((n - 1.0) * self.mu_hat + bounds.clamp(x)) / n;
        self.bounds = Some(*bounds);
        Ok(self.mu_hat)
    }

    /// One step: add `y` to the threshold set, refresh `eps_t` and the
    /// thresholds, then fold in the clamped `x`.
    pub fn step(&mut self, x: f64, y: f64) -> Result<f64> {
        check_finite(x, "sample")?;
        check_finite(y, "threshold sample")?;
        self.y_set.insert(y)?;
        let (bounds, eps) = self.current_bounds()?;
        self.epsilon = Some(eps);
        self.update_with(&bounds, x)
    }

    pub fn replace_estimate(&mut self, value: f64) -> Result<()> {
        check_finite(value, "estimate")?;
        if self.t == 0 {
            return Err(Error::state("no estimate exists before the first step"));
        }
        self.mu_hat = value;
        Ok(())
    }
}
