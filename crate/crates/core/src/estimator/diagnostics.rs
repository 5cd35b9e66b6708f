//! Observable versions of the events the adaptive-threshold analysis relies on.
//!
//! With a known clean distribution we can check, at each step, whether the
//! empirical counting inequalities hold and whether the current thresholds
//! sit inside their population-quantile sandwich. A step where the sandwich
//! fails is a bad event; the time after the last bad event is `t_bar`.

use serde::{Deserialize, Serialize};

use super::TrimBounds;
use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};

/// Outcome of the four counting inequalities on a clean sample of size `t`:
///
/// 1. `#{y >= mu + Q_(1-2eps)} >= 1.5 eps t`
/// 2. `#{y <= mu + Q_(1-eps/2)} >= (1 - 0.75 eps) t`
/// 3. `#{y <= mu + Q_(2eps)} >= 1.5 eps t`
/// 4. `#{y >= mu + Q_(eps/2)} >= (1 - 0.75 eps) t`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub counts_hold: [bool; 4],
    pub sandwich: Option<SandwichCheck>,
    /// True when `eps >= 1/2`, where the quantile levels leave `(0, 1)`.
    pub pre_asymptotic: bool,
    pub bad_event: bool,
}

/// `Q_(1-2eps) <= beta - mu <= Q_(1-eps/2)` and
/// `Q_(eps/2) <= alpha - mu <= Q_(2eps)`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub holds: [bool; 4],
}

impl SandwichCheck {
    pub fn all(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

struct Levels {
    lo_2eps: f64,
    lo_half: f64,
    hi_2eps: f64,
    hi_half: f64,
}

fn levels(dist: &DistributionSpec, epsilon: f64) -> Result<Option<Levels>> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if epsilon >= 0.5 {
        return Ok(None);
    }
    Ok(Some(Levels {
        lo_2eps: dist.centered_quantile(2.0 * epsilon)?,
        lo_half: dist.centered_quantile(epsilon / 2.0)?,
        hi_2eps: dist.centered_quantile(1.0 - 2.0 * epsilon)?,
        hi_half: dist.centered_quantile(1.0 - epsilon / 2.0)?,
    }))
}

fn sandwich_from(levels: &Levels, mu: f64, bounds: &TrimBounds) -> SandwichCheck {
    let b = bounds.beta() - mu;
    let a = bounds.alpha() - mu;
    SandwichCheck {
        holds: [
            levels.hi_2eps <= b,
            b <= levels.hi_half,
            levels.lo_half <= a,
            a <= levels.lo_2eps,
        ],
    }
}

/// Checks the threshold sandwich alone. `Ok(None)` when `eps >= 1/2`.
pub fn threshold_sandwich(
    dist: &DistributionSpec,
    epsilon: f64,
    bounds: &TrimBounds,
) -> Result<Option<SandwichCheck>> {
    Ok(levels(dist, epsilon)?.map(|l| sandwich_from(&l, dist.mean(), bounds)))
}

/// Evaluates the counting inequalities on `clean_samples` and, when
/// `thresholds` is given, the threshold sandwich. The step is a bad event if
/// any evaluated inequality fails or if `eps >= 1/2`.
pub fn lemma1_diagnostics(
    clean_samples: &[f64],
    dist: &DistributionSpec,
    epsilon: f64,
    thresholds: Option<&TrimBounds>,
) -> Result<Lemma1Check> {
    if clean_samples.is_empty() {
        return Err(Error::domain("no samples to check"));
    }
    let Some(lv) = levels(dist, epsilon)? else {
        return Ok(Lemma1Check {
            counts_hold: [false; 4],
            sandwich: None,
            pre_asymptotic: true,
            bad_event: true,
        });
    };
    let mu = dist.mean();
    let t = clean_samples.len() as f64;
    let count =
        |pred: &dyn Fn(f64) -> bool| clean_samples.iter().filter(|&&y| pred(y)).count() as f64;
    let few = 1.5 * epsilon * t;
    let most = (1.0 - 0.75 * epsilon) * t;
    let counts_hold = [
        count(&|y| y >= mu + lv.hi_2eps) >= few,
        count(&|y| y <= mu + lv.hi_half) >= most,
        count(&|y| y <= mu + lv.lo_2eps) >= few,
        count(&|y| y >= mu + lv.lo_half) >= most,
    ];
    let sandwich = thresholds.map(|b| sandwich_from(&lv, mu, b));
    let bad_event = !counts_hold.iter().all(|&h| h) || sandwich.map(|s| !s.all()).unwrap_or(false);
    Ok(Lemma1Check {
        counts_hold,
        sandwich,
        pre_asymptotic: false,
        bad_event,
    })
}

/// Per-step bad-event flags `B_t` (index 0 is `t = 1`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub bad_event_flags: Vec<bool>,
}

impl DiagnosticsRecord {
    pub fn push(&mut self, bad: bool) {
        self.bad_event_flags.push(bad);
    }

    pub fn len(&self) -> usize {
        self.bad_event_flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bad_event_flags.is_empty()
    }

    /// Observed `t_bar`: one past the last bad event, or 1 if there was none.
    pub fn first_clean_time(&self) -> usize {
        self.bad_event_flags
            .iter()
            .rposition(|&b| b)
            .map(|i| i + 2)
            .unwrap_or(1)
    }

    pub fn bad_event_count(&self) -> usize {
        self.bad_event_flags.iter().filter(|&&b| b).count()
    }
}
