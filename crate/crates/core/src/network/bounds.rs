//! Error bounds for the networked estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    compute_epsilon, estimation_error_bound, threshold_envelope, RobustnessParams,
};

/// A bound value together with whether its geometric terms contract
/// (`c lambda^K < 1`). Non-contracting values are still computed but grow
/// without limit in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusBound {
    pub value: f64,
    pub non_contracting: bool,
}

/// Per-step contraction factor `c lambda^K`.
pub fn contraction_factor(c: f64, lambda: f64, rounds: usize) -> f64 {
    c * lambda.powi(rounds as i32)
}

fn check_common(sigma: f64, lambda: f64, c: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("c must be finite and >= 0, got {c}")));
    }
    Ok(())
}

/// Inputs of the fixed-threshold network bound.
#[derive(Debug, Clone, Copy)]
pub struct Theorem3Inputs {
    pub params: RobustnessParams,
    pub sigma: f64,
    /// Number of agents.
    pub m: usize,
    pub t0: usize,
    pub t: usize,
    pub rounds: usize,
    pub lambda: f64,
    pub c: f64,
    /// Thresholds of the source agent.
    pub alpha_o: f64,
    pub beta_o: f64,
    /// `|mu_(i,t0)^K - mu~_(t0)|`.
    pub initial_disagreement: f64,
}

/// `(c lambda^K)^(t-t0) d0
///   + sum_{j=t0+1..t} (c lambda^K)^(t+1-j) 2 max(|alpha_o|, |beta_o|) / (j - t0)
///   + 3 E(4 eps_t0) + 2 sigma sqrt(ln(4/delta) / (m (t - t0)))`
/// with `E` replaced by its distribution-free bound.
pub fn theorem3_bound(inp: &Theorem3Inputs) -> Result<ConsensusBound> {
    check_common(inp.sigma, inp.lambda, inp.c)?;
    if inp.m == 0 || inp.t0 == 0 {
        return Err(Error::domain("m and t0 must be positive"));
    }
    if inp.t < 2 * inp.t0 {
        return Err(Error::domain(format!(
            "requires t >= 2*t0, got t={}, t0={}",
            inp.t, inp.t0
        )));
    }
    let floor = 4.0 * (-((inp.t - inp.t0) as f64)).exp();
    if inp.params.delta() < floor {
        return Err(Error::domain(format!(
            "requires delta >= 4*exp(-(t - t0)) = {floor:e}"
        )));
    }
    if !(inp.initial_disagreement >= 0.0) {
        return Err(Error::domain("initial disagreement must be >= 0"));
    }
    let r = contraction_factor(inp.c, inp.lambda, inp.rounds);
    let magnitude = inp.alpha_o.abs().max(inp.beta_o.abs());
    let transient = r.powf((inp.t - inp.t0) as f64) * inp.initial_disagreement;
    let mixing: f64 = (inp.t0 + 1..=inp.t)
        .map(|j| r.powf((inp.t + 1 - j) as f64) * 2.0 * magnitude / (j - inp.t0) as f64)
        .sum();
    let eps = compute_epsilon(&inp.params, inp.t0).value;
    let initialization = 3.0 * estimation_error_bound(inp.sigma, 4.0 * eps)?;
    let sampling =
        2.0 * inp.sigma * (inp.params.log_term() / (inp.m as f64 * (inp.t - inp.t0) as f64)).sqrt();
    Ok(ConsensusBound {
        value: transient + mixing + initialization + sampling,
        non_contracting: r >= 1.0,
    })
}

/// Inputs of the adaptive-threshold network bound.
#[derive(Debug, Clone, Copy)]
pub struct Theorem4Inputs<'a> {
    pub params: RobustnessParams,
    pub sigma: f64,
    pub t_bar: usize,
    pub rounds: usize,
    pub lambda: f64,
    pub c: f64,
    /// `max(|alpha_(o,j)|, |beta_(o,j)|)` at index `j - 1`, for at least `t` steps.
    pub threshold_history: &'a [f64],
    /// `|mu~_(t_bar) - mu|`.
    pub err_at_tbar: f64,
    /// `|mu_(i,t_bar)^K - mu~_(t_bar)|`.
    pub disagreement_at_tbar: f64,
    pub t: usize,
}

/// `(c lambda^K)^(t-t_bar) d
///   + sum_{j=t_bar+1..t} (c lambda^K)^(t+1-j) 2 max(|alpha_(o,j)|, |beta_(o,j)|) / j
///   + (t_bar/t) err + (1/t) sum_{j=t_bar+1..t} U_j`.
pub fn theorem4_bound(inp: &Theorem4Inputs<'_>) -> Result<ConsensusBound> {
    check_common(inp.sigma, inp.lambda, inp.c)?;
    if inp.t_bar == 0 {
        return Err(Error::domain("t_bar must be positive"));
    }
    if inp.t < inp.t_bar + 1 {
        return Err(Error::domain(format!(
            "requires t >= t_bar + 1, got t={}, t_bar={}",
            inp.t, inp.t_bar
        )));
    }
    if inp.threshold_history.len() < inp.t {
        return Err(Error::domain(format!(
            "threshold history covers {} steps, need {}",
            inp.threshold_history.len(),
            inp.t
        )));
    }
    if !(inp.err_at_tbar >= 0.0 && inp.disagreement_at_tbar >= 0.0) {
        return Err(Error::domain("errors at t_bar must be >= 0"));
    }
    let r = contraction_factor(inp.c, inp.lambda, inp.rounds);
    let t = inp.t;
    let transient = r.powf((t - inp.t_bar) as f64) * inp.disagreement_at_tbar;
    let mixing: f64 = (inp.t_bar + 1..=t)
        .map(|j| r.powf((t + 1 - j) as f64) * 2.0 * inp.threshold_history[j - 1] / j as f64)
        .sum();
    let carried = inp.t_bar as f64 / t as f64 * inp.err_at_tbar;
    let envelope: f64 = (inp.t_bar + 1..=t)
        .map(|j| threshold_envelope(&inp.params, inp.sigma, j))
        .sum::<f64>()
        / t as f64;
    Ok(ConsensusBound {
        value: transient + mixing + carried + envelope,
        non_contracting: r >= 1.0,
    })
}
