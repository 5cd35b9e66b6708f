//! Closed-form error bounds for the single-agent estimators.
//!
//! All logarithms are natural. `sigma` is the (known) standard deviation of
//! the clean variable.

use super::{compute_epsilon, RobustnessParams};
use crate::error::{Error, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )))
    }
}

/// Chebyshev bound on the centered quantile: `|Q_p| <= sigma / sqrt(1 - p)`.
pub fn quantile_abs_bound(sigma: f64, p: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(sigma / (1.0 - p).sqrt())
}

/// Distribution-free bound on the tail-expectation term:
/// `E(eps, X) <= sigma * sqrt(8 eps)`.
pub fn estimation_error_bound(sigma: f64, epsilon: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    Ok(sigma * (8.0 * epsilon).sqrt())
}

fn check_theorem1(params: &RobustnessParams, sigma: f64, t0: usize, t: usize) -> Result<()> {
    check_sigma(sigma)?;
    if t0 == 0 {
        return Err(Error::domain("t0 must be positive"));
    }
    if t < 2 * t0 {
        return Err(Error::domain(format!(
            "requires t >= 2*t0, got t={t}, t0={t0}"
        )));
    }
    let floor = 4.0 * (-((t - t0) as f64)).exp();
    if params.delta() < floor {
        return Err(Error::domain(format!(
            "requires delta >= 4*exp(-(t - t0)) = {floor:e}, got delta={}",
            params.delta()
        )));
    }
    Ok(())
}

/// Fixed-threshold bound with probability `1 - delta`, for `t >= 2 t0`:
/// `3 E(4 eps_t0) + 2 sigma sqrt(ln(4/delta) / (t - t0))`, where the
/// tail-expectation term is replaced by `sigma sqrt(8 * 4 eps_t0)`.
pub fn theorem1_bound(params: &RobustnessParams, sigma: f64, t0: usize, t: usize) -> Result<f64> {
    check_theorem1(params, sigma, t0, t)?;
    let eps = compute_epsilon(params, t0).value;
    let initialization = 3.0 * estimation_error_bound(sigma, 4.0 * eps)?;
    let sampling = 2.0 * sigma * (params.log_term() / (t - t0) as f64).sqrt();
    Ok(initialization + sampling)
}

/// The same bound written as
/// `24 sigma sqrt(4 eta + 6 ln(4/delta)/t0) + 2 sigma sqrt(ln(4/delta)/(t - t0))`.
pub fn theorem1_bound_corollary_form(
    params: &RobustnessParams,
    sigma: f64,
    t0: usize,
    t: usize,
) -> Result<f64> {
    check_theorem1(params, sigma, t0, t)?;
    Ok(corollary1_constant(params, sigma, t0)?
        + 2.0 * sigma * (params.log_term() / (t - t0) as f64).sqrt())
}

/// Limit of the fixed-threshold bound as `t -> inf`.
pub fn corollary1_constant(params: &RobustnessParams, sigma: f64, t0: usize) -> Result<f64> {
    check_sigma(sigma)?;
    if t0 == 0 {
        return Err(Error::domain("t0 must be positive"));
    }
    Ok(24.0 * sigma * (4.0 * params.eta() + 6.0 * params.log_term() / t0 as f64).sqrt())
}

/// Envelope on the adaptive thresholds at time `j` once the bad events have
/// stopped: `U_j = sigma / sqrt(4 eta + 6 ln(4/delta)/j)`.
pub fn threshold_envelope(params: &RobustnessParams, sigma: f64, j: usize) -> f64 {
    sigma / (4.0 * params.eta() + 6.0 * params.log_term() / j as f64).sqrt()
}

/// Adaptive-threshold bound from the last bad-event time `t_bar` on:
/// `(t_bar/t) err_at_tbar + (1/t) * sum_{j=t_bar+1..t} U_j`.
pub fn theorem2_bound(
    params: &RobustnessParams,
    sigma: f64,
    t_bar: usize,
    err_at_tbar: f64,
    t: usize,
) -> Result<f64> {
    check_sigma(sigma)?;
    if t_bar == 0 {
        return Err(Error::domain("t_bar must be positive"));
    }
    if t < t_bar {
        return Err(Error::domain(format!(
            "requires t >= t_bar, got t={t}, t_bar={t_bar}"
        )));
    }
    if !(err_at_tbar >= 0.0) {
        return Err(Error::domain("error at t_bar must be >= 0"));
    }
    let tail: f64 = (t_bar + 1..=t)
        .map(|j| threshold_envelope(params, sigma, j))
        .sum();
    Ok((t_bar as f64 / t as f64) * err_at_tbar + tail / t as f64)
}

/// Asymptotic ceiling of the adaptive estimator: `sigma / (2 sqrt(eta))`.
pub fn corollary2_bound(eta: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(eta > 0.0 && eta < 1.0 / 16.0) {
        return Err(Error::domain(format!(
            "eta must lie in (0, 1/16), got {eta}"
        )));
    }
    Ok(sigma / (2.0 * eta.sqrt()))
}
