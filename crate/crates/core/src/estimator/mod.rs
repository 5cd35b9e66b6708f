//! Trimmed-mean machinery: the epsilon schedule, the trim operator,
//! threshold selection, the batch estimator, and both online estimators.

mod bounds;
mod diagnostics;
mod online;

pub use bounds::{
    corollary1_constant, corollary2_bound, estimation_error_bound, quantile_abs_bound,
    theorem1_bound, theorem1_bound_corollary_form, theorem2_bound, threshold_envelope,
};
pub use diagnostics::{
    lemma1_diagnostics, threshold_sandwich, DiagnosticsRecord, Lemma1Check, SandwichCheck,
};
pub use online::{AdaptiveTrimEstimator, Estimate, FixedTrimEstimator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::OrderStatMultiset;

/// Corruption fraction `eta` and confidence `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct RobustnessParams {
    eta: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    eta: f64,
    delta: f64,
}

impl TryFrom<RawParams> for RobustnessParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        RobustnessParams::new(raw.eta, raw.delta)
    }
}

impl From<RobustnessParams> for RawParams {
    fn from(p: RobustnessParams) -> Self {
        RawParams {
            eta: p.eta,
            delta: p.delta,
        }
    }
}

impl RobustnessParams {
    /// Requires `0 < eta < 1/16` and `0 < delta < 1`.
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0 / 16.0) {
            return Err(Error::domain(format!(
                "eta must lie in (0, 1/16), got {eta}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(RobustnessParams { eta, delta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `ln(4 / delta)`.
    pub fn log_term(&self) -> f64 {
        (4.0 / self.delta).ln()
    }
}

/// Trim fraction at some time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Epsilon {
    pub value: f64,
}

impl Epsilon {
    /// At or above one half the nominal trimming indices cross, and
    /// thresholds fall back to the median pair.
    pub fn is_pre_asymptotic(&self) -> bool {
        self.value >= 0.5
    }
}

/// `eps_t = 8 eta + 12 ln(4/delta) / t`.
///
/// # Panics
///
/// Panics if `t == 0`.
pub fn compute_epsilon(params: &RobustnessParams, t: usize) -> Epsilon {
    assert!(t >= 1, "epsilon schedule starts at t = 1");
    Epsilon {
        value: 8.0 * params.eta + 12.0 * params.log_term() / t as f64,
    }
}

/// Lower and upper trimming values, `alpha <= beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimBounds {
    alpha: f64,
    beta: f64,
}

impl TrimBounds {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain(format!(
                "trimming values must be finite, got ({alpha}, {beta})"
            )));
        }
        if alpha > beta {
            return Err(Error::domain(format!(
                "alpha must not exceed beta, got ({alpha}, {beta})"
            )));
        }
        Ok(TrimBounds { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `max(|alpha|, |beta|)`.
    pub fn magnitude(&self) -> f64 {
        self.alpha.abs().max(self.beta.abs())
    }

    /// The trim operator `phi`.
    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        if x > self.beta {
            self.beta
        } else if x < self.alpha {
            self.alpha
        } else {
            x
        }
    }
}

/// The trim operator: `beta` above the window, `alpha` below it, identity inside.
pub fn trim_clamp(bounds: &TrimBounds, x: f64) -> f64 {
    bounds.clamp(x)
}

/// 1-based order-statistic indices `(lo, hi)` for `t` samples at trim fraction `eps`.
///
/// For `eps < 1/2`: `lo = floor(eps t)`, `hi = ceil((1 - eps) t)`, both
/// clamped to `[1, t]`. For `eps >= 1/2` the pair collapses to the lower and
/// upper median, `floor((t+1)/2)` and `ceil((t+1)/2)`.
pub fn threshold_indices(t: usize, eps: f64) -> (usize, usize) {
    assert!(t >= 1);
    if eps >= 0.5 {
        return ((t + 1) / 2, (t + 2) / 2);
    }
    let tf = t as f64;
    let clamp = |v: f64| (v.max(1.0) as usize).min(t);
    let lo = clamp((eps * tf).floor());
    let hi = clamp(((1.0 - eps) * tf).ceil());
    (lo, hi)
}

/// Trimming values taken as order statistics of `y` at the indices given by
/// [`threshold_indices`].
pub fn trimming_thresholds(y: &OrderStatMultiset, epsilon: f64) -> Result<TrimBounds> {
    if y.is_empty() {
        return Err(Error::state("no threshold samples available"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (lo, hi) = threshold_indices(y.len(), epsilon);
    TrimBounds::new(y.select(lo)?, y.select(hi)?)
}

/// `(1/n) * sum(phi(x_j))` over the given samples.
pub fn batch_trimmed_mean(x_samples: &[f64], bounds: &TrimBounds) -> Result<f64> {
    if x_samples.is_empty() {
        return Err(Error::domain("trimmed mean of an empty sample"));
    }
    let sum: f64 = x_samples.iter().map(|&x| bounds.clamp(x)).sum();
    Ok(sum / x_samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::distribution::DistributionSpec;
    use crate::rng::stream_rng;

    fn params(eta: f64, delta: f64) -> RobustnessParams {
        RobustnessParams::new(eta, delta).unwrap()
    }

    #[test]
    fn params_ranges() {
        assert!(RobustnessParams::new(0.0, 0.3).is_err());
        assert!(RobustnessParams::new(1.0 / 16.0, 0.3).is_err());
        assert!(RobustnessParams::new(0.02, 1.0).is_err());
        assert!(RobustnessParams::new(0.02, 0.3).is_ok());
    }

    #[test]
    fn params_json_rejects_unknown_and_out_of_range() {
        let ok: RobustnessParams = serde_json::from_str(r#"{"eta":0.02,"delta":0.3}"#).unwrap();
        assert_eq!(ok.eta(), 0.02);
        assert!(serde_json::from_str::<RobustnessParams>(r#"{"eta":0.1,"delta":0.3}"#).is_err());
        assert!(
            serde_json::from_str::<RobustnessParams>(r#"{"eta":0.02,"delta":0.3,"extra":1}"#)
                .is_err()
        );
    }

    #[test]
    fn epsilon_reference_values() {
        // Frozen from a 30-digit evaluation of 8*eta + 12*ln(4/delta)/t.
        let p = params(0.02, 0.3);
        let e100 = compute_epsilon(&p, 100);
        assert!((e100.value - 0.470_832_059_853_499_2).abs() < 1e-15);
        let e200 = compute_epsilon(&p, 200);
        assert!((e200.value - 0.315_416_029_926_749_6).abs() < 1e-15);
        assert!(((e100.value - 0.16) - 2.0 * (e200.value - 0.16)).abs() < 1e-15);
        assert!(!e100.is_pre_asymptotic());
        assert!(compute_epsilon(&p, 10).is_pre_asymptotic());
    }

    #[test]
    fn epsilon_limit() {
        let p = params(0.05, 0.3);
        let e = compute_epsilon(&p, usize::MAX / 2).value;
        assert!((e - 0.4).abs() < 1e-12);
    }

    #[test]
    fn clamp_cases() {
        let b = TrimBounds::new(-1.0, 1.0).unwrap();
        assert_eq!(trim_clamp(&b, 2.0), 1.0);
        assert_eq!(trim_clamp(&b, 0.5), 0.5);
        assert_eq!(trim_clamp(&b, -3.0), -1.0);
        assert!(TrimBounds::new(1.0, -1.0).is_err());
    }

    #[test]
    fn thresholds_on_one_to_ten() {
        let y: OrderStatMultiset = (1..=10).map(f64::from).collect();
        let b = trimming_thresholds(&y, 0.2).unwrap();
        assert_eq!((b.alpha(), b.beta()), (2.0, 8.0));
        let b = trimming_thresholds(&y, 0.05).unwrap();
        assert_eq!((b.alpha(), b.beta()), (1.0, 10.0));
    }

    #[test]
    fn thresholds_pre_asymptotic_use_median_pair() {
        assert_eq!(threshold_indices(10, 1.47), (5, 6));
        assert_eq!(threshold_indices(3, 0.9), (2, 2));
        assert_eq!(threshold_indices(1, 0.9), (1, 1));
        assert_eq!(threshold_indices(100, 0.470_832), (47, 53));
    }

    #[test]
    fn thresholds_on_empty_set() {
        let y = OrderStatMultiset::new();
        assert!(matches!(trimming_thresholds(&y, 0.2), Err(Error::State(_))));
    }

    #[test]
    fn thresholds_track_normal_quantiles() {
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        let mut rng = stream_rng(2024);
        let y: OrderStatMultiset = (0..1000).map(|_| g.sample(&mut rng)).collect();
        let b = trimming_thresholds(&y, 0.1).unwrap();
        let q10 = g.centered_quantile(0.1).unwrap();
        let q90 = g.centered_quantile(0.9).unwrap();
        assert!((b.alpha() - q10).abs() <= 0.15, "alpha={}", b.alpha());
        assert!((b.beta() - q90).abs() <= 0.15, "beta={}", b.beta());
    }

    #[test]
    fn batch_mean_examples() {
        let b = TrimBounds::new(-1.0, 1.0).unwrap();
        assert_eq!(batch_trimmed_mean(&[0.5], &b).unwrap(), 0.5);
        assert_eq!(batch_trimmed_mean(&[2.0, -3.0, 0.0], &b).unwrap(), 0.0);
        assert!(batch_trimmed_mean(&[], &b).is_err());
    }

    #[test]
    fn batch_mean_matches_clamp_fold() {
        let mut rng = stream_rng(5);
        let xs: Vec<f64> = (0..2000)
            .map(|_| rng.random::<f64>() * 10.0 - 3.0)
            .collect();
        let b = TrimBounds::new(-0.5, 2.5).unwrap();
        let mut acc = 0.0;
        for &x in &xs {
            acc += if x > 2.5 {
                2.5
            } else if x < -0.5 {
                -0.5
            } else {
                x
            };
        }
        let fold = acc / xs.len() as f64;
        let got = batch_trimmed_mean(&xs, &b).unwrap();
        assert!((got - fold).abs() <= 1e-12 * fold.abs());
    }

    proptest! {
        #[test]
        fn epsilon_monotone(eta in 0.001f64..0.06, delta in 0.01f64..0.99, t in 1usize..100_000) {
            let p = params(eta, delta);
            let e1 = compute_epsilon(&p, t).value;
            let e2 = compute_epsilon(&p, t + 1).value;
            prop_assert!(e2 < e1);
            let p_hi = params(eta + 0.001, delta);
            prop_assert!(compute_epsilon(&p_hi, t).value > e1);
            let doubled = compute_epsilon(&p, 2 * t).value - 8.0 * eta;
            prop_assert!(((e1 - 8.0 * eta) - 2.0 * doubled).abs() <= 1e-12 * (e1 - 8.0 * eta));
        }

        #[test]
        fn clamp_stays_in_window(a in -100f64..100.0, w in 0f64..50.0, x in -1e6f64..1e6) {
            let b = TrimBounds::new(a, a + w).unwrap();
            let y = b.clamp(x);
            prop_assert!(y >= b.alpha() && y <= b.beta());
        }

        #[test]
        fn indices_ordered(t in 1usize..10_000, eps in 0.0001f64..3.0) {
            let (lo, hi) = threshold_indices(t, eps);
            prop_assert!(1 <= lo && lo <= hi && hi <= t);
        }

        #[test]
        fn affine_equivariance(
            xs in prop::collection::vec(-100f64..100.0, 1..50),
            scale in prop::sample::select(vec![0.5f64, 1.0, 2.0, 4.0, 8.0]),
            shift in prop::sample::select(vec![-16.0f64, -1.0, 0.0, 2.0, 64.0]),
        ) {
            // Power-of-two scales and small-integer shifts on a dyadic grid keep
            // every intermediate exactly representable.
            let xs: Vec<f64> = xs.into_iter().map(|v| (v * 8.0).round() / 8.0).collect();
            let b = TrimBounds::new(-10.0, 20.0).unwrap();
            let mapped = TrimBounds::new(scale * -10.0 + shift, scale * 20.0 + shift).unwrap();
            let ys: Vec<f64> = xs.iter().map(|&x| scale * x + shift).collect();
            let sum: f64 = xs.iter().map(|&x| b.clamp(x)).sum();
            let mapped_sum: f64 = ys.iter().map(|&y| mapped.clamp(y)).sum();
            prop_assert_eq!(mapped_sum, scale * sum + shift * xs.len() as f64);
        }
    }
}
