//! Clean-data distributions with known mean, standard deviation and quantiles.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Distribution of the clean variable `X`.
///
/// Only families with finite variance are accepted, since every error bound
/// is stated in terms of the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Gaussian { mean: f64, std: f64 },
    StudentT { location: f64, scale: f64, dof: f64 },
    Uniform { low: f64, high: f64 },
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        let d = DistributionSpec::Gaussian { mean, std };
        d.validate()?;
        Ok(d)
    }

    pub fn student_t(location: f64, scale: f64, dof: f64) -> Result<Self> {
        let d = DistributionSpec::StudentT {
            location,
            scale,
            dof,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        let d = DistributionSpec::Uniform { low, high };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be finite, got {v}")))
            }
        };
        match *self {
            DistributionSpec::Gaussian { mean, std } => {
                finite(mean, "mean")?;
                finite(std, "std")?;
                if std < 0.0 {
                    return Err(Error::domain(format!("std must be >= 0, got {std}")));
                }
            }
            DistributionSpec::StudentT {
                location,
                scale,
                dof,
            } => {
                finite(location, "location")?;
                finite(scale, "scale")?;
                finite(dof, "dof")?;
                if scale <= 0.0 {
                    return Err(Error::domain(format!("scale must be > 0, got {scale}")));
                }
                if dof <= 2.0 {
                    return Err(Error::domain(format!(
                        "student_t needs dof > 2 for finite variance, got {dof}"
                    )));
                }
            }
            DistributionSpec::Uniform { low, high } => {
                finite(low, "low")?;
                finite(high, "high")?;
                if low >= high {
                    return Err(Error::domain(format!(
                        "uniform needs low < high, got [{low}, {high}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mean, .. } => mean,
            DistributionSpec::StudentT { location, .. } => location,
            DistributionSpec::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            DistributionSpec::Gaussian { std, .. } => std,
            DistributionSpec::StudentT { scale, dof, .. } => scale * (dof / (dof - 2.0)).sqrt(),
            DistributionSpec::Uniform { low, high } => (high - low) / 12f64.sqrt(),
        }
    }

    /// `Q_p` of the centered variable `X - mean`, i.e. the level the centered
    /// variable exceeds with probability `1 - p`.
    ///
    /// A point mass (Gaussian with zero deviation) has no continuous quantile
    /// function and is reported as unsupported.
    pub fn centered_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must be in (0, 1), got {p}"
            )));
        }
        let q = match *self {
            DistributionSpec::Gaussian { std, .. } => {
                if std == 0.0 {
                    return Err(Error::Unsupported(
                        "quantiles of a point mass are not defined".into(),
                    ));
                }
                Normal::new(0.0, std)
                    .map_err(|e| Error::domain(e.to_string()))?
                    .inverse_cdf(p)
            }
            DistributionSpec::StudentT { scale, dof, .. } => StudentsT::new(0.0, scale, dof)
                .map_err(|e| Error::domain(e.to_string()))?
                .inverse_cdf(p),
            DistributionSpec::Uniform { low, high } => (high - low) * (p - 0.5),
        };
        Ok(q)
    }

    /// Draws one sample. Gaussian variates use the Marsaglia polar method
    /// (one of each accepted pair is kept, so the stream has no hidden state).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistributionSpec::Gaussian { mean, std } => mean + std * polar_standard_normal(rng),
            DistributionSpec::StudentT {
                location,
                scale,
                dof,
            } => {
                let z = polar_standard_normal(rng);
                let chi2 = ChiSquared::new(dof)
                    .expect("dof validated at construction")
                    .sample(rng);
                location + scale * z / (chi2 / dof).sqrt()
            }
            DistributionSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// Standard normal variate by the Marsaglia polar method.
pub fn polar_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Exact tail expectation `E[|X̄| 1{X̄ >= Q_(1-eps/2)}]` for a Gaussian with
/// deviation `sigma`, which by symmetry equals the lower-tail term.
///
/// Closed form: `sigma * pdf(z)` with `z = Phi^-1(1 - eps/2)`. Used only to
/// cross-check the distribution-free bound `sigma * sqrt(8 eps)`.
pub fn gaussian_tail_expectation(sigma: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::domain(format!("eps must be in (0, 2), got {eps}")));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - eps / 2.0);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    Ok(sigma * pdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn rejects_infinite_variance() {
        assert!(DistributionSpec::student_t(0.0, 1.0, 2.0).is_err());
        assert!(DistributionSpec::student_t(0.0, 1.0, 2.5).is_ok());
        assert!(DistributionSpec::uniform(1.0, 1.0).is_err());
        assert!(DistributionSpec::gaussian(0.0, -1.0).is_err());
    }

    #[test]
    fn moments() {
        let t = DistributionSpec::student_t(1.0, 2.0, 6.0).unwrap();
        assert_eq!(t.mean(), 1.0);
        assert!((t.std_dev() - 2.0 * 1.5f64.sqrt()).abs() < 1e-15);
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        assert!((u.std_dev() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_quantiles() {
        let g = DistributionSpec::gaussian(5.0, 2.0).unwrap();
        assert!(g.centered_quantile(0.5).unwrap().abs() < 1e-12);
        // Phi^-1(0.975) = 1.959963984540054
        assert!((g.centered_quantile(0.975).unwrap() - 2.0 * 1.959963984540054).abs() < 1e-9);
        assert!(g.centered_quantile(1.0).is_err());
    }

    #[test]
    fn point_mass_has_no_quantiles() {
        let g = DistributionSpec::gaussian(7.0, 0.0).unwrap();
        assert!(matches!(
            g.centered_quantile(0.3),
            Err(Error::Unsupported(_))
        ));
        let mut rng = stream_rng(1);
        for _ in 0..10 {
            assert_eq!(g.sample(&mut rng), 7.0);
        }
    }

    #[test]
    fn uniform_quantile_is_linear() {
        let u = DistributionSpec::uniform(2.0, 6.0).unwrap();
        assert!((u.centered_quantile(0.25).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn student_t_quantile_symmetric() {
        let t = DistributionSpec::student_t(0.0, 1.0, 5.0).unwrap();
        let hi = t.centered_quantile(0.9).unwrap();
        let lo = t.centered_quantile(0.1).unwrap();
        assert!((hi + lo).abs() < 1e-6);
        // t_{0.9, 5} = 1.475884
        assert!((hi - 1.475884).abs() < 1e-5);
    }

    #[test]
    fn gaussian_tail_expectation_matches_quadrature_and_bound() {
        // Midpoint-rule quadrature of x * pdf(x) over [z, z + 12].
        for &eps in &[0.05, 0.2, 0.47] {
            let z = Normal::standard().inverse_cdf(1.0 - eps / 2.0);
            let n = 200_000;
            let h = 12.0 / n as f64;
            let quad: f64 = (0..n)
                .map(|i| {
                    let x = z + (i as f64 + 0.5) * h;
                    x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt() * h
                })
                .sum();
            let exact = gaussian_tail_expectation(1.0, eps).unwrap();
            assert!((quad - exact).abs() < 1e-8, "eps={eps}: {quad} vs {exact}");
            assert!(exact <= (8.0 * eps).sqrt());
        }
    }
}
