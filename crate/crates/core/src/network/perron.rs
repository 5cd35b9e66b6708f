use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::jacobi::symmetric_eigen;
use crate::error::{Error, Result};

/// Row-stochastic averaging operator `P = (I + D)^-1 (I + A)`.
///
/// Row `i` puts weight `1/|N_i|` on every member of the inclusive
/// neighbourhood `N_i`.
#[derive(Debug, Clone)]
pub struct PerronMatrix {
    m: usize,
    entries: Vec<f64>,
    neighborhoods: Vec<Vec<usize>>,
    spectrum: Vec<f64>,
}

/// Group decision value of a vector of estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTarget {
    /// `w . estimates` with the stationary weights `w`.
    pub value: f64,
    pub weights: Vec<f64>,
    /// Plain average `(1/m) sum(estimates)`; equals `value` on regular graphs.
    pub uniform_average: f64,
}

impl PerronMatrix {
    pub fn new(graph: &Graph) -> Result<Self> {
        let m = graph.m();
        let neighborhoods: Vec<Vec<usize>> = (0..m).map(|i| graph.closed_neighborhood(i)).collect();
        let mut entries = vec![0.0; m * m];
        for (i, nb) in neighborhoods.iter().enumerate() {
            let w = 1.0 / nb.len() as f64;
            for &j in nb {
                entries[i * m + j] = w;
            }
        }
        // (I+D)^(1/2) P (I+D)^(-1/2) has entries 1/sqrt(|N_i| |N_j|) on the
        // pattern of I + A, which is symmetric.
        let mut sym = vec![0.0; m * m];
        for (i, nb) in neighborhoods.iter().enumerate() {
            for &j in nb {
                sym[i * m + j] = 1.0 / ((nb.len() * neighborhoods[j].len()) as f64).sqrt();
            }
        }
        let spectrum = symmetric_eigen(&sym, m)?.values;
        Ok(PerronMatrix {
            m,
            entries,
            neighborhoods,
            spectrum,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    /// Eigenvalues in decreasing order; the first is 1.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Second largest eigenvalue (0 for a single agent).
    pub fn lambda(&self) -> f64 {
        self.spectrum.get(1).copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude other than the leading 1. Governs the
    /// per-round contraction in the stationary-weighted norm.
    pub fn contraction_rate(&self) -> f64 {
        self.spectrum[1..]
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }

    /// Stationary weights `w_i = |N_i| / sum_j |N_j|` (left eigenvector for 1).
    pub fn stationary_weights(&self) -> Vec<f64> {
        let total: usize = self.neighborhoods.iter().map(Vec::len).sum();
        self.neighborhoods
            .iter()
            .map(|nb| nb.len() as f64 / total as f64)
            .collect()
    }

    /// One averaging round: each agent takes the mean over its inclusive
    /// neighbourhood.
    pub fn consensus_round(&self, estimates: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.m];
        self.consensus_round_into(estimates, &mut out)?;
        Ok(out)
    }

    pub fn consensus_round_into(&self, estimates: &[f64], out: &mut [f64]) -> Result<()> {
        if estimates.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                actual: estimates.len(),
            });
        }
        if out.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                actual: out.len(),
            });
        }
        for (o, nb) in out.iter_mut().zip(&self.neighborhoods) {
            let sum: f64 = nb.iter().map(|&j| estimates[j]).sum();
            *o = sum / nb.len() as f64;
        }
        Ok(())
    }

    /// Dense `P x`, kept separate from [`consensus_round`](Self::consensus_round)
    /// as a cross-check.
    pub fn apply_matrix(&self, estimates: &[f64]) -> Result<Vec<f64>> {
        if estimates.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                actual: estimates.len(),
            });
        }
        Ok((0..self.m)
            .map(|i| self.row(i).iter().zip(estimates).map(|(p, x)| p * x).sum())
            .collect())
    }

    /// Limit of repeated consensus rounds from `estimates`.
    pub fn consensus_fixed_point(&self, estimates: &[f64]) -> Result<ConsensusTarget> {
        if estimates.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                actual: estimates.len(),
            });
        }
        let weights = self.stationary_weights();
        let value = weights.iter().zip(estimates).map(|(w, x)| w * x).sum();
        let uniform_average = estimates.iter().sum::<f64>() / self.m as f64;
        Ok(ConsensusTarget {
            value,
            weights,
            uniform_average,
        })
    }

    /// Deviation from the fixed point in the stationary-weighted 2-norm,
    /// `sqrt(sum_i w_i (x_i - w.x)^2)`. `P` is self-adjoint in this norm, so
    /// one round shrinks it by at least [`contraction_rate`](Self::contraction_rate).
    pub fn disagreement(&self, estimates: &[f64]) -> Result<f64> {
        let target = self.consensus_fixed_point(estimates)?;
        Ok(target
            .weights
            .iter()
            .zip(estimates)
            .map(|(w, x)| w * (x - target.value).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// Empirical constant `c` in `|x_i^k - x*| <= c rho^k max_j |x_j^0 - x*|`,
    /// measured as the largest such ratio over `probes` random start vectors
    /// and `rounds` rounds each, where `rho` is the
    /// [`contraction_rate`](Self::contraction_rate). Returns 1 when `rho` is 0, since the
    /// geometric terms it multiplies then vanish after one round.
    pub fn measure_contraction_constant<R: Rng + ?Sized>(
        &self,
        probes: usize,
        rounds: usize,
        rng: &mut R,
    ) -> f64 {
        let lambda = self.contraction_rate();
        if lambda <= 1e-12 || self.m == 1 {
            return 1.0;
        }
        let mut c = 1.0f64;
        for _ in 0..probes {
            let mut x: Vec<f64> = (0..self.m)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let target = self
                .consensus_fixed_point(&x)
                .expect("dimension matches")
                .value;
            let dev0 = x.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
            if dev0 == 0.0 {
                continue;
            }
            for k in 1..=rounds {
                x = self.consensus_round(&x).expect("dimension matches");
                let dev = x.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
                let scale = lambda.powi(k as i32) * dev0;
                if scale < 1e-280 || dev < 1e-13 * dev0 {
                    break;
                }
                c = c.max(dev / scale);
            }
        }
        c
    }
}
