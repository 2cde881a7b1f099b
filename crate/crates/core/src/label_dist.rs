//! Gaussian label distributions over ordinal ranks.
//!
//! Each sample carries a [`LabelDistribution`], a Gaussian `(mu, sigma)` on the
//! rank axis. Models are trained against its discrete form, a
//! [`RankDistribution`] supported on the integer ranks `0..C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound for a label distribution's standard deviation.
pub const SIGMA_MIN: f64 = 0.01;

/// Added inside logarithms so that zero probabilities stay finite.
pub const LOG_FLOOR: f64 = 1e-12;

/// A Gaussian over the rank axis.
///
/// `mu` is kept in `[0, C-1]` and `sigma` in `[SIGMA_MIN, C]`; every
/// constructor and update clamps into those bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub mu: f64,
    pub sigma: f64,
}

impl LabelDistribution {
    /// Builds a distribution clamped onto the label scale of `num_ranks` ranks.
    pub fn new(mu: f64, sigma: f64, num_ranks: usize) -> Self {
        let mut dist = LabelDistribution { mu, sigma };
        dist.clamp_to(num_ranks);
        dist
    }

    /// Initial distribution for a sample labelled `rank`.
    pub fn from_label(rank: usize, sigma: f64, num_ranks: usize) -> Self {
        Self::new(rank as f64, sigma, num_ranks)
    }

    pub fn clamp_to(&mut self, num_ranks: usize) {
        let top = num_ranks.saturating_sub(1) as f64;
        self.mu = self.mu.clamp(0.0, top);
        self.sigma = self.sigma.clamp(SIGMA_MIN, num_ranks as f64);
    }

    /// Nearest rank to `mu`, ties rounded away from zero.
    pub fn class(&self, num_ranks: usize) -> usize {
        class_of(self.mu, num_ranks)
    }
}

/// Rounds a continuous rank value to a class index in `0..num_ranks`.
///
/// Ties at `.5` round away from zero, so `2.5` maps to `3`.
pub fn class_of(value: f64, num_ranks: usize) -> usize {
    let top = num_ranks.saturating_sub(1) as f64;
    if value.is_nan() {
        return 0;
    }
    value.round().clamp(0.0, top) as usize
}

/// A probability vector over the ranks `0..C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankDistribution {
    probs: Vec<f64>,
}

impl RankDistribution {
    /// Wraps an already-normalized probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a rank distribution needs at least 2 ranks, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Data(
                "rank probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!(
                "rank probabilities sum to {total}, expected 1"
            )));
        }
        Ok(RankDistribution { probs })
    }

    pub(crate) fn from_normalized_unchecked(probs: Vec<f64>) -> Self {
        RankDistribution { probs }
    }

    pub fn uniform(num_ranks: usize) -> Self {
        RankDistribution {
            probs: vec![1.0 / num_ranks as f64; num_ranks],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_ranks(&self) -> usize {
        self.probs.len()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Index of the largest probability (first one on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats, with `0 * ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// Normalized-entropy confidence `1 - H / ln C`, in `[0, 1]`.
    pub fn confidence(&self) -> f64 {
        let max_entropy = (self.probs.len() as f64).ln();
        (1.0 - self.entropy() / max_entropy).clamp(0.0, 1.0)
    }
}

/// Discretizes a Gaussian label distribution onto the integer ranks
/// `0..num_ranks`, renormalizing over the truncated support.
pub fn discretize(dist: &LabelDistribution, num_ranks: usize) -> Result<RankDistribution> {
    if num_ranks < 2 {
        return Err(Error::InvalidConfig(format!(
            "rank count must be at least 2, got {num_ranks}"
        )));
    }
    let two_var = 2.0 * dist.sigma * dist.sigma;
    // Shift exponents by the largest one so the mode's kernel is exactly 1.
    let nearest = class_of(dist.mu, num_ranks) as f64;
    let offset = (nearest - dist.mu).powi(2) / two_var;
    let mut probs: Vec<f64> = (0..num_ranks)
        .map(|c| (-((c as f64 - dist.mu).powi(2) / two_var) + offset).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(RankDistribution { probs })
}

/// Mean rank `sum_c c * p[c]`.
pub fn expected_rank(rd: &RankDistribution) -> f64 {
    rd.probs
        .iter()
        .enumerate()
        .map(|(c, p)| c as f64 * p)
        .sum()
}

/// `KL(target || predicted)` with both sides floored by [`LOG_FLOOR`] inside the log.
pub fn kl_divergence(target: &RankDistribution, predicted: &RankDistribution) -> Result<f64> {
    if target.probs.len() != predicted.probs.len() {
        return Err(Error::Dimension {
            expected: target.probs.len(),
            actual: predicted.probs.len(),
        });
    }
    Ok(kl_terms(&target.probs, &predicted.probs))
}

pub(crate) fn kl_terms(target: &[f64], predicted: &[f64]) -> f64 {
    target
        .iter()
        .zip(predicted)
        .map(|(t, p)| t * ((t + LOG_FLOOR).ln() - (p + LOG_FLOOR).ln()))
        .sum()
}
