//! Gaussian asymmetric label noise.
//!
//! A true rank `i` keeps its label with probability `1 - tau` and otherwise
//! flips to `j != i` with probability proportional to
//! `exp(-(i - j)^2 / (2 sigma_n^2))`. Every row flips with probability exactly
//! `tau`, so the overall rate is `tau` regardless of the class prior.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_N: f64 = 3.0;

/// Row-stochastic `C x C` transition matrix, `entries[i][j] = P(noisy = j | true = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMatrix {
    entries: Vec<Vec<f64>>,
    tau: f64,
    sigma_n: f64,
}

impl NoiseMatrix {
    pub fn build(num_ranks: usize, tau: f64, sigma_n: f64) -> Result<Self> {
        if num_ranks < 2 {
            return Err(Error::InvalidConfig(format!(
                "rank count must be at least 2, got {num_ranks}"
            )));
        }
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidConfig(format!(
                "noise rate must lie in [0, 1), got {tau}"
            )));
        }
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise spread must be positive, got {sigma_n}"
            )));
        }
        let two_var = 2.0 * sigma_n * sigma_n;
        let entries = (0..num_ranks)
            .map(|i| {
                let weights: Vec<f64> = (0..num_ranks)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            let d = i as f64 - j as f64;
                            (-(d * d) / two_var).exp()
                        }
                    })
                    .collect();
                let off_total: f64 = weights.iter().sum();
                weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| if i == j { 1.0 - tau } else { tau * w / off_total })
                    .collect()
            })
            .collect();
        Ok(NoiseMatrix {
            entries,
            tau,
            sigma_n,
        })
    }

    pub fn num_ranks(&self) -> usize {
        self.entries.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn row(&self, true_rank: usize) -> &[f64] {
        &self.entries[true_rank]
    }

    pub fn get(&self, true_rank: usize, noisy_rank: usize) -> f64 {
        self.entries[true_rank][noisy_rank]
    }
}

/// Draws a noisy label for each true label from the matching matrix row.
///
/// The same `(labels, matrix, seed)` always yields the same output.
pub fn inject_noise(labels: &[usize], matrix: &NoiseMatrix, seed: u64) -> Result<Vec<usize>> {
    let num_ranks = matrix.num_ranks();
    if let Some((idx, label)) = labels.iter().enumerate().find(|(_, l)| **l >= num_ranks) {
        return Err(Error::Data(format!(
            "label {label} at index {idx} is outside 0..{num_ranks}"
        )));
    }
    let rows = matrix
        .entries
        .iter()
        .map(|row| {
            WeightedIndex::new(row).map_err(|e| Error::Invariant(format!("noise row: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(labels
        .iter()
        .map(|&label| rows[label].sample(&mut rng))
        .collect())
}

/// What an injection actually did, for the `inject` summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub n: usize,
    pub tau: f64,
    pub sigma_n: f64,
    pub seed: u64,
    pub flipped: usize,
    pub realized_rate: f64,
    /// `flips_by_distance[d]` counts flips with `|true - noisy| = d`.
    pub flips_by_distance: Vec<usize>,
}

impl NoiseSummary {
    pub fn from_labels(
        clean: &[usize],
        noisy: &[usize],
        matrix: &NoiseMatrix,
        seed: u64,
    ) -> Self {
        let mut flips_by_distance = vec![0; matrix.num_ranks()];
        for (c, n) in clean.iter().zip(noisy) {
            flips_by_distance[c.abs_diff(*n)] += 1;
        }
        let flipped = clean.len() - flips_by_distance[0];
        flips_by_distance[0] = 0;
        NoiseSummary {
            n: clean.len(),
            tau: matrix.tau(),
            sigma_n: matrix.sigma_n(),
            seed,
            flipped,
            realized_rate: if clean.is_empty() {
                0.0
            } else {
                flipped as f64 / clean.len() as f64
            },
            flips_by_distance,
        }
    }
}
