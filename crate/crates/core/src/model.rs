//! Ordinal label-distribution regressors.
//!
//! [`LdlModel`] is the contract the correction engine trains against: a model
//! maps a feature vector to a [`RankDistribution`] and is trained one epoch at a
//! time on target distributions with a KL loss. [`MlpRegressor`] is the
//! reference implementation, a one-hidden-layer network
//! `affine -> ReLU -> affine -> softmax` trained with plain mini-batch gradient
//! descent.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_dist::{expected_rank, kl_terms, RankDistribution, LOG_FLOOR};

pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_LR: f64 = 0.05;
pub const DEFAULT_BATCH_SIZE: usize = 32;

/// Optimizer settings for one epoch of training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// A model that emits a distribution over ordinal ranks.
pub trait LdlModel: Clone + Send + Sync {
    fn input_dim(&self) -> usize;

    fn num_ranks(&self) -> usize;

    fn predict(&self, features: &[f64]) -> Result<RankDistribution>;

    fn predict_batch(&self, features: &[&[f64]]) -> Result<Vec<RankDistribution>> {
        features.iter().map(|x| self.predict(x)).collect()
    }

    /// Runs one epoch of mini-batch training on `(features[i], targets[i])`
    /// pairs in a seed-determined order. Returns the mean pre-update loss.
    fn fit_epoch(
        &mut self,
        features: &[&[f64]],
        targets: &[RankDistribution],
        opts: &FitOptions,
        seed: u64,
    ) -> Result<f64>;

    /// A freshly initialized model of the same shape. Equal seeds give equal models.
    fn clone_initial(&self, seed: u64) -> Self;
}

/// Point readout of a predicted distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPrediction {
    /// Expected rank.
    pub y_hat: f64,
    /// Normalized-entropy confidence in `[0, 1]`.
    pub gamma: f64,
}

impl RankPrediction {
    pub fn from_distribution(rd: &RankDistribution) -> Self {
        RankPrediction {
            y_hat: expected_rank(rd),
            gamma: rd.confidence(),
        }
    }
}

pub fn predict_rank<M: LdlModel>(model: &M, features: &[f64]) -> Result<RankPrediction> {
    Ok(RankPrediction::from_distribution(&model.predict(features)?))
}

/// Averages the rank distributions of several models.
pub fn ensemble_predict<M: LdlModel>(models: &[M], features: &[f64]) -> Result<RankDistribution> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidConfig("ensemble has no members".into()))?;
    let mut acc = vec![0.0; first.num_ranks()];
    for model in models {
        let rd = model.predict(features)?;
        if rd.num_ranks() != acc.len() {
            return Err(Error::Dimension {
                expected: acc.len(),
                actual: rd.num_ranks(),
            });
        }
        for (a, p) in acc.iter_mut().zip(rd.probs()) {
            *a += p;
        }
    }
    let k = models.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(RankDistribution::from_normalized_unchecked(acc))
}

/// One-hidden-layer ReLU network with a softmax over ranks.
///
/// Weight matrices are row-major: `w1[h * input_dim + i]`, `w2[c * hidden_dim + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpRegressor {
    input_dim: usize,
    hidden_dim: usize,
    num_ranks: usize,
    seed: u64,
    epochs_trained: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Gradient of the mean loss, laid out like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(model: &MlpRegressor) -> Self {
        Gradients {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    /// All entries in parameter order `w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    fn scale(&mut self, factor: f64) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|g| *g *= factor);
        }
    }

    fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .all(|g| g.is_finite())
    }
}

struct Activations {
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

fn check_shape(input_dim: usize, hidden_dim: usize, num_ranks: usize) -> Result<()> {
    if input_dim == 0 || hidden_dim == 0 {
        return Err(Error::InvalidConfig(
            "input and hidden widths must be positive".into(),
        ));
    }
    if num_ranks < 2 {
        return Err(Error::InvalidConfig(format!(
            "rank count must be at least 2, got {num_ranks}"
        )));
    }
    Ok(())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl MlpRegressor {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(input_dim: usize, hidden_dim: usize, num_ranks: usize, seed: u64) -> Result<Self> {
        check_shape(input_dim, hidden_dim, num_ranks)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |n: usize, fan_in: usize, fan_out: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..limit)).collect()
        };
        let w1 = uniform(hidden_dim * input_dim, input_dim, hidden_dim);
        let w2 = uniform(num_ranks * hidden_dim, hidden_dim, num_ranks);
        Ok(MlpRegressor {
            input_dim,
            hidden_dim,
            num_ranks,
            seed,
            epochs_trained: 0,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; num_ranks],
        })
    }

    /// Builds a model from explicit parameters.
    pub fn from_weights(
        input_dim: usize,
        hidden_dim: usize,
        num_ranks: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        check_shape(input_dim, hidden_dim, num_ranks)?;
        for (got, want) in [
            (w1.len(), hidden_dim * input_dim),
            (b1.len(), hidden_dim),
            (w2.len(), num_ranks * hidden_dim),
            (b2.len(), num_ranks),
        ] {
            if got != want {
                return Err(Error::Dimension {
                    expected: want,
                    actual: got,
                });
            }
        }
        Ok(MlpRegressor {
            input_dim,
            hidden_dim,
            num_ranks,
            seed: 0,
            epochs_trained: 0,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epochs_trained(&self) -> usize {
        self.epochs_trained
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All parameters in the order `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let mut rest = flat;
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(v.len());
            v.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<RankDistribution> {
        Ok(RankDistribution::from_normalized_unchecked(
            self.activations(x)?.probs,
        ))
    }

    fn activations(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let pre_hidden: Vec<f64> = self
            .w1
            .chunks_exact(self.input_dim)
            .zip(&self.b1)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>())
            .collect();
        let hidden: Vec<f64> = pre_hidden.iter().map(|z| z.max(0.0)).collect();
        let logits: Vec<f64> = self
            .w2
            .chunks_exact(self.hidden_dim)
            .zip(&self.b2)
            .map(|(row, b)| b + row.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>())
            .collect();
        Ok(Activations {
            pre_hidden,
            hidden,
            probs: softmax(&logits),
        })
    }

    /// Mean KL loss over the given examples and its gradient.
    pub fn loss_and_gradient(
        &self,
        features: &[&[f64]],
        targets: &[RankDistribution],
    ) -> Result<(f64, Gradients)> {
        if features.len() != targets.len() {
            return Err(Error::Dimension {
                expected: features.len(),
                actual: targets.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::Data("cannot compute a loss over zero examples".into()));
        }
        let mut grad = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let mut d_logits = vec![0.0; self.num_ranks];
        let mut d_hidden = vec![0.0; self.hidden_dim];
        for (x, target) in features.iter().zip(targets) {
            if target.num_ranks() != self.num_ranks {
                return Err(Error::Dimension {
                    expected: self.num_ranks,
                    actual: target.num_ranks(),
                });
            }
            let act = self.activations(x)?;
            let t = target.probs();
            loss += kl_terms(t, &act.probs);

            // dL/dp_c = -t_c / (p_c + floor); push it through the softmax Jacobian.
            let dp: Vec<f64> = t
                .iter()
                .zip(&act.probs)
                .map(|(tc, pc)| -tc / (pc + LOG_FLOOR))
                .collect();
            let weighted: f64 = dp.iter().zip(&act.probs).map(|(g, p)| g * p).sum();
            for ((dz, g), p) in d_logits.iter_mut().zip(&dp).zip(&act.probs) {
                *dz = p * (g - weighted);
            }

            d_hidden.iter_mut().for_each(|v| *v = 0.0);
            for (c, dz) in d_logits.iter().enumerate() {
                grad.b2[c] += dz;
                let row = c * self.hidden_dim;
                for h in 0..self.hidden_dim {
                    grad.w2[row + h] += dz * act.hidden[h];
                    d_hidden[h] += dz * self.w2[row + h];
                }
            }
            for h in 0..self.hidden_dim {
                if act.pre_hidden[h] <= 0.0 {
                    continue;
                }
                let dz = d_hidden[h];
                grad.b1[h] += dz;
                let row = h * self.input_dim;
                for (i, xi) in x.iter().enumerate() {
                    grad.w1[row + i] += dz * xi;
                }
            }
        }
        let n = features.len() as f64;
        grad.scale(1.0 / n);
        Ok((loss / n, grad))
    }

    fn step(&mut self, grad: &Gradients, lr: f64) {
        for (params, g) in [
            (&mut self.w1, &grad.w1),
            (&mut self.b1, &grad.b1),
            (&mut self.w2, &grad.w2),
            (&mut self.b2, &grad.b2),
        ] {
            for (p, gi) in params.iter_mut().zip(g) {
                *p -= lr * gi;
            }
        }
    }

    /// Serializes the model to the plain-text checkpoint format.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        out.push_str("ordac-mlp v1\n");
        let _ = writeln!(out, "input_dim {}", self.input_dim);
        let _ = writeln!(out, "hidden_dim {}", self.hidden_dim);
        let _ = writeln!(out, "num_ranks {}", self.num_ranks);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "epochs {}", self.epochs_trained);
        for (name, values) in [
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ] {
            out.push_str(name);
            for v in values {
                let _ = write!(out, " {v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, msg: &str| Error::Data(format!("checkpoint line {}: {msg}", line + 1));
        match lines.next() {
            Some((_, "ordac-mlp v1")) => {}
            _ => return Err(bad(0, "expected header `ordac-mlp v1`")),
        }
        let mut header = |key: &str| -> Result<u64> {
            let (n, line) = lines.next().ok_or_else(|| bad(0, "truncated checkpoint"))?;
            let value = line
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .ok_or_else(|| bad(n, &format!("expected `{key}`")))?;
            value
                .trim()
                .parse()
                .map_err(|_| bad(n, &format!("`{key}` is not an integer")))
        };
        let input_dim = header("input_dim")? as usize;
        let hidden_dim = header("hidden_dim")? as usize;
        let num_ranks = header("num_ranks")? as usize;
        let seed = header("seed")?;
        let epochs = header("epochs")? as usize;
        let mut arrays = Vec::with_capacity(4);
        for key in ["w1", "b1", "w2", "b2"] {
            let (n, line) = lines.next().ok_or_else(|| bad(0, "truncated checkpoint"))?;
            let mut parts = line.split_ascii_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(n, &format!("expected `{key}`")));
            }
            let values = parts
                .map(|v| v.parse::<f64>().map_err(|_| bad(n, "malformed number")))
                .collect::<Result<Vec<_>>>()?;
            arrays.push(values);
        }
        let b2 = arrays.pop().unwrap_or_default();
        let w2 = arrays.pop().unwrap_or_default();
        let b1 = arrays.pop().unwrap_or_default();
        let w1 = arrays.pop().unwrap_or_default();
        let mut model = MlpRegressor::from_weights(input_dim, hidden_dim, num_ranks, w1, b1, w2, b2)?;
        model.seed = seed;
        model.epochs_trained = epochs;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}

impl LdlModel for MlpRegressor {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn num_ranks(&self) -> usize {
        self.num_ranks
    }

    fn predict(&self, features: &[f64]) -> Result<RankDistribution> {
        self.forward(features)
    }

    fn fit_epoch(
        &mut self,
        features: &[&[f64]],
        targets: &[RankDistribution],
        opts: &FitOptions,
        seed: u64,
    ) -> Result<f64> {
        opts.validate()?;
        if features.len() != targets.len() {
            return Err(Error::Dimension {
                expected: features.len(),
                actual: targets.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::Data("cannot train on an empty example set".into()));
        }
        let epoch = self.epochs_trained + 1;
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let mut total = 0.0;
        let mut batch_x = Vec::with_capacity(opts.batch_size);
        let mut batch_t = Vec::with_capacity(opts.batch_size);
        for (batch, chunk) in order.chunks(opts.batch_size).enumerate() {
            batch_x.clear();
            batch_t.clear();
            for &i in chunk {
                batch_x.push(features[i]);
                batch_t.push(targets[i].clone());
            }
            let (loss, grad) = self.loss_and_gradient(&batch_x, &batch_t)?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch });
            }
            total += loss * chunk.len() as f64;
            self.step(&grad, opts.lr);
        }
        self.epochs_trained = epoch;
        Ok(total / features.len() as f64)
    }

    fn clone_initial(&self, seed: u64) -> Self {
        // Shape was validated when `self` was built.
        MlpRegressor::new(self.input_dim, self.hidden_dim, self.num_ranks, seed)
            .expect("validated shape")
    }
}
