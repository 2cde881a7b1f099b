//! Adaptive label correction with K-fold cross-training.
//!
//! `K` models are trained side by side, model `k` on every fold but `k`. After
//! a warm-up of `e_corr - 1` epochs, each model predicts its held-out fold at
//! the end of every epoch and those out-of-fold predictions correct the
//! held-out samples' label distributions in two stages:
//!
//! 1. Class-wise debiasing. Within the fold, samples are bucketed by the class
//!    of their current label mean and each bucket's predictions are shifted so
//!    that their mean lands on the class index.
//! 2. Sample-wise update. A per-sample rate `lambda = gamma / (1 - ln(pi + eps))`
//!    combines the model's confidence `gamma` with the class prior `pi`, then
//!    `sigma <- sigma + alpha_base * lambda * (|e| - sigma)` and
//!    `mu <- mu + beta_base * lambda * e`, where `e` is the shifted prediction
//!    minus `mu`.
//!
//! Corrections from all folds are merged at an epoch barrier, so every
//! training view sees them from the next epoch on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FoldPlan, Sample, DEFAULT_STD_INIT};
use crate::error::{Error, Result};
pub use crate::label_dist::class_of;
use crate::label_dist::{discretize, LabelDistribution, RankDistribution};
use crate::model::{FitOptions, LdlModel, RankPrediction};
use crate::seed::derive_seed;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionParams {
    pub alpha_base: f64,
    pub beta_base: f64,
    /// Total training epochs.
    pub e_max: usize,
    /// First epoch (1-based) at whose end corrections are applied.
    pub e_corr: usize,
    pub std_init: f64,
    pub epsilon: f64,
    pub debias: bool,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        CorrectionParams {
            alpha_base: 0.2,
            beta_base: 0.8,
            e_max: 50,
            e_corr: 10,
            std_init: DEFAULT_STD_INIT,
            epsilon: 1e-8,
            debias: true,
        }
    }
}

impl CorrectionParams {
    /// `e_corr > e_max` is allowed and disables correction; zero base rates do too.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha_base", self.alpha_base), ("beta_base", self.beta_base)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.e_max == 0 {
            return Err(Error::InvalidConfig("e_max must be at least 1".into()));
        }
        if !(self.std_init > 0.0 && self.std_init.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "std_init must be positive, got {}",
                self.std_init
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn corrects_at(&self, epoch: usize) -> bool {
        epoch >= self.e_corr
    }
}

/// Mean prediction and size of each class bucket. `means[c]` is `None` when
/// no sample falls in class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub means: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl ClassStats {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `mean_c - c`, the amount class `c`'s predictions are shifted by.
    pub fn offset(&self, class: usize) -> Option<f64> {
        self.means.get(class).copied().flatten().map(|m| m - class as f64)
    }
}

pub fn class_wise_means(preds: &[f64], classes: &[usize], num_ranks: usize) -> Result<ClassStats> {
    if preds.len() != classes.len() {
        return Err(Error::Dimension {
            expected: classes.len(),
            actual: preds.len(),
        });
    }
    let mut sums = vec![0.0; num_ranks];
    let mut counts = vec![0; num_ranks];
    for (i, (&p, &c)) in preds.iter().zip(classes).enumerate() {
        if c >= num_ranks {
            return Err(Error::Data(format!(
                "class {c} at index {i} outside 0..{num_ranks}"
            )));
        }
        sums[c] += p;
        counts[c] += 1;
    }
    let means = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    Ok(ClassStats { means, counts })
}

/// Re-centres predictions so each class bucket's mean equals its class index.
pub fn shift_predictions(preds: &[f64], classes: &[usize], stats: &ClassStats) -> Result<Vec<f64>> {
    if preds.len() != classes.len() {
        return Err(Error::Dimension {
            expected: classes.len(),
            actual: preds.len(),
        });
    }
    preds
        .iter()
        .zip(classes)
        .map(|(&p, &c)| {
            stats
                .offset(c)
                .map(|off| p - off)
                .ok_or_else(|| Error::Invariant(format!("no class mean for class {c}")))
        })
        .collect()
}

/// Per-sample update rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionRates {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn correction_coefficient(
    gamma: f64,
    class_count: usize,
    total: usize,
    params: &CorrectionParams,
) -> Result<CorrectionRates> {
    if class_count == 0 || class_count > total {
        return Err(Error::Invariant(format!(
            "class count {class_count} of {total} cannot be corrected"
        )));
    }
    let prior = class_count as f64 / total as f64;
    let lambda = gamma / (1.0 - (prior + params.epsilon).ln());
    Ok(CorrectionRates {
        lambda,
        alpha: params.alpha_base * lambda,
        beta: params.beta_base * lambda,
    })
}

/// Moves `dist` toward `target`. Both moments are updated from the old state.
pub fn update_distribution(
    dist: &LabelDistribution,
    target: f64,
    alpha: f64,
    beta: f64,
    num_ranks: usize,
) -> LabelDistribution {
    let error = target - dist.mu;
    LabelDistribution::new(
        dist.mu + beta * error,
        dist.sigma + alpha * (error.abs() - dist.sigma),
        num_ranks,
    )
}

/// One correction step over a fold given its predictions.
///
/// `dists[i]` is corrected with `preds[i]`; class statistics come from this
/// prediction set alone.
pub fn correct_predictions(
    dists: &[LabelDistribution],
    preds: &[RankPrediction],
    params: &CorrectionParams,
    num_ranks: usize,
) -> Result<Vec<LabelDistribution>> {
    if dists.len() != preds.len() {
        return Err(Error::Dimension {
            expected: dists.len(),
            actual: preds.len(),
        });
    }
    let classes: Vec<usize> = dists.iter().map(|d| d.class(num_ranks)).collect();
    let y_hat: Vec<f64> = preds.iter().map(|p| p.y_hat).collect();
    let stats = class_wise_means(&y_hat, &classes, num_ranks)?;
    let targets = if params.debias {
        shift_predictions(&y_hat, &classes, &stats)?
    } else {
        y_hat
    };
    let total = stats.total();
    dists
        .iter()
        .zip(preds)
        .zip(targets.iter().zip(&classes))
        .map(|((dist, pred), (&target, &class))| {
            let rates = correction_coefficient(pred.gamma, stats.counts[class], total, params)?;
            Ok(update_distribution(dist, target, rates.alpha, rates.beta, num_ranks))
        })
        .collect()
}

/// Predicts `samples` with `model` and returns each sample's corrected
/// distribution, keyed by sample id, in input order. Inputs are not modified.
pub fn correct_fold<M: LdlModel>(
    model: &M,
    samples: &[&Sample],
    params: &CorrectionParams,
    num_ranks: usize,
) -> Result<Vec<(usize, LabelDistribution)>> {
    if samples.is_empty() {
        return Err(Error::Data("validation fold is empty".into()));
    }
    let preds = samples
        .iter()
        .map(|s| Ok(RankPrediction::from_distribution(&model.predict(&s.features)?)))
        .collect::<Result<Vec<_>>>()?;
    let dists: Vec<LabelDistribution> = samples.iter().map(|s| s.dist).collect();
    let updated = correct_predictions(&dists, &preds, params, num_ranks)?;
    Ok(samples.iter().map(|s| s.id).zip(updated).collect())
}

/// Per-epoch statistics of a correction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over folds.
    pub mean_loss: f64,
    pub fold_losses: Vec<f64>,
    pub corrected: bool,
    pub mean_abs_delta_mu: f64,
    pub mean_sigma: f64,
    /// Samples per class of the current label means.
    pub class_counts: Vec<usize>,
    /// `change_histogram[d]` counts samples whose current class is `d` ranks
    /// away from their original label.
    pub change_histogram: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Class histogram of the labels before any correction.
    pub initial_class_counts: Vec<usize>,
    pub epochs: Vec<EpochRecord>,
}

/// What each fold model did in one epoch, recorded for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldActivity {
    pub epoch: usize,
    pub fold: usize,
    pub trained_on: Vec<usize>,
    pub corrected: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrectionAudit {
    pub activity: Vec<FoldActivity>,
    /// `sigma_trace[e][i]`: sigma of sample `i` after epoch `e + 1`.
    pub sigma_trace: Vec<Vec<f64>>,
}

impl CorrectionAudit {
    /// Checks that each sample was only ever corrected by the one model that
    /// holds it out, and never by a model that trained on it in that epoch.
    pub fn check_out_of_fold(&self, plan: &FoldPlan) -> Result<()> {
        for act in &self.activity {
            let trained: std::collections::HashSet<usize> = act.trained_on.iter().copied().collect();
            for &id in &act.corrected {
                if plan.fold_of(id) != act.fold || trained.contains(&id) {
                    return Err(Error::Invariant(format!(
                        "epoch {}: fold model {} corrected sample {id} it may have trained on",
                        act.epoch, act.fold
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of [`ordac_train`].
#[derive(Debug, Clone)]
pub struct OrdacOutcome<M> {
    /// Input dataset with every distribution replaced by its final corrected value.
    pub clean: Dataset,
    pub models: Vec<M>,
    pub history: History,
    pub audit: CorrectionAudit,
}

fn targets_for(store: &[LabelDistribution], ids: &[usize], num_ranks: usize) -> Result<Vec<RankDistribution>> {
    ids.iter().map(|&i| discretize(&store[i], num_ranks)).collect()
}

fn check_inputs<M: LdlModel>(
    dataset: &Dataset,
    plan: &FoldPlan,
    template: &M,
    model_seeds: &[u64],
) -> Result<()> {
    if plan.len() != dataset.len() {
        return Err(Error::InvalidConfig(format!(
            "fold plan covers {} samples but the dataset has {}",
            plan.len(),
            dataset.len()
        )));
    }
    if model_seeds.len() != plan.k() {
        return Err(Error::InvalidConfig(format!(
            "need one model seed per fold ({}), got {}",
            plan.k(),
            model_seeds.len()
        )));
    }
    if (0..plan.k()).any(|k| plan.valid_ids(k).is_empty()) {
        return Err(Error::InvalidConfig("every fold must hold at least one sample".into()));
    }
    if template.input_dim() != dataset.feature_dim() || template.num_ranks() != dataset.num_ranks() {
        return Err(Error::InvalidConfig(format!(
            "model shape {}->{} does not match dataset {}->{}",
            template.input_dim(),
            template.num_ranks(),
            dataset.feature_dim(),
            dataset.num_ranks()
        )));
    }
    Ok(())
}

/// Runs K-fold cross-training with online label correction.
///
/// Label distributions start at `(label_original, std_init)`. Model `k` is
/// initialized with `model_seeds[k]` and shuffles epoch `e` with
/// `derive_seed(model_seeds[k], e)`.
pub fn ordac_train<M: LdlModel>(
    dataset: &Dataset,
    plan: &FoldPlan,
    params: &CorrectionParams,
    template: &M,
    fit: &FitOptions,
    model_seeds: &[u64],
) -> Result<OrdacOutcome<M>> {
    params.validate()?;
    fit.validate()?;
    check_inputs(dataset, plan, template, model_seeds)?;

    let num_ranks = dataset.num_ranks();
    let features = dataset.features();
    let mut samples: Vec<Sample> = dataset.samples().to_vec();
    for s in &mut samples {
        s.dist = LabelDistribution::from_label(s.label_original, params.std_init, num_ranks);
    }
    let train_ids: Vec<Vec<usize>> = (0..plan.k()).map(|k| plan.train_ids(k)).collect();
    let valid_ids: Vec<Vec<usize>> = (0..plan.k()).map(|k| plan.valid_ids(k)).collect();
    let mut models: Vec<M> = model_seeds.iter().map(|&s| template.clone_initial(s)).collect();

    let mut history = History {
        initial_class_counts: class_histogram(&samples, num_ranks),
        epochs: Vec::with_capacity(params.e_max),
    };
    let mut audit = CorrectionAudit::default();

    for epoch in 1..=params.e_max {
        let correcting = params.corrects_at(epoch);
        let store: Vec<LabelDistribution> = samples.iter().map(|s| s.dist).collect();
        let fold_results = models
            .par_iter_mut()
            .enumerate()
            .map(|(k, model)| -> Result<(f64, Vec<(usize, LabelDistribution)>)> {
                let ids = &train_ids[k];
                let xs: Vec<&[f64]> = ids.iter().map(|&i| features[i]).collect();
                let targets = targets_for(&store, ids, num_ranks)?;
                let loss = model.fit_epoch(&xs, &targets, fit, derive_seed(model_seeds[k], epoch as u64))?;
                let corrections = if correcting {
                    let held_out: Vec<&Sample> = valid_ids[k].iter().map(|&i| &samples[i]).collect();
                    correct_fold(model, &held_out, params, num_ranks)?
                } else {
                    Vec::new()
                };
                Ok((loss, corrections))
            })
            .collect::<Result<Vec<_>>>()?;

        // Barrier: single writer, fold order then id order.
        let mut delta_sum = 0.0;
        let mut n_corrected = 0;
        let mut fold_losses = Vec::with_capacity(plan.k());
        for (k, (loss, mut corrections)) in fold_results.into_iter().enumerate() {
            fold_losses.push(loss);
            corrections.sort_by_key(|(id, _)| *id);
            if correcting {
                audit.activity.push(FoldActivity {
                    epoch,
                    fold: k,
                    trained_on: train_ids[k].clone(),
                    corrected: corrections.iter().map(|(id, _)| *id).collect(),
                });
            }
            for (id, dist) in corrections {
                delta_sum += (dist.mu - samples[id].dist.mu).abs();
                n_corrected += 1;
                samples[id].dist = dist;
            }
        }

        audit.sigma_trace.push(samples.iter().map(|s| s.dist.sigma).collect());
        history.epochs.push(EpochRecord {
            epoch,
            mean_loss: fold_losses.iter().sum::<f64>() / fold_losses.len() as f64,
            fold_losses,
            corrected: correcting,
            mean_abs_delta_mu: if n_corrected > 0 {
                delta_sum / n_corrected as f64
            } else {
                0.0
            },
            mean_sigma: samples.iter().map(|s| s.dist.sigma).sum::<f64>() / samples.len() as f64,
            class_counts: class_histogram(&samples, num_ranks),
            change_histogram: change_histogram(&samples, num_ranks),
        });
    }

    let mut clean = dataset.clone();
    let dists: Vec<LabelDistribution> = samples.iter().map(|s| s.dist).collect();
    clean.set_distributions(&dists)?;
    Ok(OrdacOutcome {
        clean,
        models,
        history,
        audit,
    })
}

fn class_histogram(samples: &[Sample], num_ranks: usize) -> Vec<usize> {
    let mut counts = vec![0; num_ranks];
    for s in samples {
        counts[s.dist.class(num_ranks)] += 1;
    }
    counts
}

fn change_histogram(samples: &[Sample], num_ranks: usize) -> Vec<usize> {
    let mut counts = vec![0; num_ranks];
    for s in samples {
        counts[s.dist.class(num_ranks).abs_diff(s.label_original)] += 1;
    }
    counts
}

/// Plain K-fold training on fixed targets `(label_original, std_init)`,
/// seeded exactly like [`ordac_train`].
pub fn kfold_train<M: LdlModel>(
    dataset: &Dataset,
    plan: &FoldPlan,
    std_init: f64,
    epochs: usize,
    template: &M,
    fit: &FitOptions,
    model_seeds: &[u64],
) -> Result<Vec<M>> {
    check_inputs(dataset, plan, template, model_seeds)?;
    let c = dataset.num_ranks();
    (0..plan.k())
        .map(|k| {
            let ids = plan.train_ids(k);
            let xs: Vec<&[f64]> = ids.iter().map(|&i| dataset.samples()[i].features.as_slice()).collect();
            let targets = ids
                .iter()
                .map(|&i| discretize(&LabelDistribution::from_label(dataset.samples()[i].label_original, std_init, c), c))
                .collect::<Result<Vec<_>>>()?;
            let mut model = template.clone_initial(model_seeds[k]);
            for epoch in 1..=epochs {
                model.fit_epoch(&xs, &targets, fit, derive_seed(model_seeds[k], epoch as u64))?;
            }
            Ok(model)
        })
        .collect()
}

fn train_on_targets<M: LdlModel>(
    features: &[&[f64]],
    targets: &[RankDistribution],
    epochs: usize,
    template: &M,
    fit: &FitOptions,
    seed: u64,
) -> Result<M> {
    let mut model = template.clone_initial(seed);
    for epoch in 1..=epochs {
        model.fit_epoch(features, targets, fit, derive_seed(seed, epoch as u64))?;
    }
    Ok(model)
}

/// Trains a fresh model for `e_max` epochs on the corrected distributions,
/// with no further correction.
pub fn train_on_corrected<M: LdlModel>(
    clean: &Dataset,
    params: &CorrectionParams,
    template: &M,
    fit: &FitOptions,
    seed: u64,
) -> Result<M> {
    params.validate()?;
    let c = clean.num_ranks();
    let targets = clean
        .samples()
        .iter()
        .map(|s| discretize(&s.dist, c))
        .collect::<Result<Vec<_>>>()?;
    train_on_targets(&clean.features(), &targets, params.e_max, template, fit, seed)
}

/// Fixed-form LDL baseline: one model trained for `e_max` epochs on
/// `(label_original, std_init)` targets.
pub fn train_baseline<M: LdlModel>(
    dataset: &Dataset,
    params: &CorrectionParams,
    template: &M,
    fit: &FitOptions,
    seed: u64,
) -> Result<M> {
    params.validate()?;
    let c = dataset.num_ranks();
    let targets = dataset
        .samples()
        .iter()
        .map(|s| discretize(&LabelDistribution::from_label(s.label_original, params.std_init, c), c))
        .collect::<Result<Vec<_>>>()?;
    train_on_targets(&dataset.features(), &targets, params.e_max, template, fit, seed)
}

/// Drops samples whose final sigma is not below `std_init`.
///
/// Returns the kept samples (renumbered) and the removed ids of `clean`.
pub fn filter_uncertain(clean: &Dataset, std_init: f64) -> Result<(Dataset, Vec<usize>)> {
    let (kept, removed): (Vec<usize>, Vec<usize>) =
        (0..clean.len()).partition(|&i| clean.samples()[i].dist.sigma < std_init);
    Ok((clean.subset(&kept)?, removed))
}
