//! Macro-averaged ordinal metrics and label-quality measures.
//!
//! Macro metrics group samples by their *true* rank and average the per-class
//! values over the classes that occur, so class frequency does not matter.
//! Continuous predictions are mapped to classes with [`class_of`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_dist::class_of;

/// Per-class and macro-averaged evaluation of a set of rank predictions.
///
/// Per-class entries are `None` for classes with no test samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_mae: f64,
    pub macro_recall: f64,
    pub per_class_mae: Vec<Option<f64>>,
    pub per_class_recall: Vec<Option<f64>>,
    pub n_per_class: Vec<usize>,
}

struct ClassTotals {
    abs_error: Vec<f64>,
    hits: Vec<usize>,
    count: Vec<usize>,
}

fn class_totals(preds: &[f64], truths: &[usize], num_ranks: usize) -> Result<ClassTotals> {
    if preds.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    if preds.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            actual: preds.len(),
        });
    }
    let mut totals = ClassTotals {
        abs_error: vec![0.0; num_ranks],
        hits: vec![0; num_ranks],
        count: vec![0; num_ranks],
    };
    for (i, (&pred, &truth)) in preds.iter().zip(truths).enumerate() {
        if truth >= num_ranks {
            return Err(Error::Data(format!(
                "true rank {truth} at index {i} outside 0..{num_ranks}"
            )));
        }
        let predicted = class_of(pred, num_ranks);
        totals.abs_error[truth] += predicted.abs_diff(truth) as f64;
        totals.hits[truth] += usize::from(predicted == truth);
        totals.count[truth] += 1;
    }
    Ok(totals)
}

fn present_mean(values: &[Option<f64>]) -> f64 {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    present.iter().sum::<f64>() / present.len() as f64
}

impl EvalReport {
    pub fn compute(preds: &[f64], truths: &[usize], num_ranks: usize) -> Result<Self> {
        let t = class_totals(preds, truths, num_ranks)?;
        let per_class = |num: &dyn Fn(usize) -> f64| -> Vec<Option<f64>> {
            (0..num_ranks)
                .map(|c| (t.count[c] > 0).then(|| num(c) / t.count[c] as f64))
                .collect()
        };
        let per_class_mae = per_class(&|c| t.abs_error[c]);
        let per_class_recall = per_class(&|c| t.hits[c] as f64);
        Ok(EvalReport {
            macro_mae: present_mean(&per_class_mae),
            macro_recall: present_mean(&per_class_recall),
            per_class_mae,
            per_class_recall,
            n_per_class: t.count,
        })
    }

    pub fn csv_header(num_ranks: usize) -> String {
        let mut cols = vec!["macro_mae".to_string(), "macro_recall".to_string()];
        cols.extend((0..num_ranks).map(|c| format!("mae_{c}")));
        cols.extend((0..num_ranks).map(|c| format!("recall_{c}")));
        cols.extend((0..num_ranks).map(|c| format!("n_{c}")));
        cols.join(",")
    }

    /// One flat CSV row matching [`EvalReport::csv_header`]; absent classes are empty cells.
    pub fn csv_row(&self) -> String {
        let mut row = format!("{:.16e},{:.16e}", self.macro_mae, self.macro_recall);
        for v in self.per_class_mae.iter().chain(&self.per_class_recall) {
            row.push(',');
            if let Some(v) = v {
                let _ = write!(row, "{v:.16e}");
            }
        }
        for n in &self.n_per_class {
            let _ = write!(row, ",{n}");
        }
        row
    }
}

/// Macro-averaged MAE between predicted and true ranks.
pub fn macro_mae(preds: &[f64], truths: &[usize], num_ranks: usize) -> Result<f64> {
    Ok(EvalReport::compute(preds, truths, num_ranks)?.macro_mae)
}

/// Mean of per-class recall.
pub fn macro_recall(preds: &[f64], truths: &[usize], num_ranks: usize) -> Result<f64> {
    Ok(EvalReport::compute(preds, truths, num_ranks)?.macro_recall)
}

/// Micro-averaged MAE and RMSE between continuous label means and true ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelQuality {
    pub mae: f64,
    pub rmse: f64,
}

pub fn label_quality(mus: &[f64], truths: &[usize]) -> Result<LabelQuality> {
    if mus.is_empty() {
        return Err(Error::Data("cannot score an empty label set".into()));
    }
    if mus.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            actual: mus.len(),
        });
    }
    let n = mus.len() as f64;
    let (abs, sq) = mus
        .iter()
        .zip(truths)
        .fold((0.0, 0.0), |(abs, sq), (m, &t)| {
            let e = m - t as f64;
            (abs + e.abs(), sq + e * e)
        });
    Ok(LabelQuality {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    })
}

/// Total-variation distance between two class histograms after normalizing each.
pub fn histogram_tv_distance(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (a.iter().sum::<usize>() as f64, b.iter().sum::<usize>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Data("histogram has no mass".into()));
    }
    Ok(0.5
        * a.iter()
            .zip(b)
            .map(|(x, y)| (*x as f64 / na - *y as f64 / nb).abs())
            .sum::<f64>())
}
