//! Datasets, the synthetic ordinal benchmark, CSV I/O and stratified splits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::label_dist::LabelDistribution;

/// Initial label standard deviation, in rank units.
pub const DEFAULT_STD_INIT: f64 = 0.75;

/// One training example with its current label distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub features: Vec<f64>,
    pub dist: LabelDistribution,
    /// Label as given to the learner, possibly noisy.
    pub label_original: usize,
    /// Ground truth, when known. Never used for training.
    pub label_true: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_ranks: usize,
    feature_dim: usize,
    pub provenance: String,
}

impl Dataset {
    /// Validates and wraps samples. Ids must be exactly `0..N` in order.
    pub fn new(samples: Vec<Sample>, num_ranks: usize, provenance: impl Into<String>) -> Result<Self> {
        if num_ranks < 2 {
            return Err(Error::InvalidConfig(format!(
                "rank count must be at least 2, got {num_ranks}"
            )));
        }
        let feature_dim = samples.first().map_or(0, |s| s.features.len());
        for (i, s) in samples.iter().enumerate() {
            if s.id != i {
                return Err(Error::Data(format!(
                    "sample ids must be dense 0..N, found id {} at position {i}",
                    s.id
                )));
            }
            if s.features.len() != feature_dim {
                return Err(Error::Data(format!(
                    "sample {i} has {} features, expected {feature_dim}",
                    s.features.len()
                )));
            }
            let bad = |which: &str, label: usize| {
                Error::Data(format!(
                    "sample {i}: {which} {label} outside 0..{num_ranks}"
                ))
            };
            if s.label_original >= num_ranks {
                return Err(bad("label", s.label_original));
            }
            if let Some(t) = s.label_true.filter(|t| *t >= num_ranks) {
                return Err(bad("true label", t));
            }
        }
        Ok(Dataset {
            samples,
            num_ranks,
            feature_dim,
            provenance: provenance.into(),
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_ranks(&self) -> usize {
        self.num_ranks
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label_original).collect()
    }

    /// True labels, or `None` if any sample lacks one.
    pub fn true_labels(&self) -> Option<Vec<usize>> {
        self.samples.iter().map(|s| s.label_true).collect()
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.as_slice()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_ranks];
        for s in &self.samples {
            counts[s.label_original] += 1;
        }
        counts
    }

    /// Copies the samples at `indices` into a new dataset with renumbered ids.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let samples = indices
            .iter()
            .enumerate()
            .map(|(new_id, &i)| {
                let mut s = self
                    .samples
                    .get(i)
                    .ok_or_else(|| Error::Data(format!("subset index {i} out of range")))?
                    .clone();
                s.id = new_id;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Dataset::new(samples, self.num_ranks, self.provenance.clone())?;
        if out.is_empty() {
            out.feature_dim = self.feature_dim;
        }
        Ok(out)
    }

    /// Replaces the given labels and resets every distribution to `(label, std_init)`.
    pub fn relabel(&mut self, labels: &[usize], std_init: f64) -> Result<()> {
        if labels.len() != self.samples.len() {
            return Err(Error::Dimension {
                expected: self.samples.len(),
                actual: labels.len(),
            });
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, l)| **l >= self.num_ranks) {
            return Err(Error::Data(format!(
                "label {l} at index {i} outside 0..{}",
                self.num_ranks
            )));
        }
        for (s, &l) in self.samples.iter_mut().zip(labels) {
            s.label_original = l;
        }
        self.reset_distributions(std_init);
        Ok(())
    }

    /// Records the current label as ground truth wherever none is known.
    pub fn mark_labels_as_true(&mut self) {
        for s in &mut self.samples {
            s.label_true.get_or_insert(s.label_original);
        }
    }

    /// Sets every distribution to `(label_original, std_init)`.
    pub fn reset_distributions(&mut self, std_init: f64) {
        let c = self.num_ranks;
        for s in &mut self.samples {
            s.dist = LabelDistribution::from_label(s.label_original, std_init, c);
        }
    }

    /// Overwrites each sample's distribution; `dists[i]` goes to sample `i`.
    pub fn set_distributions(&mut self, dists: &[LabelDistribution]) -> Result<()> {
        if dists.len() != self.samples.len() {
            return Err(Error::Dimension {
                expected: self.samples.len(),
                actual: dists.len(),
            });
        }
        for (s, d) in self.samples.iter_mut().zip(dists) {
            s.dist = *d;
        }
        Ok(())
    }

    /// SHA-256 over the full CSV serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = self.to_csv_string(CsvLayout::Corrected);
        Sha256::digest(bytes.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut acc, b| {
                let _ = write!(acc, "{b:02x}");
                acc
            })
    }
}

/// Class sizes for the synthetic generator: one count for every class, or
/// an explicit count per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassCounts {
    Balanced(usize),
    PerClass(Vec<usize>),
}

/// Parameters of the synthetic ordinal benchmark.
///
/// Class `c` is an isotropic Gaussian centred at `c * class_separation * u`,
/// with `u = (1, ..., 1) / sqrt(d)`, so rank distance equals feature distance
/// along `u` and adjacent classes overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_ranks: usize,
    pub feature_dim: usize,
    pub n_per_class: ClassCounts,
    pub class_separation: f64,
    pub class_spread: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_ranks: 5,
            feature_dim: 4,
            n_per_class: ClassCounts::Balanced(200),
            class_separation: 2.0,
            class_spread: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// The default benchmark with a middle-heavy class prior.
    pub fn imbalanced() -> Self {
        SyntheticSpec {
            n_per_class: ClassCounts::PerClass(vec![40, 120, 400, 120, 40]),
            ..SyntheticSpec::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn counts(&self) -> Vec<usize> {
        match &self.n_per_class {
            ClassCounts::Balanced(n) => vec![*n; self.num_ranks],
            ClassCounts::PerClass(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ranks < 2 {
            return Err(Error::InvalidConfig(format!(
                "rank count must be at least 2, got {}",
                self.num_ranks
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        if self.counts().len() != self.num_ranks {
            return Err(Error::InvalidConfig(format!(
                "expected {} class counts, got {}",
                self.num_ranks,
                self.counts().len()
            )));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidConfig("class_separation must be positive".into()));
        }
        if !(self.class_spread > 0.0 && self.class_spread.is_finite()) {
            return Err(Error::InvalidConfig("class_spread must be positive".into()));
        }
        Ok(())
    }
}

/// Draws the synthetic benchmark. Class priors are exact counts, samples are
/// ordered class by class, and labels start clean.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.class_spread)
        .map_err(|e| Error::InvalidConfig(format!("class_spread: {e}")))?;
    let axis = 1.0 / (spec.feature_dim as f64).sqrt();
    let mut samples = Vec::new();
    for (class, count) in spec.counts().into_iter().enumerate() {
        let center = class as f64 * spec.class_separation * axis;
        for _ in 0..count {
            let features = (0..spec.feature_dim)
                .map(|_| center + noise.sample(&mut rng))
                .collect();
            samples.push(Sample {
                id: samples.len(),
                features,
                dist: LabelDistribution::from_label(class, DEFAULT_STD_INIT, spec.num_ranks),
                label_original: class,
                label_true: Some(class),
            });
        }
    }
    let provenance = format!(
        "synthetic num_ranks={} feature_dim={} counts={:?} separation={} spread={} seed={}",
        spec.num_ranks,
        spec.feature_dim,
        spec.counts(),
        spec.class_separation,
        spec.class_spread,
        spec.seed
    );
    Dataset::new(samples, spec.num_ranks, provenance)
}

/// Column layout for CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// `id, x0.., label, label_true`
    Plain,
    /// `id, x0.., label_noisy, label_true`
    Noisy,
    /// `id, x0.., mu, sigma, label_original, label_true`
    Corrected,
}

const LABEL_COLUMNS: [&str; 3] = ["label", "label_noisy", "label_original"];
const RESERVED: [&str; 7] = [
    "id",
    "label",
    "label_noisy",
    "label_original",
    "label_true",
    "mu",
    "sigma",
];

impl Dataset {
    pub fn to_csv_string(&self, layout: CsvLayout) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# num_ranks: {}", self.num_ranks);
        let _ = writeln!(
            out,
            "# provenance: {}",
            self.provenance.replace(['\n', '\r'], " ")
        );
        let mut header = vec!["id".to_string()];
        header.extend((0..self.feature_dim).map(|i| format!("x{i}")));
        let label_col = match layout {
            CsvLayout::Plain => "label",
            CsvLayout::Noisy => "label_noisy",
            CsvLayout::Corrected => {
                header.push("mu".into());
                header.push("sigma".into());
                "label_original"
            }
        };
        header.push(label_col.into());
        header.push("label_true".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{}", s.id);
            for x in &s.features {
                let _ = write!(out, ",{x:.16e}");
            }
            if layout == CsvLayout::Corrected {
                let _ = write!(out, ",{:.16e},{:.16e}", s.dist.mu, s.dist.sigma);
            }
            let _ = write!(out, ",{},", s.label_original);
            if let Some(t) = s.label_true {
                let _ = write!(out, "{t}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, layout: CsvLayout) -> Result<()> {
        std::fs::write(path, self.to_csv_string(layout)).map_err(|e| Error::io(path, e))
    }
}

/// Reads a dataset written by [`Dataset::write_csv`] or any CSV with a label
/// column (`label`, `label_noisy` or `label_original`), an optional
/// `label_true` column and feature columns.
///
/// `num_ranks` falls back to the `# num_ranks:` comment, then to the largest
/// label seen plus one. Without `mu`/`sigma` columns each distribution starts at
/// `(label, DEFAULT_STD_INIT)`.
pub fn load_csv(path: &Path, num_ranks: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, num_ranks)
}

pub fn parse_csv(text: &str, num_ranks: Option<usize>) -> Result<Dataset> {
    let mut meta: HashMap<&str, &str> = HashMap::new();
    let mut body_start = 0;
    let mut comment_lines = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once(':') {
            meta.insert(k.trim(), v.trim());
        }
        body_start += line.len();
        comment_lines += 1;
    }
    let declared = match meta.get("num_ranks") {
        Some(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::Data(format!("bad num_ranks comment `{v}`")))?,
        ),
        None => None,
    };
    if let (Some(a), Some(b)) = (num_ranks, declared) {
        if a != b {
            return Err(Error::Data(format!(
                "file declares {b} ranks but {a} were requested"
            )));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let label_idx = LABEL_COLUMNS
        .iter()
        .find_map(|c| find(c))
        .ok_or_else(|| Error::Data("no `label` column in header".into()))?;
    let true_idx = find("label_true");
    let mu_idx = find("mu");
    let sigma_idx = find("sigma");
    if mu_idx.is_some() != sigma_idx.is_some() {
        return Err(Error::Data("`mu` and `sigma` columns must appear together".into()));
    }
    let feature_idx: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !RESERVED.contains(h))
        .map(|(i, _)| i)
        .collect();

    struct Row {
        line: u64,
        features: Vec<f64>,
        label: usize,
        label_true: Option<usize>,
        dist: Option<(f64, f64)>,
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line()) + comment_lines;
        let field = |i: usize| record.get(i).unwrap_or("");
        let err = |msg: String| Error::Data(format!("line {line}: {msg}"));
        let real = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| err(format!("`{}` is not a number", field(i))))
        };
        let label = field(label_idx)
            .parse::<usize>()
            .map_err(|_| err(format!("label `{}` is not a non-negative integer", field(label_idx))))?;
        let label_true = match true_idx.map(field).filter(|v| !v.is_empty()) {
            Some(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| err(format!("label_true `{v}` is not a non-negative integer")))?,
            ),
            None => None,
        };
        let features = feature_idx.iter().map(|&i| real(i)).collect::<Result<Vec<_>>>()?;
        let dist = match (mu_idx, sigma_idx) {
            (Some(m), Some(s)) => Some((real(m)?, real(s)?)),
            _ => None,
        };
        rows.push(Row {
            line,
            features,
            label,
            label_true,
            dist,
        });
    }

    let c = num_ranks.or(declared).unwrap_or_else(|| {
        rows.iter()
            .map(|r| r.label.max(r.label_true.unwrap_or(0)))
            .max()
            .map_or(2, |m| (m + 1).max(2))
    });
    let mut samples = Vec::with_capacity(rows.len());
    for (id, row) in rows.into_iter().enumerate() {
        for l in std::iter::once(row.label).chain(row.label_true) {
            if l >= c {
                return Err(Error::Data(format!(
                    "line {}: label {l} outside the rank range 0..{c}",
                    row.line
                )));
            }
        }
        let dist = match row.dist {
            Some((mu, sigma)) => LabelDistribution::new(mu, sigma, c),
            None => LabelDistribution::from_label(row.label, DEFAULT_STD_INIT, c),
        };
        samples.push(Sample {
            id,
            features: row.features,
            dist,
            label_original: row.label,
            label_true: row.label_true,
        });
    }
    let provenance = meta.get("provenance").copied().unwrap_or("").to_string();
    Dataset::new(samples, c, provenance)
}

/// Assignment of every sample to one of `k` folds.
///
/// Configuration `k` validates on fold `k` and trains on all other folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn from_assignment(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
        }
        if let Some(f) = assignment.iter().find(|f| **f >= k) {
            return Err(Error::InvalidConfig(format!("fold index {f} outside 0..{k}")));
        }
        Ok(FoldPlan { k, assignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn fold_of(&self, id: usize) -> usize {
        self.assignment[id]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Ids held out by configuration `fold`, ascending.
    pub fn valid_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Ids configuration `fold` trains on, ascending.
    pub fn train_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

fn shuffled_by_class(labels: &[usize], num_ranks: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); num_ranks];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }
    by_class
}

/// Stratified `k`-fold split on `label_original`.
///
/// Each class is shuffled and dealt round-robin, continuing from where the
/// previous class stopped, so per-class and total fold sizes differ by at most one.
pub fn split_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot split {} samples into {k} folds",
            dataset.len()
        )));
    }
    let mut assignment = vec![0; dataset.len()];
    let mut next = 0;
    for members in shuffled_by_class(&dataset.labels(), dataset.num_ranks(), seed) {
        for id in members {
            assignment[id] = next;
            next = (next + 1) % k;
        }
    }
    FoldPlan::from_assignment(k, assignment)
}

/// Stratified hold-out: returns `(train, test)` index lists, each ascending.
/// Every class contributes `round(fraction * n_c)` samples to the test side.
pub fn stratified_holdout(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in shuffled_by_class(&dataset.labels(), dataset.num_ranks(), seed) {
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_class(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|id| Sample {
                id,
                features: vec![id as f64],
                dist: LabelDistribution::from_label(0, DEFAULT_STD_INIT, 2),
                label_original: 0,
                label_true: None,
            })
            .collect();
        Dataset::new(samples, 2, "").unwrap()
    }

    #[test]
    fn synthetic_is_deterministic_with_exact_priors() {
        let spec = SyntheticSpec::imbalanced().with_seed(4);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), vec![40, 120, 400, 120, 40]);
        assert_eq!(a.feature_dim(), 4);
        assert_ne!(a, generate_synthetic(&spec.with_seed(5)).unwrap());
    }

    #[test]
    fn synthetic_rejects_bad_spec() {
        let mut spec = SyntheticSpec::default();
        spec.class_spread = 0.0;
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = SyntheticSpec::default();
        spec.n_per_class = ClassCounts::PerClass(vec![1, 2]);
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn minimal_csv() {
        let ds = parse_csv("x,label\n0.5,1\n-1.0,0\n", None).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_dim(), 1);
        assert_eq!(ds.labels(), vec![1, 0]);
        assert_eq!(ds.samples()[0].dist, LabelDistribution::new(1.0, DEFAULT_STD_INIT, 2));
    }

    #[test]
    fn csv_label_at_rank_count_is_rejected() {
        let err = parse_csv("x,label\n0.5,1\n-1.0,3\n", Some(3)).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn csv_non_integer_label() {
        let err = parse_csv("x,label\n0.5,1.5\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn csv_malformed_row_names_line() {
        let err = parse_csv("# num_ranks: 3\nx,label\n0.5,1\nabc,0\n", None).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        assert!(parse_csv("x,label\n0.5\n", None).is_err());
    }

    #[test]
    fn csv_round_trip_all_layouts() {
        let mut ds = generate_synthetic(&SyntheticSpec::default().with_seed(2)).unwrap();
        for layout in [CsvLayout::Plain, CsvLayout::Noisy, CsvLayout::Corrected] {
            let back = parse_csv(&ds.to_csv_string(layout), None).unwrap();
            assert_eq!(back, ds, "{layout:?}");
        }
        let dists: Vec<_> = (0..ds.len())
            .map(|i| LabelDistribution::new(i as f64 / 250.0, 0.3 + i as f64 / 1e4, 5))
            .collect();
        ds.set_distributions(&dists).unwrap();
        let back = parse_csv(&ds.to_csv_string(CsvLayout::Corrected), None).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn single_class_folds() {
        let plan = split_folds(&one_class(10), 5, 0).unwrap();
        for f in 0..5 {
            assert_eq!(plan.valid_ids(f).len(), 2);
            assert_eq!(plan.train_ids(f).len(), 8);
        }
    }

    #[test]
    fn two_class_folds_are_stratified() {
        let samples = (0..10)
            .map(|id| Sample {
                id,
                features: vec![0.0],
                dist: LabelDistribution::from_label(id % 2, 0.75, 2),
                label_original: id % 2,
                label_true: None,
            })
            .collect();
        let ds = Dataset::new(samples, 2, "").unwrap();
        let plan = split_folds(&ds, 5, 17).unwrap();
        for f in 0..5 {
            let ids = plan.valid_ids(f);
            assert_eq!(ids.len(), 2);
            assert_eq!(ids.iter().filter(|i| *i % 2 == 0).count(), 1);
        }
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(
            split_folds(&one_class(3), 4, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(split_folds(&one_class(3), 1, 0).is_err());
    }

    #[test]
    fn holdout_is_stratified() {
        let ds = generate_synthetic(&SyntheticSpec::imbalanced()).unwrap();
        let (train, test) = stratified_holdout(&ds, 0.2, 3).unwrap();
        assert_eq!(train.len() + test.len(), ds.len());
        let test_ds = ds.subset(&test).unwrap();
        assert_eq!(test_ds.class_counts(), vec![8, 24, 80, 24, 8]);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.relabel(&vec![0; b.len()], 0.75).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
