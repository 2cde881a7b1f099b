//! Declarative end-to-end runs.
//!
//! A run holds out a clean stratified test split, injects noise into the
//! remaining training pool, trains with the chosen method and scores the
//! result on the test split. Everything random is seeded from the config.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correction::{
    filter_uncertain, ordac_train, train_baseline, train_on_corrected, CorrectionParams, History,
    DEFAULT_FOLDS,
};
use crate::data::{
    generate_synthetic, load_csv, split_folds, stratified_holdout, CsvLayout, Dataset, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::label_dist::expected_rank;
use crate::metrics::{label_quality, EvalReport, LabelQuality};
use crate::model::{ensemble_predict, FitOptions, MlpRegressor, DEFAULT_BATCH_SIZE, DEFAULT_HIDDEN, DEFAULT_LR};
use crate::noise::{inject_noise, NoiseMatrix, NoiseSummary, DEFAULT_SIGMA_N};
use crate::seed::derive_seed;

/// Environment variable naming the root directory for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "ORDAC_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single fixed-form LDL model on the noisy labels.
    Baseline,
    /// K-fold cross-training with online correction; scored as the fold ensemble.
    Ordac,
    /// Fresh model retrained on the corrected labels.
    OrdacC,
    /// As `OrdacC`, after dropping samples whose sigma never fell below its start value.
    OrdacR,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Ordac, Method::OrdacC, Method::OrdacR];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Ordac => "ordac",
            Method::OrdacC => "ordac_c",
            Method::OrdacR => "ordac_r",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method `{s}` (expected one of baseline, ordac, ordac_c, ordac_r)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        #[serde(default)]
        num_ranks: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub tau: f64,
    pub sigma_n: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            tau: 0.0,
            sigma_n: DEFAULT_SIGMA_N,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: DEFAULT_HIDDEN,
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            lr: self.lr,
            batch_size: self.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig {
            k: DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

/// Everything a run needs. Serialized as the `--config` JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub split: SplitConfig,
    pub noise: NoiseConfig,
    pub method: Method,
    pub correction: CorrectionParams,
    pub model: ModelConfig,
    pub folds: FoldConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic(SyntheticSpec::default()),
            split: SplitConfig::default(),
            noise: NoiseConfig::default(),
            method: Method::Ordac,
            correction: CorrectionParams::default(),
            model: ModelConfig::default(),
            folds: FoldConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        // Plain data; serialization cannot fail.
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        self.correction.validate()?;
        self.model.fit_options().validate()?;
        if self.model.hidden == 0 {
            return Err(Error::InvalidConfig("model.hidden must be positive".into()));
        }
        if self.folds.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "folds.k must be at least 2, got {}",
                self.folds.k
            )));
        }
        if !(0.0..1.0).contains(&self.split.test_fraction) || self.split.test_fraction == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "split.test_fraction must lie in (0, 1), got {}",
                self.split.test_fraction
            )));
        }
        // Checks tau and sigma_n ranges.
        NoiseMatrix::build(2, self.noise.tau, self.noise.sigma_n)?;
        match &self.dataset {
            DatasetSource::Synthetic(spec) => spec.validate(),
            DatasetSource::Csv { path, .. } if !path.exists() => Err(Error::InvalidConfig(format!(
                "dataset file {} does not exist",
                path.display()
            ))),
            DatasetSource::Csv { .. } => Ok(()),
        }
    }

    /// The config for repetition `r`: every seed moved to an independent stream.
    pub fn repeat(&self, r: u64) -> Self {
        if r == 0 {
            return self.clone();
        }
        let mut cfg = self.clone();
        let bump = |s: &mut u64| *s = derive_seed(*s, r);
        if let DatasetSource::Synthetic(spec) = &mut cfg.dataset {
            bump(&mut spec.seed);
        }
        bump(&mut cfg.split.seed);
        bump(&mut cfg.noise.seed);
        bump(&mut cfg.model.seed);
        bump(&mut cfg.folds.seed);
        cfg
    }

    /// Seeds of every random draw, in a fixed order.
    pub fn seeds(&self) -> Seeds {
        Seeds {
            dataset: match &self.dataset {
                DatasetSource::Synthetic(spec) => Some(spec.seed),
                DatasetSource::Csv { .. } => None,
            },
            split: self.split.seed,
            noise: self.noise.seed,
            folds: self.folds.seed,
            model: self.model.seed,
        }
    }

    pub fn fold_model_seeds(&self) -> Vec<u64> {
        (0..self.folds.k as u64)
            .map(|k| derive_seed(self.model.seed, k))
            .collect()
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Synthetic(spec) => generate_synthetic(spec),
            DatasetSource::Csv { path, num_ranks } => load_csv(path, *num_ranks),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub dataset: Option<u64>,
    pub split: u64,
    pub noise: u64,
    pub folds: u64,
    pub model: u64,
}

/// The clean test split and noisy training pool of a run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub noise: NoiseSummary,
    pub dataset_fingerprint: String,
}

/// Splits off the clean test set and injects noise into the training pool.
/// Labels present before injection are taken as the truth.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let dataset = cfg.load_dataset()?;
    let dataset_fingerprint = dataset.fingerprint();
    let (train_idx, test_idx) = stratified_holdout(&dataset, cfg.split.test_fraction, cfg.split.seed)?;
    let test = dataset.subset(&test_idx)?;
    let mut train = dataset.subset(&train_idx)?;
    if test.is_empty() || train.is_empty() {
        return Err(Error::InvalidConfig(
            "test split leaves an empty train or test set".into(),
        ));
    }

    train.mark_labels_as_true();
    let clean = truth_labels(&train);
    let matrix = NoiseMatrix::build(train.num_ranks(), cfg.noise.tau, cfg.noise.sigma_n)?;
    let noisy = inject_noise(&clean, &matrix, cfg.noise.seed)?;
    train.relabel(&noisy, cfg.correction.std_init)?;
    let noise = NoiseSummary::from_labels(&clean, &noisy, &matrix, cfg.noise.seed);
    Ok(PreparedData {
        train,
        test,
        noise,
        dataset_fingerprint,
    })
}

/// In-memory result of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub models: Vec<MlpRegressor>,
    /// Training pool with the label distributions the final model(s) trained on.
    pub corrected: Dataset,
    pub history: Option<History>,
    pub removed_ids: Option<Vec<usize>>,
    pub eval: EvalReport,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub tau: f64,
    pub seeds: Seeds,
    pub dataset_fingerprint: String,
    pub n_train: usize,
    pub n_test: usize,
    pub noise: NoiseSummary,
    /// Quality of the noisy training labels against the truth.
    pub noisy_label_quality: Option<LabelQuality>,
    /// Quality of the corrected label means against the truth.
    pub corrected_label_quality: Option<LabelQuality>,
    pub removed: Option<usize>,
    pub macro_mae: f64,
    pub macro_recall: f64,
}

/// Truth for scoring: `label_true` where known, else the given label.
pub fn truth_labels(ds: &Dataset) -> Vec<usize> {
    ds.samples()
        .iter()
        .map(|s| s.label_true.unwrap_or(s.label_original))
        .collect()
}

/// Scores the mean prediction of `models` on `test`.
pub fn evaluate_models(models: &[MlpRegressor], test: &Dataset) -> Result<EvalReport> {
    let preds = test
        .samples()
        .iter()
        .map(|s| Ok(expected_rank(&ensemble_predict(models, &s.features)?)))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::compute(&preds, &truth_labels(test), test.num_ranks())
}

/// Runs the configured method end to end without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let train = &data.train;
    let template = MlpRegressor::new(
        train.feature_dim(),
        cfg.model.hidden,
        train.num_ranks(),
        cfg.model.seed,
    )?;
    let fit = cfg.model.fit_options();
    let params = &cfg.correction;

    let (models, corrected, history, removed_ids) = match cfg.method {
        Method::Baseline => {
            let model = train_baseline(train, params, &template, &fit, cfg.model.seed)?;
            (vec![model], train.clone(), None, None)
        }
        Method::Ordac | Method::OrdacC | Method::OrdacR => {
            let plan = split_folds(train, cfg.folds.k, cfg.folds.seed)?;
            let outcome = ordac_train(train, &plan, params, &template, &fit, &cfg.fold_model_seeds())?;
            match cfg.method {
                Method::OrdacC => {
                    let model = train_on_corrected(&outcome.clean, params, &template, &fit, cfg.model.seed)?;
                    (vec![model], outcome.clean, Some(outcome.history), None)
                }
                Method::OrdacR => {
                    let (kept, removed) = filter_uncertain(&outcome.clean, params.std_init)?;
                    if kept.is_empty() {
                        return Err(Error::Data(
                            "every sample was filtered as uncertain; nothing left to train on".into(),
                        ));
                    }
                    let model = train_on_corrected(&kept, params, &template, &fit, cfg.model.seed)?;
                    (vec![model], outcome.clean, Some(outcome.history), Some(removed))
                }
                _ => (outcome.models, outcome.clean, Some(outcome.history), None),
            }
        }
    };

    let eval = evaluate_models(&models, &data.test)?;
    let quality = |values: Vec<f64>| -> Result<Option<LabelQuality>> {
        train
            .true_labels()
            .map(|truth| label_quality(&values, &truth))
            .transpose()
    };
    let noisy_label_quality = quality(train.labels().iter().map(|&l| l as f64).collect())?;
    let corrected_label_quality = quality(corrected.samples().iter().map(|s| s.dist.mu).collect())?;
    let summary = RunSummary {
        method: cfg.method,
        tau: cfg.noise.tau,
        seeds: cfg.seeds(),
        dataset_fingerprint: data.dataset_fingerprint.clone(),
        n_train: train.len(),
        n_test: data.test.len(),
        noise: data.noise.clone(),
        noisy_label_quality,
        corrected_label_quality,
        removed: removed_ids.as_ref().map(Vec::len),
        macro_mae: eval.macro_mae,
        macro_recall: eval.macro_recall,
    };
    Ok(RunOutcome {
        models,
        corrected,
        history,
        removed_ids,
        eval,
        summary,
    })
}

pub const CONFIG_FILE: &str = "config.json";
pub const EVAL_FILE: &str = "eval.json";
pub const EVAL_CSV_FILE: &str = "eval.csv";
pub const CORRECTED_FILE: &str = "corrected.csv";
pub const TRAIN_FILE: &str = "train_noisy.csv";
pub const TEST_FILE: &str = "test.csv";
pub const HISTORY_FILE: &str = "history.json";
pub const REMOVED_FILE: &str = "removed_ids.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub method: Method,
    pub seeds: Seeds,
    pub dataset_fingerprint: String,
    /// File name to SHA-256 of its contents.
    pub artifacts: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Runs `cfg` and writes every artifact into `out_dir`.
///
/// The run directory ends up with the config copy, the clean test split, the
/// noisy training pool, corrected labels, checkpoints, history (correction
/// methods only), the evaluation report and a manifest hashing each file.
/// Every artifact is read back and checked against its hash before returning.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    let data = prepare_data(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut files: Vec<(String, String)> = vec![
        (CONFIG_FILE.into(), cfg.to_json()),
        (TEST_FILE.into(), data.test.to_csv_string(CsvLayout::Plain)),
        (TRAIN_FILE.into(), data.train.to_csv_string(CsvLayout::Noisy)),
        (CORRECTED_FILE.into(), outcome.corrected.to_csv_string(CsvLayout::Corrected)),
        (EVAL_FILE.into(), json_pretty(&outcome.eval)?),
        (
            EVAL_CSV_FILE.into(),
            format!(
                "{}\n{}\n",
                EvalReport::csv_header(data.test.num_ranks()),
                outcome.eval.csv_row()
            ),
        ),
        (SUMMARY_FILE.into(), json_pretty(&outcome.summary)?),
    ];
    for (k, model) in outcome.models.iter().enumerate() {
        let name = if outcome.models.len() == 1 {
            "model.ckpt".to_string()
        } else {
            format!("model_{k}.ckpt")
        };
        files.push((name, model.to_checkpoint()));
    }
    if let Some(history) = &outcome.history {
        files.push((HISTORY_FILE.into(), json_pretty(history)?));
    }
    if let Some(removed) = &outcome.removed_ids {
        files.push((REMOVED_FILE.into(), json_pretty(removed)?));
    }

    let mut artifacts = BTreeMap::new();
    for (name, contents) in &files {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        artifacts.insert(name.clone(), sha256_hex(contents.as_bytes()));
    }
    let manifest = Manifest {
        method: cfg.method,
        seeds: cfg.seeds(),
        dataset_fingerprint: data.dataset_fingerprint,
        artifacts,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, json_pretty(&manifest)?).map_err(|e| Error::io(&manifest_path, e))?;
    verify_run_dir(out_dir)?;
    Ok(outcome)
}

/// Re-hashes every artifact listed in the run directory's manifest.
pub fn verify_run_dir(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    for (name, digest) in &manifest.artifacts {
        let p = dir.join(name);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if &sha256_hex(&bytes) != digest {
            return Err(Error::Data(format!("artifact {} does not match its manifest hash", p.display())));
        }
    }
    Ok(manifest)
}

/// Loads checkpoints and scores their mean prediction on a dataset.
pub fn evaluate_checkpoints(checkpoints: &[PathBuf], data: &Dataset) -> Result<EvalReport> {
    let models = checkpoints
        .iter()
        .map(|p| MlpRegressor::load(p))
        .collect::<Result<Vec<_>>>()?;
    if models.is_empty() {
        return Err(Error::InvalidConfig("no checkpoints given".into()));
    }
    evaluate_models(&models, data)
}

/// Checkpoint files in a run directory, in name order.
pub fn run_checkpoints(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "ckpt"))
        .collect();
    found.sort();
    Ok(found)
}

/// One line of the comparison table: a method at a noise rate, over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub tau: f64,
    pub n_runs: usize,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Finds run directories (those holding a manifest) under each path.
pub fn discover_runs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        if dir.join(MANIFEST_FILE).is_file() {
            out.push(dir.to_path_buf());
            return Ok(());
        }
        let mut children: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        children.sort();
        for child in children {
            walk(&child, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if !p.is_dir() {
            return Err(Error::InvalidConfig(format!("{} is not a directory", p.display())));
        }
        walk(p, &mut out)?;
    }
    Ok(out)
}

/// Aggregates run directories into mean and std per `(method, tau)`.
///
/// Two runs with the same config apart from the output directory are a seed
/// collision and rejected, since they would be counted twice.
pub fn aggregate_runs(run_dirs: &[PathBuf]) -> Result<Report> {
    if run_dirs.is_empty() {
        return Err(Error::InvalidConfig("no run directories to report on".into()));
    }
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut groups: BTreeMap<(Method, u64), Vec<EvalReport>> = BTreeMap::new();
    let mut taus: BTreeMap<u64, f64> = BTreeMap::new();
    for dir in run_dirs {
        verify_run_dir(dir)?;
        let mut cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        cfg.output_dir = None;
        let key = cfg.to_json();
        if let Some(prev) = seen.insert(key, dir.clone()) {
            return Err(Error::InvalidConfig(format!(
                "seed collision: {} and {} are the same run",
                prev.display(),
                dir.display()
            )));
        }
        let eval_path = dir.join(EVAL_FILE);
        let text = std::fs::read_to_string(&eval_path).map_err(|e| Error::io(&eval_path, e))?;
        let eval: EvalReport = serde_json::from_str(&text)?;
        let tau_key = cfg.noise.tau.to_bits();
        taus.insert(tau_key, cfg.noise.tau);
        groups.entry((cfg.method, tau_key)).or_default().push(eval);
    }
    let mut rows: Vec<ReportRow> = groups
        .into_iter()
        .map(|((method, tau_key), evals)| {
            let maes: Vec<f64> = evals.iter().map(|e| e.macro_mae).collect();
            let recalls: Vec<f64> = evals.iter().map(|e| e.macro_recall).collect();
            let (mae_mean, mae_std) = mean_std(&maes);
            let (recall_mean, recall_std) = mean_std(&recalls);
            ReportRow {
                method,
                tau: taus[&tau_key],
                n_runs: evals.len(),
                mae_mean,
                mae_std,
                recall_mean,
                recall_std,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.tau.total_cmp(&b.tau)));
    Ok(Report { rows })
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,tau,n_runs,mae_mean,mae_std,recall_mean,recall_std\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                r.method, r.tau, r.n_runs, r.mae_mean, r.mae_std, r.recall_mean, r.recall_std
            );
        }
        out
    }

    /// Methods as columns, one `(tau, metric)` pair per line.
    pub fn to_table(&self) -> String {
        let methods: Vec<Method> = Method::ALL
            .into_iter()
            .filter(|m| self.rows.iter().any(|r| r.method == *m))
            .collect();
        let mut taus: Vec<f64> = self.rows.iter().map(|r| r.tau).collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let mut out = format!("{:>6}  {:<6}", "tau", "metric");
        for m in &methods {
            let _ = write!(out, "  {:>19}", m.as_str());
        }
        out.push('\n');
        for tau in taus {
            for metric in ["MAE", "REC"] {
                let _ = write!(out, "{tau:>6.2}  {metric:<6}");
                for m in &methods {
                    let cell = self
                        .rows
                        .iter()
                        .find(|r| r.method == *m && r.tau == tau)
                        .map(|r| {
                            let (mean, std) = if metric == "MAE" {
                                (r.mae_mean, r.mae_std)
                            } else {
                                (r.recall_mean, r.recall_std)
                            };
                            format!("{mean:.4} ± {std:.4}")
                        })
                        .unwrap_or_else(|| "-".into());
                    let _ = write!(out, "  {cell:>19}");
                }
                out.push('\n');
            }
        }
        out
    }
}
