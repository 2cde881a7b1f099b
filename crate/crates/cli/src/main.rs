//! Command-line runner for noisy-label ordinal experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use ordac::data::{generate_synthetic, load_csv, CsvLayout};
use ordac::experiment::{
    aggregate_runs, discover_runs, evaluate_checkpoints, run_checkpoints, run_to_dir, DatasetSource,
    ExperimentConfig, Method, OUTPUT_ROOT_ENV, TEST_FILE,
};
use ordac::noise::{inject_noise, NoiseMatrix, NoiseSummary};

#[derive(Parser)]
#[command(name = "ordac", version, about = "Adaptive correction of noisy ordinal labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured synthetic dataset as CSV.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV path.
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },
    /// Inject asymmetric ordinal noise into a dataset.
    Inject {
        #[command(flatten)]
        config: ConfigArgs,
        /// Dataset CSV; defaults to the config's dataset section.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Noise rate; overrides `noise.tau`.
        #[arg(long)]
        tau: Option<f64>,
        /// Output CSV path.
        #[arg(long, default_value = "noisy.csv")]
        out: PathBuf,
        /// Noise summary JSON path; defaults to the output path with a `.summary.json` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run methods end to end, one output directory per run.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Method to run; repeat the flag for several.
        #[arg(long = "method")]
        methods: Vec<Method>,
        /// Noise rate; repeat the flag for several.
        #[arg(long = "tau")]
        taus: Vec<f64>,
        /// Independent repetitions with derived seeds.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        /// Output directory; defaults to the config's `output_dir`, then `runs`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score checkpoints on a labeled dataset.
    Evaluate {
        /// Run directory; supplies checkpoints and the test split unless given.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Checkpoint files; their predictions are averaged.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Dataset CSV to score on.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Where to write the report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate run directories into a method-by-noise comparison table.
    Report {
        /// Run directories or parents to search.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Directory for report.csv and report.txt.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set correction.e_max=20`. Values parse as JSON, else as strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut value = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => serde_json::to_value(ExperimentConfig::default())?,
        };
        for item in &self.overrides {
            let (key, raw) = item
                .split_once('=')
                .with_context(|| format!("override `{item}` is not KEY=VALUE"))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut value, key, parsed)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).context("invalid config")?;
        Ok(cfg)
    }
}

fn set_path(root: &mut Value, key: &str, new: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            bail!("cannot set `{key}`: `{}` is not a section", parts[..i].join("."));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), new);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    bail!("empty override key")
}

/// Relative output paths live under `$ORDAC_OUTPUT_ROOT` when it is set.
fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate(config: &ConfigArgs, out: &Path) -> Result<()> {
    let cfg = config.load()?;
    let DatasetSource::Synthetic(spec) = &cfg.dataset else {
        bail!("generate needs a synthetic dataset section");
    };
    let ds = generate_synthetic(spec)?;
    let out = output_path(out);
    write_file(&out, &ds.to_csv_string(CsvLayout::Plain))?;
    println!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn inject(
    config: &ConfigArgs,
    input: Option<&Path>,
    tau: Option<f64>,
    out: &Path,
    summary: Option<&Path>,
) -> Result<()> {
    let mut cfg = config.load()?;
    if let Some(tau) = tau {
        cfg.noise.tau = tau;
    }
    let mut ds = match input {
        Some(path) => load_csv(path, None).with_context(|| format!("loading {}", path.display()))?,
        None => cfg.load_dataset()?,
    };
    ds.mark_labels_as_true();
    let clean = ds.true_labels().context("dataset has no labels")?;
    let matrix = NoiseMatrix::build(ds.num_ranks(), cfg.noise.tau, cfg.noise.sigma_n)?;
    let noisy = inject_noise(&clean, &matrix, cfg.noise.seed)?;
    ds.relabel(&noisy, cfg.correction.std_init)?;
    let report = NoiseSummary::from_labels(&clean, &noisy, &matrix, cfg.noise.seed);

    let out = output_path(out);
    let summary = match summary {
        Some(p) => output_path(p),
        None => out.with_extension("summary.json"),
    };
    write_file(&out, &ds.to_csv_string(CsvLayout::Noisy))?;
    write_file(&summary, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!(
        "flipped {} of {} labels (realized rate {:.4}, target {}); wrote {} and {}",
        report.flipped,
        report.n,
        report.realized_rate,
        report.tau,
        out.display(),
        summary.display()
    );
    Ok(())
}

fn tau_label(tau: f64) -> String {
    format!("tau_{tau}")
}

fn run(config: &ConfigArgs, methods: &[Method], taus: &[f64], repeats: u64, out: Option<&Path>) -> Result<()> {
    if repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let base = config.load()?;
    let methods = if methods.is_empty() { vec![base.method] } else { methods.to_vec() };
    let taus = if taus.is_empty() { vec![base.noise.tau] } else { taus.to_vec() };
    let root = output_path(
        out.or(base.output_dir.as_deref())
            .unwrap_or_else(|| Path::new("runs")),
    );
    let single = methods.len() == 1 && taus.len() == 1 && repeats == 1;

    for &method in &methods {
        for &tau in &taus {
            for r in 0..repeats {
                let mut cfg = base.clone();
                cfg.method = method;
                cfg.noise.tau = tau;
                let mut cfg = cfg.repeat(r);
                let dir = if single {
                    root.clone()
                } else {
                    root.join(method.as_str()).join(tau_label(tau)).join(format!("rep_{r}"))
                };
                cfg.output_dir = Some(dir.clone());
                let outcome = run_to_dir(&cfg, &dir).with_context(|| format!("run {}", dir.display()))?;
                println!(
                    "{method} tau={tau} rep={r}: macro-MAE {:.4}, macro-recall {:.4} -> {}",
                    outcome.eval.macro_mae,
                    outcome.eval.macro_recall,
                    dir.display()
                );
            }
        }
    }
    Ok(())
}

fn evaluate(run: Option<&Path>, checkpoints: &[PathBuf], data: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let checkpoints = match (checkpoints.is_empty(), run) {
        (false, _) => checkpoints.to_vec(),
        (true, Some(dir)) => run_checkpoints(dir)?,
        (true, None) => bail!("give --run or at least one --checkpoint"),
    };
    if checkpoints.is_empty() {
        bail!("no checkpoints found");
    }
    let data_path = match (data, run) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(dir)) => dir.join(TEST_FILE),
        (None, None) => bail!("give --data or --run"),
    };
    let ds = load_csv(&data_path, None).with_context(|| format!("loading {}", data_path.display()))?;
    let report = evaluate_checkpoints(&checkpoints, &ds)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(p) => {
            let p = output_path(p);
            write_file(&p, &json)?;
            println!(
                "macro-MAE {:.4}, macro-recall {:.4} over {} samples; wrote {}",
                report.macro_mae,
                report.macro_recall,
                ds.len(),
                p.display()
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn report(runs: &[PathBuf], out: &Path) -> Result<()> {
    let dirs = discover_runs(runs)?;
    let report = aggregate_runs(&dirs)?;
    let out = output_path(out);
    write_file(&out.join("report.csv"), &report.to_csv())?;
    let table = report.to_table();
    write_file(&out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => generate(&config, &out),
        Command::Inject {
            config,
            input,
            tau,
            out,
            summary,
        } => inject(&config, input.as_deref(), tau, &out, summary.as_deref()),
        Command::Run {
            config,
            methods,
            taus,
            repeats,
            out,
        } => run(&config, &methods, &taus, repeats, out.as_deref()),
        Command::Evaluate {
            run,
            checkpoints,
            data,
            out,
        } => evaluate(run.as_deref(), &checkpoints, data.as_deref(), out.as_deref()),
        Command::Report { runs, out } => report(&runs, &out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
