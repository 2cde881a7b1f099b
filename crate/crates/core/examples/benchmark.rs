//! Paired runs of every method on the synthetic benchmark.
//!
//! `cargo run --release -p ordac --example benchmark -- [tau] [repeats] [imbalanced]`

use ordac::data::SyntheticSpec;
use ordac::experiment::{execute, DatasetSource, ExperimentConfig, Method};

fn main() -> ordac::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tau: f64 = args.first().and_then(|a| a.parse().ok()).unwrap_or(0.4);
    let repeats: u64 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let imbalanced = args.get(2).is_some_and(|a| a == "imbalanced");

    let mut base = ExperimentConfig::default();
    base.noise.tau = tau;
    if imbalanced {
        base.dataset = DatasetSource::Synthetic(SyntheticSpec::imbalanced());
    }
    println!("rep  method    macro_mae  recall  label_mae(noisy->corrected)");
    for r in 0..repeats {
        for method in Method::ALL {
            let mut cfg = base.repeat(r);
            cfg.method = method;
            let out = execute(&cfg)?;
            let lq = match (out.summary.noisy_label_quality, out.summary.corrected_label_quality) {
                (Some(a), Some(b)) => format!("{:.4} -> {:.4}", a.mae, b.mae),
                _ => "-".into(),
            };
            println!(
                "{r:>3}  {:<8}  {:.4}     {:.4}  {lq}",
                method.as_str(),
                out.eval.macro_mae,
                out.eval.macro_recall
            );
        }
    }
    Ok(())
}
