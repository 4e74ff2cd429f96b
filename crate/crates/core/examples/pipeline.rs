//! The library calls behind the `nem` binary: generate, train, predict and
//! evaluate from one experiment config, writing every artifact under a
//! directory.
//!
//!     cargo run --release --example pipeline -- [out_dir] [--key value ...]

use std::path::PathBuf;

use nem::em::TrainMode;
use nem::experiment::{self, apply_override, parse_overrides, ExperimentConfig};

fn main() -> nem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (dir, rest) = match args.first() {
        Some(a) if !a.starts_with("--") => (PathBuf::from(a), &args[1..]),
        _ => (PathBuf::from("out/pipeline"), &args[..]),
    };
    let mut value = serde_json::json!({
        "seed": 42,
        "paths": {
            "data_dir": dir.join("data"),
            "checkpoint": dir.join("model.json"),
            "trace": dir.join("trace.jsonl"),
            "report_dir": dir.join("report"),
            "predictions": dir.join("predictions.jsonl"),
            "sweep_csv": dir.join("sweep.csv"),
        },
    });
    for (k, v) in parse_overrides(rest)? {
        apply_override(&mut value, &k, &v)?;
    }
    let cfg = ExperimentConfig::from_value(value, &[])?;

    let stats = experiment::cmd_generate(&cfg)?;
    println!("generated {} train / {} test bags", stats.train.bags, stats.test.bags);
    let out = experiment::cmd_train(&cfg, TrainMode::Nem, None)?;
    println!("trained {} EM iterations", out.trace.len());
    print!("{}", experiment::cmd_trace(&cfg.paths.trace)?);
    let preds = experiment::cmd_predict(&cfg, None)?;
    println!("scored {} test bags", preds.len());
    let report = experiment::cmd_eval(&cfg, None)?;
    println!(
        "test P {:.2} R {:.2} F1 {:.2}; report in {}",
        report.metrics.precision,
        report.metrics.recall,
        report.metrics.f1,
        cfg.paths.report_dir.display()
    );
    Ok(())
}
