//! Trains nEM and the baseline on the same corpus at several flip-noise
//! levels and prints a P/R/F1 table.
//!
//!     cargo run --release --example noise_sweep -- [seeds] [pf,pf,...] [--key value ...]

use std::time::Instant;

use nem::experiment::{parse_overrides, run_sweep, ExperimentConfig};

fn main() -> nem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let split = args.iter().position(|a| a.starts_with("--")).unwrap_or(args.len());
    let (positional, rest) = args.split_at(split);
    let mut value = serde_json::json!({ "seed": 7 });
    for (k, v) in parse_overrides(rest)? {
        nem::experiment::apply_override(&mut value, &k, &v)?;
    }
    let mut cfg = ExperimentConfig::from_value(value, &[])?;
    if let Some(s) = positional.first() {
        cfg.sweep.seeds = s.parse().expect("seed count");
    }
    if let Some(p) = positional.get(1) {
        cfg.sweep.pf_list = p.split(',').map(|x| x.parse().expect("noise level")).collect();
    }

    let started = Instant::now();
    let result = run_sweep(&cfg, |r| {
        let q = r
            .q_trajectory
            .as_ref()
            .map(|q| q.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        eprintln!(
            "[{:>6.1}s] pf {:.2} {:<8} run {}  F1 {:5.2}  noisy-label p {:.3}  original-label p {:.3}  q {q}",
            started.elapsed().as_secs_f64(),
            r.pf,
            r.mode.to_string(),
            r.run,
            r.metrics.f1,
            r.noisy_label_mean.unwrap_or(f64::NAN),
            r.original_label_mean.unwrap_or(f64::NAN),
        );
    })?;
    print!("{}", result.to_csv());
    Ok(())
}
