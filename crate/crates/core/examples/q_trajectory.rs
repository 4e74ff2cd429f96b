//! Follows the posterior over injected-noise labels through EM: starting
//! from Q = z, each E-step should pull those labels toward 0 while keeping
//! the clean ones near 1.

use nem::datagen::{self, CorpusSpec, Corruption};
use nem::em::{self, TrainConfig};
use nem::encoder::EncoderConfig;
use nem::eval::q_trajectory;
use nem::NoiseChannel;

fn main() -> nem::Result<()> {
    let spec = CorpusSpec {
        n_bags: 1000,
        corruption: Corruption::Flip { p_f: 0.1 },
        seed: 2,
        ..CorpusSpec::default()
    };
    let ds = datagen::generate(&spec)?;
    let cfg = TrainConfig {
        delta: 100,
        channel: NoiseChannel::uniform(ds.catalog.len(), 0.1, 0.1)?,
        convergence_tol: None,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = em::train_nem(&ds, EncoderConfig::desk_scale(), &cfg)?;

    println!("iter  bound before E  bound after E   mean Q noisy  mean Q clean");
    for t in &out.trace {
        println!(
            "{:>4}  {:>13.3}  {:>13.3}   {:>12.3}  {:>12.3}",
            t.iter,
            t.lower_bound_before_estep,
            t.lower_bound,
            t.mean_q_noisy.unwrap_or(f64::NAN),
            t.mean_q_clean.unwrap_or(f64::NAN)
        );
    }
    let q: Vec<String> = q_trajectory(&out.trace)?.iter().map(|x| format!("{x:.3}")).collect();
    println!("Q over injected noise: {}", q.join(" -> "));
    Ok(())
}
