//! Trains nEM and the plain baseline on the same flip-noise corpus and
//! compares them on clean test labels.
//!
//!     cargo run --release --example train_compare -- [p_f] [selector]

use nem::datagen::{self, CorpusSpec, Corruption};
use nem::em::{self, TrainConfig};
use nem::encoder::{EncoderConfig, Selector};
use nem::eval;
use nem::NoiseChannel;

fn main() -> nem::Result<()> {
    let mut args = std::env::args().skip(1);
    let p_f: f64 = args.next().map_or(0.1, |s| s.parse().expect("p_f"));
    let selector: Selector = args.next().map_or(Ok(Selector::Attention), |s| s.parse())?;

    let spec = CorpusSpec {
        seed: 5,
        ..CorpusSpec::default()
    };
    let split = datagen::generate_split(&spec)?;
    let train = datagen::corrupt_dataset(&split.train, &Corruption::Flip { p_f }, 6)?;

    let cfg = TrainConfig {
        selector,
        delta: 100,
        channel: NoiseChannel::uniform(train.catalog.len(), 0.1, 0.1)?,
        seed: 7,
        ..TrainConfig::default()
    };
    let encoder = EncoderConfig {
        vocab_size: spec.vocab_size,
        ..EncoderConfig::desk_scale()
    };

    println!("p_f = {p_f}, selector = {selector}");
    for (name, out) in [
        ("baseline", em::train_baseline(&train, encoder, &cfg)?),
        ("nEM", em::train_nem(&train, encoder, &cfg)?),
    ] {
        let report = eval::evaluate(&out.params, &split.test, selector, 0.5)?;
        let m = report.metrics;
        let scores = eval::score_dataset(&out.params, &train, selector)?;
        let train_probs = eval::label_probability_curves(&train, &scores)?;
        println!(
            "{name:<9} test P {:6.2}  R {:6.2}  F1 {:6.2} | {} iterations | train p(noisy label) {:.3}, p(true label) {:.3}",
            m.precision,
            m.recall,
            m.f1,
            out.trace.len(),
            train_probs.noisy_label_mean.unwrap_or(f64::NAN),
            train_probs.true_label_mean.unwrap_or(f64::NAN),
        );
        println!("          test score bins on true labels {:?}", report.score_bins);
    }
    Ok(())
}
