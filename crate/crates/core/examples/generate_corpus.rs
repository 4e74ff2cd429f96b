//! Generates a synthetic train/test corpus and prints its label statistics.
//!
//!     cargo run --release --example generate_corpus -- [out_dir] [regime] [p_f]
//!
//! `regime` is one of CSCL, NSCL, CSNL, NSNL (default NSNL); `p_f` is the
//! flip probability applied to the training labels (default 0.1).

use std::path::PathBuf;

use nem::datagen::{self, corpus_stats, CorpusSpec, Corruption, Regime};

fn main() -> nem::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/corpus".into()));
    let regime: Regime = serde_json::from_value(serde_json::Value::String(
        args.next().unwrap_or_else(|| "NSNL".into()),
    ))?;
    let p_f: f64 = args.next().map_or(0.1, |s| s.parse().expect("p_f"));

    let spec = CorpusSpec {
        regime,
        corruption: if regime.noisy_labels() { Corruption::Flip { p_f } } else { Corruption::None },
        seed: 1,
        ..CorpusSpec::default()
    };
    let split = datagen::generate_split(&CorpusSpec {
        corruption: Corruption::None,
        ..spec.clone()
    })?;
    let train = datagen::corrupt_dataset(&split.train, &spec.corruption, spec.seed)?;

    std::fs::create_dir_all(&out).map_err(|e| nem::Error::io(&out, e))?;
    datagen::save(&train, &out.join("train.jsonl.gz"))?;
    datagen::save(&split.test, &out.join("test.jsonl.gz"))?;

    let stats = corpus_stats(&train);
    println!("{} bags, {} sentences ({regime:?}, p_f = {p_f})", stats.bags, stats.sentences);
    println!("{:<6} {:>8} {:>6} {:>8} {:>6} {:>8}", "rel", "observed", "true", "correct", "wrong", "missing");
    for r in &stats.relations {
        println!(
            "{:<6} {:>8} {:>6} {:>8} {:>6} {:>8}",
            r.relation, r.observed_bags, r.true_bags, r.correct, r.wrong, r.missing
        );
    }
    let (c, w, m) = stats.non_na_totals(train.catalog.na_index());
    println!("non-NA labels: {c} correct, {w} wrong, {m} missing");
    println!("wrote {}", out.display());
    Ok(())
}
