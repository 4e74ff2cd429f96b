mod common;

use std::io::Write;

use common::*;
use nem::datagen::{self, corpus_stats, CorpusSpec, Corruption, Regime, Vocabulary};
use nem::{Error, RelationCatalog};

#[test]
fn round_trip_plain_and_gzip() {
    let ds = small_dataset(4, 40, 1);
    let dir = tempfile::tempdir().unwrap();
    for name in ["d.jsonl", "d.jsonl.gz"] {
        let path = dir.path().join(name);
        datagen::save(&ds, &path).unwrap();
        let back = datagen::load(&path).unwrap();
        assert_eq!(back.catalog, ds.catalog);
        assert_eq!(back.bags, ds.bags);
    }
    let plain = std::fs::read(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(plain, datagen::to_jsonl_bytes(&ds).unwrap());
}

#[test]
fn writing_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ds = datagen::generate(&small_spec(4, 30, 2)).unwrap();
    let again = datagen::generate(&small_spec(4, 30, 2)).unwrap();
    for (i, d) in [&ds, &again].iter().enumerate() {
        datagen::save(d, &dir.path().join(format!("{i}.jsonl.gz"))).unwrap();
    }
    assert_eq!(
        std::fs::read(dir.path().join("0.jsonl.gz")).unwrap(),
        std::fs::read(dir.path().join("1.jsonl.gz")).unwrap()
    );
}

#[test]
fn truncated_file_names_the_line() {
    let ds = small_dataset(3, 5, 3);
    let bytes = datagen::to_jsonl_bytes(&ds).unwrap();
    let cut = bytes.len() - 20;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    std::fs::write(&path, &bytes[..cut]).unwrap();
    match datagen::load(&path) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 6),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn out_of_range_head_pos_names_the_bag() {
    let ds = small_dataset(3, 3, 4);
    let text = String::from_utf8(datagen::to_jsonl_bytes(&ds).unwrap()).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
    rec["sentences"][0]["head_pos"] = serde_json::json!(999);
    lines[2] = rec.to_string();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for l in &lines {
        writeln!(f, "{l}").unwrap();
    }
    let err = datagen::load(&path).unwrap_err();
    let id = ds.bags[1].id.clone();
    assert!(matches!(&err, Error::Validation { bag, .. } if *bag == id), "{err:?}");
}

#[test]
fn catalog_mismatch_is_detected() {
    let ds = small_dataset(3, 3, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    datagen::save(&ds, &path).unwrap();
    let other = RelationCatalog::synthetic(4).unwrap();
    assert!(matches!(
        datagen::load_with_catalog(&path, &other),
        Err(Error::CatalogMismatch { .. })
    ));
    assert!(datagen::load_with_catalog(&path, &ds.catalog).is_ok());
}

#[test]
fn flip_corpus_error_counts_match_binomial_expectation() {
    let spec = CorpusSpec {
        n_bags: 4000,
        ..small_spec(5, 4000, 6)
    };
    let ds = datagen::generate(&spec).unwrap();
    let stats = corpus_stats(&ds);
    let (_, wrong, missing) = stats.non_na_totals(ds.catalog.na_index());
    let trials = (5 * spec.n_bags) as f64;
    let expected = 0.1 * trials;
    let sigma = (trials * 0.1 * 0.9).sqrt();
    let got = (wrong + missing) as f64;
    assert!((got - expected).abs() <= 3.0 * sigma, "{got} vs {expected} ± {}", 3.0 * sigma);
}

/// A classifier that predicts exactly the relations whose trigger occurs in
/// some sentence recovers clean-regime labels almost perfectly.
#[test]
fn triggers_make_clean_data_separable() {
    for regime in [Regime::CleanSentenceCleanLabel, Regime::NoisySentenceCleanLabel] {
        let spec = CorpusSpec {
            regime,
            corruption: Corruption::None,
            ..small_spec(6, 500, 7)
        };
        let ds = datagen::generate(&spec).unwrap();
        let vocab = Vocabulary::build(&spec);
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for b in &ds.bags {
            let y = b.truth.as_ref().unwrap();
            let mut predicted = vec![false; ds.catalog.len()];
            for s in &b.sentences {
                for r in vocab.triggered(&s.tokens) {
                    predicted[r] = true;
                }
            }
            for r in ds.catalog.non_na() {
                match (predicted[r], y.get(r)) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
        }
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        assert!(2.0 * p * r / (p + r) > 0.95, "{regime:?}: P {p} R {r}");
    }
}
