#![allow(dead_code)]

use nem::datagen::{self, CorpusSpec, Corruption, Dataset, Regime};
use nem::em::TrainConfig;
use nem::encoder::{EncoderConfig, Selector};
use nem::{LabelVector, NoiseChannel, RelationCatalog};
use rand::Rng;

pub fn small_spec(relations: usize, n_bags: usize, seed: u64) -> CorpusSpec {
    CorpusSpec {
        catalog: RelationCatalog::synthetic(relations).unwrap(),
        vocab_size: 60,
        n_bags,
        test_bags: 0,
        sentences_per_bag: [1, 3],
        regime: Regime::NoisySentenceNoisyLabel,
        corruption: Corruption::Flip { p_f: 0.1 },
        seed,
        max_len: 20,
        ..CorpusSpec::default()
    }
}

pub fn small_dataset(relations: usize, n_bags: usize, seed: u64) -> Dataset {
    datagen::generate(&small_spec(relations, n_bags, seed)).unwrap()
}

pub fn tiny_encoder() -> EncoderConfig {
    EncoderConfig {
        vocab_size: 60,
        word_dim: 6,
        pos_dim: 2,
        max_len: 20,
        window: 3,
        kernels: 6,
        n_relations: 0,
        dropout: 0.2,
    }
}

pub fn quick_train(channel: NoiseChannel, seed: u64) -> TrainConfig {
    TrainConfig {
        selector: Selector::Attention,
        delta: 20,
        em_iters: 10,
        batch_size: 16,
        channel,
        seed,
        convergence_tol: None,
        ..TrainConfig::default()
    }
}

/// Random channel with every entry strictly inside (0, 1).
pub fn random_channel(rng: &mut impl Rng, n: usize) -> NoiseChannel {
    NoiseChannel::new(
        (0..n).map(|_| rng.gen_range(0.01..0.99)).collect(),
        (0..n).map(|_| rng.gen_range(0.01..0.99)).collect(),
    )
    .unwrap()
}

pub fn random_prior(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.01..0.99)).collect()
}

pub fn random_z(rng: &mut impl Rng, n: usize) -> LabelVector {
    LabelVector::from_bits((0..n).map(|_| rng.gen_bool(0.5)).collect())
}
