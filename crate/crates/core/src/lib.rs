//! Learning multi-label relation classifiers from bags of sentences whose
//! labels came from distant supervision and are therefore noisy.
//!
//! The observed labels `z` are modelled as the output of a per-relation noise
//! channel applied to latent true labels `y`, which a PCNN bag encoder
//! predicts from the sentences. Training alternates a closed-form posterior
//! update over `y` with a fixed number of Adadelta steps on the encoder.
//!
//! Module map:
//! - [`label_space`]: relation catalog and label vectors
//! - [`noise_channel`]: `p(z | y)` and the label corruption samplers
//! - [`encoder`]: PCNN sentence encoder, selectors, classifier head, gradients
//! - [`em`]: posterior, variational bound, Adadelta, EM and baseline trainers
//! - [`datagen`]: synthetic corpora, dataset files and corpus statistics
//! - [`eval`]: PR curves, P/R/F1, score histograms, label-probability curves
//! - [`experiment`]: config file handling and the commands behind the `nem` binary

pub mod datagen;
pub mod em;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod label_space;
pub mod noise_channel;
pub mod seed;

pub use error::{Error, Result};
pub use label_space::{LabelVector, RelationCatalog};
pub use noise_channel::NoiseChannel;

/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// `ln(max(p, PROB_FLOOR))`
#[inline]
pub fn floored_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}
