use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::label_space::RelationCatalog;
use crate::seed;

/// Encoder hyperparameters. The relation embedding width is always
/// `3 * kernels` so that it matches the pooled sentence vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub word_dim: usize,
    pub pos_dim: usize,
    pub max_len: usize,
    pub window: usize,
    pub kernels: usize,
    pub n_relations: usize,
    pub dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            vocab_size: 0,
            word_dim: 50,
            pos_dim: 5,
            max_len: super::DEFAULT_MAX_LEN,
            window: 3,
            kernels: 230,
            n_relations: 0,
            dropout: 0.5,
        }
    }
}

impl EncoderConfig {
    /// Smaller widths that keep a full sweep within minutes on one core.
    pub fn desk_scale() -> Self {
        EncoderConfig {
            word_dim: 16,
            pos_dim: 4,
            window: 3,
            kernels: 24,
            ..Self::default()
        }
    }

    /// Token row width `d_w + 2 d_p`.
    pub fn token_dim(&self) -> usize {
        self.word_dim + 2 * self.pos_dim
    }

    /// Sentence vector width `3 * l_ker`, also the relation embedding width.
    pub fn sentence_dim(&self) -> usize {
        3 * self.kernels
    }

    pub fn pos_rows(&self) -> usize {
        2 * self.max_len + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("encoder: {m}")));
        if self.vocab_size == 0 {
            return bad("vocab_size must be positive");
        }
        if self.n_relations < 2 {
            return bad("need at least two relations");
        }
        if self.word_dim == 0 || self.window == 0 || self.kernels == 0 || self.max_len == 0 {
            return bad("word_dim, window, kernels and max_len must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Every trainable tensor. Gradients share the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensors {
    pub word_emb: Matrix,
    pub pos_head: Matrix,
    pub pos_tail: Matrix,
    /// One row per kernel, `window * token_dim` wide (window rows concatenated).
    pub kernels: Matrix,
    pub conv_bias: Matrix,
    pub rel_emb: Matrix,
    pub head_bias: Matrix,
    /// Diagonal of the attention matrix.
    pub attn: Matrix,
}

pub type Gradients = Tensors;

pub const TENSOR_NAMES: [&str; 8] = [
    "word_emb",
    "pos_head",
    "pos_tail",
    "kernels",
    "conv_bias",
    "rel_emb",
    "head_bias",
    "attn",
];

impl Tensors {
    pub fn zeros(cfg: &EncoderConfig) -> Self {
        let d = cfg.sentence_dim();
        Tensors {
            word_emb: Matrix::zeros(cfg.vocab_size, cfg.word_dim),
            pos_head: Matrix::zeros(cfg.pos_rows(), cfg.pos_dim),
            pos_tail: Matrix::zeros(cfg.pos_rows(), cfg.pos_dim),
            kernels: Matrix::zeros(cfg.kernels, cfg.window * cfg.token_dim()),
            conv_bias: Matrix::zeros(1, cfg.kernels),
            rel_emb: Matrix::zeros(cfg.n_relations, d),
            head_bias: Matrix::zeros(1, cfg.n_relations),
            attn: Matrix::zeros(1, d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut t = self.clone();
        t.fill(0.0);
        t
    }

    pub fn fill(&mut self, v: f64) {
        for m in self.iter_mut() {
            m.data.fill(v);
        }
    }

    pub fn iter(&self) -> [&Matrix; 8] {
        [
            &self.word_emb,
            &self.pos_head,
            &self.pos_tail,
            &self.kernels,
            &self.conv_bias,
            &self.rel_emb,
            &self.head_bias,
            &self.attn,
        ]
    }

    pub fn iter_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.word_emb,
            &mut self.pos_head,
            &mut self.pos_tail,
            &mut self.kernels,
            &mut self.conv_bias,
            &mut self.rel_emb,
            &mut self.head_bias,
            &mut self.attn,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Matrix)> {
        TENSOR_NAMES.into_iter().zip(self.iter())
    }

    pub fn num_params(&self) -> usize {
        self.iter().iter().map(|m| m.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.iter().iter().all(|m| m.data.iter().all(|x| x.is_finite()))
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &Tensors) {
        for (a, b) in self.iter_mut().into_iter().zip(other.iter()) {
            super::matrix::axpy(alpha, &b.data, &mut a.data);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub weights: Tensors,
}

fn glorot(m: &mut Matrix, rng: &mut impl Rng) {
    let bound = (6.0 / (m.rows + m.cols) as f64).sqrt();
    for x in &mut m.data {
        *x = rng.gen_range(-bound..=bound);
    }
}

impl EncoderParams {
    /// Glorot-uniform embeddings, kernels and relation embeddings; zero
    /// biases; identity attention diagonal. Deterministic in `seed`.
    pub fn init(config: EncoderConfig, rng_seed: u64) -> Result<Self> {
        config.validate()?;
        let mut w = Tensors::zeros(&config);
        for (i, m) in [
            &mut w.word_emb,
            &mut w.pos_head,
            &mut w.pos_tail,
            &mut w.kernels,
            &mut w.rel_emb,
        ]
        .into_iter()
        .enumerate()
        {
            let mut rng = seed::rng(seed::child(rng_seed, i as u64));
            glorot(m, &mut rng);
        }
        w.attn.data.fill(1.0);
        Ok(EncoderParams { config, weights: w })
    }

    pub fn save(&self, path: &Path, catalog: &RelationCatalog) -> Result<()> {
        let bytes = self.to_checkpoint_bytes(catalog)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn to_checkpoint_bytes(&self, catalog: &RelationCatalog) -> Result<Vec<u8>> {
        if catalog.len() != self.config.n_relations {
            return Err(Error::ShapeMismatch(format!(
                "catalog has {} relations, parameters have {}",
                catalog.len(),
                self.config.n_relations
            )));
        }
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            catalog_hash: catalog.hash(),
            config: self.config,
            tensors: self
                .weights
                .named()
                .map(|(name, m)| TensorRecord {
                    name: name.into(),
                    shape: [m.rows, m.cols],
                    data: m.data.clone(),
                })
                .collect(),
        };
        let mut out = serde_json::to_vec(&ck)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Loads a checkpoint, rejecting a different catalog or any tensor whose
    /// shape disagrees with the stored config.
    pub fn load(path: &Path, catalog: &RelationCatalog) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_bytes(&bytes, catalog)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8], catalog: &RelationCatalog) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(bytes)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let expected = catalog.hash();
        if ck.catalog_hash != expected {
            return Err(Error::CatalogMismatch {
                expected,
                found: ck.catalog_hash,
            });
        }
        ck.config.validate()?;
        let mut weights = Tensors::zeros(&ck.config);
        if ck.tensors.len() != TENSOR_NAMES.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                TENSOR_NAMES.len(),
                ck.tensors.len()
            )));
        }
        for ((name, slot), rec) in TENSOR_NAMES
            .iter()
            .zip(weights.iter_mut())
            .zip(ck.tensors)
        {
            if rec.name != *name
                || rec.shape != [slot.rows, slot.cols]
                || rec.data.len() != slot.len()
            {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {} has shape {:?}, expected {name} with shape {:?}",
                    rec.name,
                    rec.shape,
                    [slot.rows, slot.cols]
                )));
            }
            slot.data = rec.data;
        }
        Ok(EncoderParams {
            config: ck.config,
            weights,
        })
    }
}

const CHECKPOINT_FORMAT: &str = "nem-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    catalog_hash: String,
    config: EncoderConfig,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}
