//! The individual stages of the bag encoder, each usable on its own.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bag::Sentence;
use super::matrix::{dot, Matrix};
use super::params::EncoderParams;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Mean,
    Max,
    Attention,
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Selector::Mean),
            "max" => Ok(Selector::Max),
            "attention" | "att" => Ok(Selector::Attention),
            _ => Err(Error::Config(format!("unknown selector {s:?}"))),
        }
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selector::Mean => "mean",
            Selector::Max => "max",
            Selector::Attention => "attention",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active.
    Train,
    Eval,
}

/// A bag vector shared by all relations (mean/max) or one per relation
/// (attention).
#[derive(Debug, Clone, PartialEq)]
pub enum BagEncoding {
    Shared(Vec<f64>),
    PerRelation(Matrix),
}

impl BagEncoding {
    pub fn for_relation(&self, r: usize) -> &[f64] {
        match self {
            BagEncoding::Shared(x) => x,
            BagEncoding::PerRelation(m) => m.row(r),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BagEncoding::Shared(x) => x.len(),
            BagEncoding::PerRelation(m) => m.cols,
        }
    }
}

/// Row index into a position table for token `j` relative to an entity at
/// `entity`, clipped to `[-max_len, max_len]`.
#[inline]
pub fn position_row(j: usize, entity: usize, max_len: usize) -> usize {
    let l = max_len as isize;
    ((j as isize - entity as isize).clamp(-l, l) + l) as usize
}

/// `m x (d_w + 2 d_p)`: word embedding, then position-to-head, then
/// position-to-tail, per token.
pub fn embed_sentence(params: &EncoderParams, s: &Sentence) -> Result<Matrix> {
    let cfg = &params.config;
    let w = &params.weights;
    s.validate(cfg.max_len).map_err(Error::Dimension)?;
    let mut out = Matrix::zeros(s.len(), cfg.token_dim());
    for (j, &tok) in s.tokens.iter().enumerate() {
        if tok >= cfg.vocab_size {
            return Err(Error::OutOfVocabulary {
                token: tok,
                vocab: cfg.vocab_size,
            });
        }
        let row = out.row_mut(j);
        let (word, pos) = row.split_at_mut(cfg.word_dim);
        let (ph, pt) = pos.split_at_mut(cfg.pos_dim);
        word.copy_from_slice(w.word_emb.row(tok));
        ph.copy_from_slice(w.pos_head.row(position_row(j, s.head_pos, cfg.max_len)));
        pt.copy_from_slice(w.pos_tail.row(position_row(j, s.tail_pos, cfg.max_len)));
    }
    Ok(out)
}

/// Token index covered by row `w` of the window ending at column `col`, if it
/// falls inside the sentence.
#[inline]
pub(crate) fn window_token(col: usize, w: usize, window: usize, m: usize) -> Option<usize> {
    let t = col + w;
    (t >= window - 1 && t - (window - 1) < m).then(|| t - (window - 1))
}

/// Kernel `i` applied to the window ending at column `col`, plus its bias.
#[inline]
pub(crate) fn conv_at(params: &EncoderParams, e: &Matrix, i: usize, col: usize) -> f64 {
    let cfg = &params.config;
    let d_e = cfg.token_dim();
    let k = params.weights.kernels.row(i);
    let mut acc = params.weights.conv_bias.data[i];
    for w in 0..cfg.window {
        if let Some(t) = window_token(col, w, cfg.window, e.rows) {
            acc += dot(&k[w * d_e..(w + 1) * d_e], e.row(t));
        }
    }
    acc
}

/// Wide convolution: `l_ker x (m + l_win - 1)`, out-of-sentence window rows
/// contribute zero.
pub fn convolve(params: &EncoderParams, e: &Matrix) -> Matrix {
    let cfg = &params.config;
    let cols = e.rows + cfg.window - 1;
    let mut u = Matrix::zeros(cfg.kernels, cols);
    for i in 0..cfg.kernels {
        for col in 0..cols {
            u.set(i, col, conv_at(params, e, i, col));
        }
    }
    u
}

/// Pooling segment (0 left, 1 middle, 2 right) of convolution column `col`.
///
/// A column is placed by the token at the centre of its window: at or
/// before the first entity is left, strictly between the entities is
/// middle, at or after the second entity is right.
#[inline]
pub fn segment_of(col: usize, s: &Sentence, window: usize) -> usize {
    let centre = col as isize - ((window - 1) / 2) as isize;
    let first = s.head_pos.min(s.tail_pos) as isize;
    let second = s.head_pos.max(s.tail_pos) as isize;
    if centre <= first {
        0
    } else if centre < second {
        1
    } else {
        2
    }
}

/// Per-kernel, per-segment maximum plus the winning column. The output is
/// laid out `[g1 (all kernels), g2, g3]`; an empty segment pools to 0 and
/// has no winner.
pub(crate) fn pool_with_argmax(
    u: &Matrix,
    s: &Sentence,
    window: usize,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let k = u.rows;
    let mut g = vec![f64::NEG_INFINITY; 3 * k];
    let mut arg = vec![None; 3 * k];
    for col in 0..u.cols {
        let seg = segment_of(col, s, window);
        for i in 0..k {
            let v = u.get(i, col);
            let slot = seg * k + i;
            if arg[slot].is_none() || v > g[slot] {
                g[slot] = v;
                arg[slot] = Some(col);
            }
        }
    }
    for (gi, a) in g.iter_mut().zip(&arg) {
        if a.is_none() {
            *gi = 0.0;
        }
    }
    (g, arg)
}

pub fn piecewise_maxpool(u: &Matrix, s: &Sentence, window: usize) -> Vec<f64> {
    pool_with_argmax(u, s, window).0
}

/// Inverted-dropout scale factors: `0` for dropped units, `1/(1-p)` for kept.
pub fn dropout_mask(len: usize, p: f64, rng_seed: u64) -> Vec<f64> {
    if p == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - p);
    let mut rng = seed::rng(rng_seed);
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect()
}

/// `ReLU(g)`, times a dropout mask in train mode.
pub fn encode_sentence(
    params: &EncoderParams,
    s: &Sentence,
    mode: Mode,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    let e = embed_sentence(params, s)?;
    let u = convolve(params, &e);
    let g = piecewise_maxpool(&u, s, params.config.window);
    let mut v: Vec<f64> = g.iter().map(|x| x.max(0.0)).collect();
    if mode == Mode::Train {
        let mask = dropout_mask(v.len(), params.config.dropout, rng_seed);
        for (vi, m) in v.iter_mut().zip(mask) {
            *vi *= m;
        }
    }
    Ok(v)
}

/// Row order used for every reduction over sentences: lexicographic on the
/// row values. Summing in this order makes bag encodings exactly invariant
/// to the order sentences appear in.
pub fn canonical_order(v: &Matrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.rows).collect();
    idx.sort_by(|&a, &b| {
        v.row(a)
            .iter()
            .zip(v.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    idx
}

pub fn select_mean(v: &Matrix) -> Result<BagEncoding> {
    if v.rows == 0 {
        return Err(Error::EmptyBag);
    }
    let mut x = vec![0.0; v.cols];
    for k in canonical_order(v) {
        for (xj, vj) in x.iter_mut().zip(v.row(k)) {
            *xj += vj;
        }
    }
    let n = v.rows as f64;
    x.iter_mut().for_each(|xj| *xj /= n);
    Ok(BagEncoding::Shared(x))
}

/// Column-wise maximum and, per column, the first row (in canonical order)
/// attaining it.
pub(crate) fn max_with_argrow(v: &Matrix) -> Result<(Vec<f64>, Vec<usize>)> {
    if v.rows == 0 {
        return Err(Error::EmptyBag);
    }
    let order = canonical_order(v);
    let mut x = v.row(order[0]).to_vec();
    let mut arg = vec![order[0]; v.cols];
    for &k in &order[1..] {
        for (j, &val) in v.row(k).iter().enumerate() {
            if val > x[j] {
                x[j] = val;
                arg[j] = k;
            }
        }
    }
    Ok((x, arg))
}

pub fn select_max(v: &Matrix) -> Result<BagEncoding> {
    Ok(BagEncoding::Shared(max_with_argrow(v)?.0))
}

/// Attention weights, one row per relation: `softmax_k(V_k^T A r)`.
pub fn attention_weights(params: &EncoderParams, v: &Matrix) -> Result<Matrix> {
    if v.rows == 0 {
        return Err(Error::EmptyBag);
    }
    let w = &params.weights;
    if v.cols != w.rel_emb.cols || v.cols != w.attn.cols {
        return Err(Error::Dimension(format!(
            "sentence vectors have width {}, relation embeddings {}",
            v.cols, w.rel_emb.cols
        )));
    }
    let order = canonical_order(v);
    let n_rel = w.rel_emb.rows;
    let mut alpha = Matrix::zeros(n_rel, v.rows);
    let mut query = vec![0.0; v.cols];
    for r in 0..n_rel {
        for ((q, a), rel) in query.iter_mut().zip(&w.attn.data).zip(w.rel_emb.row(r)) {
            *q = a * rel;
        }
        let scores: Vec<f64> = (0..v.rows).map(|k| dot(v.row(k), &query)).collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for &k in &order {
            let e = (scores[k] - top).exp();
            alpha.set(r, k, e);
            total += e;
        }
        alpha.row_mut(r).iter_mut().for_each(|a| *a /= total);
    }
    Ok(alpha)
}

/// `x^r = sum_k alpha[r][k] V_k` for every relation.
pub(crate) fn attend(v: &Matrix, alpha: &Matrix) -> Matrix {
    let order = canonical_order(v);
    let mut x = Matrix::zeros(alpha.rows, v.cols);
    for r in 0..alpha.rows {
        let xr = x.row_mut(r);
        for &k in &order {
            super::matrix::axpy(alpha.get(r, k), v.row(k), xr);
        }
    }
    x
}

pub fn select_attention(params: &EncoderParams, v: &Matrix) -> Result<BagEncoding> {
    let alpha = attention_weights(params, v)?;
    Ok(BagEncoding::PerRelation(attend(v, &alpha)))
}

#[inline]
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
#[inline]
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

pub(crate) fn logits(params: &EncoderParams, enc: &BagEncoding) -> Vec<f64> {
    let w = &params.weights;
    (0..w.rel_emb.rows)
        .map(|r| dot(w.rel_emb.row(r), enc.for_relation(r)) + w.head_bias.data[r])
        .collect()
}

/// Per-relation `sigmoid(r . x + b_r)`.
pub fn classify(params: &EncoderParams, enc: &BagEncoding) -> Result<Vec<f64>> {
    if enc.dim() != params.weights.rel_emb.cols {
        return Err(Error::Dimension(format!(
            "bag encoding width {} vs relation embedding width {}",
            enc.dim(),
            params.weights.rel_emb.cols
        )));
    }
    Ok(logits(params, enc).into_iter().map(sigmoid).collect())
}
