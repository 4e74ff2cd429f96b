//! Whole-bag forward pass and its exact reverse-mode gradient.

use super::bag::{Bag, Sentence};
use super::layers::{
    attend, attention_weights, canonical_order, convolve, dropout_mask, embed_sentence,
    logits, max_with_argrow, pool_with_argmax, position_row, sigmoid, softplus,
    window_token, BagEncoding, Mode, Selector,
};
use super::matrix::{axpy, dot, Matrix};
use super::params::{EncoderParams, Gradients};
use crate::error::{Error, Result};
use crate::seed;

struct SentenceTrace {
    emb: Matrix,
    pooled: Vec<f64>,
    argmax: Vec<Option<usize>>,
    mask: Option<Vec<f64>>,
}

enum SelectorTrace {
    Mean,
    Max(Vec<usize>),
    Attention(Matrix),
}

/// Everything the backward pass needs from a forward pass.
pub struct BagTrace {
    sentences: Vec<SentenceTrace>,
    vectors: Matrix,
    selector: SelectorTrace,
    encoding: BagEncoding,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl BagTrace {
    pub fn encoding(&self) -> &BagEncoding {
        &self.encoding
    }

    /// Sentence vectors, one row per sentence in bag order.
    pub fn sentence_vectors(&self) -> &Matrix {
        &self.vectors
    }
}

/// Dropout seed of sentence `k` in a bag evaluated under `rng_seed`.
pub fn sentence_seed(rng_seed: u64, k: usize) -> u64 {
    seed::child(rng_seed, k as u64)
}

fn trace_sentence(
    params: &EncoderParams,
    s: &Sentence,
    mode: Mode,
    rng_seed: u64,
) -> Result<(SentenceTrace, Vec<f64>)> {
    let emb = embed_sentence(params, s)?;
    let u = convolve(params, &emb);
    let (pooled, argmax) = pool_with_argmax(&u, s, params.config.window);
    let mut v: Vec<f64> = pooled.iter().map(|g| g.max(0.0)).collect();
    let mask = match mode {
        Mode::Train if params.config.dropout > 0.0 => {
            let m = dropout_mask(v.len(), params.config.dropout, rng_seed);
            v.iter_mut().zip(&m).for_each(|(vi, mi)| *vi *= mi);
            Some(m)
        }
        _ => None,
    };
    Ok((
        SentenceTrace {
            emb,
            pooled,
            argmax,
            mask,
        },
        v,
    ))
}

pub fn forward_trace(
    params: &EncoderParams,
    bag: &Bag,
    selector: Selector,
    mode: Mode,
    rng_seed: u64,
) -> Result<BagTrace> {
    if bag.sentences.is_empty() {
        return Err(Error::EmptyBag);
    }
    let d = params.config.sentence_dim();
    let mut vectors = Matrix::zeros(bag.sentences.len(), d);
    let mut sentences = Vec::with_capacity(bag.sentences.len());
    for (k, s) in bag.sentences.iter().enumerate() {
        let (t, v) = trace_sentence(params, s, mode, sentence_seed(rng_seed, k))?;
        vectors.row_mut(k).copy_from_slice(&v);
        sentences.push(t);
    }
    let (selector, encoding) = match selector {
        Selector::Mean => (SelectorTrace::Mean, super::layers::select_mean(&vectors)?),
        Selector::Max => {
            let (x, arg) = max_with_argrow(&vectors)?;
            (SelectorTrace::Max(arg), BagEncoding::Shared(x))
        }
        Selector::Attention => {
            let alpha = attention_weights(params, &vectors)?;
            let x = attend(&vectors, &alpha);
            (SelectorTrace::Attention(alpha), BagEncoding::PerRelation(x))
        }
    };
    let logits = logits(params, &encoding);
    let probs = logits.iter().map(|&s| sigmoid(s)).collect();
    Ok(BagTrace {
        sentences,
        vectors,
        selector,
        encoding,
        logits,
        probs,
    })
}

/// `p(Y[r]=1 | bag)` for every relation.
pub fn forward(
    params: &EncoderParams,
    bag: &Bag,
    selector: Selector,
    mode: Mode,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    Ok(forward_trace(params, bag, selector, mode, rng_seed)?.probs)
}

/// Soft-target binary cross-entropy, summed over relations, from logits.
pub fn soft_bce(logits: &[f64], targets: &[f64]) -> f64 {
    logits
        .iter()
        .zip(targets)
        .map(|(&s, &q)| softplus(s) - q * s)
        .sum()
}

/// Loss of one bag against soft targets, using the same dropout masks that
/// [`backward`] would use for the same seed.
pub fn loss(
    params: &EncoderParams,
    bag: &Bag,
    selector: Selector,
    targets: &[f64],
    mode: Mode,
    rng_seed: u64,
) -> Result<f64> {
    check_targets(params, targets)?;
    let t = forward_trace(params, bag, selector, mode, rng_seed)?;
    Ok(soft_bce(&t.logits, targets))
}

fn check_targets(params: &EncoderParams, targets: &[f64]) -> Result<()> {
    if targets.len() != params.config.n_relations {
        return Err(Error::LengthMismatch {
            expected: params.config.n_relations,
            got: targets.len(),
        });
    }
    if let Some(q) = targets.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Config(format!("soft target {q} outside [0, 1]")));
    }
    Ok(())
}

/// Loss and full gradient of `-sum_r [q_r ln p_r + (1-q_r) ln(1-p_r)]`.
pub fn backward(
    params: &EncoderParams,
    bag: &Bag,
    selector: Selector,
    targets: &[f64],
    mode: Mode,
    rng_seed: u64,
) -> Result<(f64, Gradients)> {
    let mut grads = params.weights.zeros_like();
    let l = accumulate_gradients(params, bag, selector, targets, mode, rng_seed, 1.0, &mut grads)?;
    Ok((l, grads))
}

/// Adds `weight` times the bag's gradient into `grads` and returns the
/// unweighted loss.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_gradients(
    params: &EncoderParams,
    bag: &Bag,
    selector: Selector,
    targets: &[f64],
    mode: Mode,
    rng_seed: u64,
    weight: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    check_targets(params, targets)?;
    let trace = forward_trace(params, bag, selector, mode, rng_seed)?;
    let loss = soft_bce(&trace.logits, targets);
    backprop(params, bag, &trace, targets, weight, grads);
    Ok(loss)
}

fn backprop(
    params: &EncoderParams,
    bag: &Bag,
    trace: &BagTrace,
    targets: &[f64],
    weight: f64,
    grads: &mut Gradients,
) {
    let w = &params.weights;
    let n_rel = w.rel_emb.rows;
    let d = w.rel_emb.cols;
    let n = trace.vectors.rows;

    let delta: Vec<f64> = trace
        .probs
        .iter()
        .zip(targets)
        .map(|(p, q)| weight * (p - q))
        .collect();
    for (gb, dl) in grads.head_bias.data.iter_mut().zip(&delta) {
        *gb += dl;
    }

    let mut d_vectors = Matrix::zeros(n, d);
    match &trace.selector {
        SelectorTrace::Mean | SelectorTrace::Max(_) => {
            let x = trace.encoding.for_relation(0);
            let mut dx = vec![0.0; d];
            for r in 0..n_rel {
                if delta[r] != 0.0 {
                    axpy(delta[r], x, grads.rel_emb.row_mut(r));
                    axpy(delta[r], w.rel_emb.row(r), &mut dx);
                }
            }
            match &trace.selector {
                SelectorTrace::Mean => {
                    let inv = 1.0 / n as f64;
                    for k in canonical_order(&trace.vectors) {
                        axpy(inv, &dx, d_vectors.row_mut(k));
                    }
                }
                SelectorTrace::Max(arg) => {
                    for (j, &k) in arg.iter().enumerate() {
                        d_vectors.data[k * d + j] += dx[j];
                    }
                }
                SelectorTrace::Attention(_) => unreachable!(),
            }
        }
        SelectorTrace::Attention(alpha) => {
            let v = &trace.vectors;
            let mut d_alpha = vec![0.0; n];
            for r in 0..n_rel {
                if delta[r] == 0.0 {
                    continue;
                }
                let xr = trace.encoding.for_relation(r);
                let rel = w.rel_emb.row(r);
                axpy(delta[r], xr, grads.rel_emb.row_mut(r));
                let dxr: Vec<f64> = rel.iter().map(|x| delta[r] * x).collect();
                for (k, da) in d_alpha.iter_mut().enumerate() {
                    *da = dot(&dxr, v.row(k));
                    axpy(alpha.get(r, k), &dxr, d_vectors.row_mut(k));
                }
                let mean: f64 = (0..n).map(|k| alpha.get(r, k) * d_alpha[k]).sum();
                for k in 0..n {
                    let de = alpha.get(r, k) * (d_alpha[k] - mean);
                    if de == 0.0 {
                        continue;
                    }
                    let vk = v.row(k);
                    let dvk = d_vectors.row_mut(k);
                    for j in 0..d {
                        let a = w.attn.data[j];
                        dvk[j] += de * a * rel[j];
                        grads.attn.data[j] += de * vk[j] * rel[j];
                        grads.rel_emb.data[r * d + j] += de * vk[j] * a;
                    }
                }
            }
        }
    }

    for (k, (st, s)) in trace.sentences.iter().zip(&bag.sentences).enumerate() {
        backprop_sentence(params, s, st, d_vectors.row(k), grads);
    }
}

fn backprop_sentence(
    params: &EncoderParams,
    s: &Sentence,
    st: &SentenceTrace,
    dv: &[f64],
    grads: &mut Gradients,
) {
    let cfg = &params.config;
    let d_e = cfg.token_dim();
    let l_ker = cfg.kernels;
    let m = st.emb.rows;
    let mut d_emb = Matrix::zeros(m, d_e);
    let mut touched = false;
    for (slot, &dvi) in dv.iter().enumerate() {
        let mut dg = dvi;
        if let Some(mask) = &st.mask {
            dg *= mask[slot];
        }
        if dg == 0.0 || st.pooled[slot] <= 0.0 {
            continue;
        }
        let Some(col) = st.argmax[slot] else { continue };
        touched = true;
        let i = slot % l_ker;
        grads.conv_bias.data[i] += dg;
        let kernel = params.weights.kernels.row(i);
        for wi in 0..cfg.window {
            if let Some(t) = window_token(col, wi, cfg.window, m) {
                let span = wi * d_e..(wi + 1) * d_e;
                axpy(dg, st.emb.row(t), &mut grads.kernels.row_mut(i)[span.clone()]);
                axpy(dg, &kernel[span], d_emb.row_mut(t));
            }
        }
    }
    if !touched {
        return;
    }
    for (j, &tok) in s.tokens.iter().enumerate() {
        let row = d_emb.row(j);
        let (dw, dp) = row.split_at(cfg.word_dim);
        let (dh, dt) = dp.split_at(cfg.pos_dim);
        axpy(1.0, dw, grads.word_emb.row_mut(tok));
        axpy(1.0, dh, grads.pos_head.row_mut(position_row(j, s.head_pos, cfg.max_len)));
        axpy(1.0, dt, grads.pos_tail.row_mut(position_row(j, s.tail_pos, cfg.max_len)));
    }
}
