//! PCNN bag encoder: word-position embedding, wide convolution, piecewise
//! max-pooling, ReLU and dropout per sentence, then a mean, max or
//! all-relation attention selector feeding one logistic head per relation.

mod bag;
mod layers;
mod matrix;
mod network;
mod params;

pub use bag::{Bag, Sentence, DEFAULT_MAX_LEN};
pub use layers::{
    attention_weights, canonical_order, classify, convolve, dropout_mask, embed_sentence,
    encode_sentence, piecewise_maxpool, position_row, segment_of, select_attention,
    select_max, select_mean, sigmoid, softplus, BagEncoding, Mode, Selector,
};
pub use matrix::Matrix;
pub use network::{
    accumulate_gradients, backward, forward, forward_trace, loss, sentence_seed, soft_bce,
    BagTrace,
};
pub use params::{EncoderConfig, EncoderParams, Gradients, Tensors, TENSOR_NAMES};

/// Eval-mode scores. Deterministic.
pub fn predict(params: &EncoderParams, bag: &Bag, selector: Selector) -> crate::Result<Vec<f64>> {
    forward(params, bag, selector, Mode::Eval, 0)
}

#[cfg(test)]
mod tests;
