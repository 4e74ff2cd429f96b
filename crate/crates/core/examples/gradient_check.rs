//! Compares the analytic encoder gradients with central finite differences
//! on every coordinate of a small network, for each selector.

use nem::encoder::{backward, loss, Bag, EncoderConfig, EncoderParams, Mode, Selector, Sentence, TENSOR_NAMES};
use nem::{seed, LabelVector};
use rand::Rng;

fn main() -> nem::Result<()> {
    let cfg = EncoderConfig {
        vocab_size: 15,
        word_dim: 4,
        pos_dim: 2,
        max_len: 8,
        window: 3,
        kernels: 3,
        n_relations: 3,
        dropout: 0.25,
    };
    let mut rng = seed::rng(8);
    let bag = Bag {
        id: "example".into(),
        head: "h".into(),
        tail: "t".into(),
        sentences: vec![
            Sentence::new(vec![3, 0, 7, 9, 1], 1, 4),
            Sentence::new(vec![1, 4, 4, 0], 3, 0),
            Sentence::new(vec![0, 12, 1, 5, 6, 2], 0, 2),
        ],
        observed: LabelVector::zeros(3),
        truth: None,
    };
    let targets = [0.9, 0.1, 0.6];
    for selector in [Selector::Mean, Selector::Max, Selector::Attention] {
        let mut params = EncoderParams::init(cfg, 1)?;
        for m in params.weights.iter_mut() {
            for x in &mut m.data {
                *x = rng.gen_range(-0.7..0.7);
            }
        }
        let (_, grads) = backward(&params, &bag, selector, &targets, Mode::Train, 5)?;
        let h = 1e-5;
        let mut worst = vec![0.0f64; TENSOR_NAMES.len()];
        for t in 0..TENSOR_NAMES.len() {
            for i in 0..params.weights.iter()[t].data.len() {
                let orig = params.weights.iter()[t].data[i];
                params.weights.iter_mut()[t].data[i] = orig + h;
                let up = loss(&params, &bag, selector, &targets, Mode::Train, 5)?;
                params.weights.iter_mut()[t].data[i] = orig - h;
                let down = loss(&params, &bag, selector, &targets, Mode::Train, 5)?;
                params.weights.iter_mut()[t].data[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.iter()[t].data[i];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst[t] = worst[t].max(rel);
            }
        }
        println!("{selector}:");
        for (name, w) in TENSOR_NAMES.iter().zip(&worst) {
            println!("  {name:<10} max relative error {w:.2e}");
        }
    }
    Ok(())
}
