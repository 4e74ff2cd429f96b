use rand::Rng;

use super::*;
use crate::label_space::LabelVector;
use crate::seed;

fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        vocab_size: 12,
        word_dim: 3,
        pos_dim: 2,
        max_len: 8,
        window: 3,
        kernels: 4,
        n_relations: 3,
        dropout: 0.0,
    }
}

/// Every tensor random, biases and the attention diagonal included.
fn random_params(cfg: EncoderConfig, s: u64) -> EncoderParams {
    let mut p = EncoderParams::init(cfg, s).unwrap();
    let mut rng = seed::rng(seed::derive(s, "perturb"));
    for m in p.weights.iter_mut() {
        for x in &mut m.data {
            *x = rng.gen_range(-0.8..0.8);
        }
    }
    p
}

fn random_sentence(rng: &mut impl Rng, cfg: &EncoderConfig) -> Sentence {
    let m = rng.gen_range(2..=cfg.max_len.min(7));
    let tokens = (0..m).map(|_| rng.gen_range(0..cfg.vocab_size)).collect();
    let head = rng.gen_range(0..m);
    let mut tail = rng.gen_range(0..m);
    while tail == head {
        tail = rng.gen_range(0..m);
    }
    Sentence::new(tokens, head, tail)
}

fn random_bag(cfg: &EncoderConfig, n: usize, s: u64) -> Bag {
    let mut rng = seed::rng(s);
    Bag {
        id: format!("bag{s}"),
        head: "h".into(),
        tail: "t".into(),
        sentences: (0..n).map(|_| random_sentence(&mut rng, cfg)).collect(),
        observed: LabelVector::zeros(cfg.n_relations),
        truth: None,
    }
}

fn random_matrix(rows: usize, cols: usize, s: u64) -> Matrix {
    let mut rng = seed::rng(s);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

const SELECTORS: [Selector; 3] = [Selector::Mean, Selector::Max, Selector::Attention];

#[test]
fn embed_single_token_is_concatenation() {
    let p = random_params(tiny_config(), 1);
    let s = Sentence::new(vec![5], 0, 0);
    // a one-token sentence cannot hold two distinct entities
    assert!(embed_sentence(&p, &s).is_err());
    let s = Sentence::new(vec![5, 7], 0, 1);
    let e = embed_sentence(&p, &s).unwrap();
    assert_eq!(e.shape(), (2, 7));
    let l = p.config.max_len;
    let expected: Vec<f64> = [
        p.weights.word_emb.row(5),
        p.weights.pos_head.row(l),
        p.weights.pos_tail.row(l - 1),
    ]
    .concat();
    assert_eq!(e.row(0), &expected[..]);
    let expected1: Vec<f64> = [
        p.weights.word_emb.row(7),
        p.weights.pos_head.row(l + 1),
        p.weights.pos_tail.row(l),
    ]
    .concat();
    assert_eq!(e.row(1), &expected1[..]);
}

#[test]
fn embed_rejects_unknown_tokens() {
    let p = random_params(tiny_config(), 1);
    let err = embed_sentence(&p, &Sentence::new(vec![1, 99], 0, 1)).unwrap_err();
    assert!(matches!(err, crate::Error::OutOfVocabulary { token: 99, .. }));
}

#[test]
fn positions_are_clipped() {
    assert_eq!(position_row(0, 0, 5), 5);
    assert_eq!(position_row(0, 30, 5), 0);
    assert_eq!(position_row(30, 0, 5), 10);
}

#[test]
fn convolution_constant_and_identity_cases() {
    let mut p = random_params(tiny_config(), 2);
    p.weights.kernels.data.fill(0.0);
    p.weights.conv_bias.data.fill(0.25);
    let e = random_matrix(5, 7, 3);
    let u = convolve(&p, &e);
    assert_eq!(u.shape(), (4, 7));
    assert!(u.data.iter().all(|&x| x == 0.25));

    let mut cfg = tiny_config();
    cfg.window = 1;
    cfg.kernels = 1;
    let mut p = random_params(cfg, 2);
    p.weights.kernels.data.fill(0.0);
    p.weights.kernels.data[4] = 1.0;
    p.weights.conv_bias.data.fill(0.0);
    let u = convolve(&p, &e);
    assert_eq!(u.shape(), (1, 5));
    for t in 0..5 {
        assert_eq!(u.get(0, t), e.get(t, 4));
    }
}

#[test]
fn convolution_matches_direct_loop() {
    let mut cfg = tiny_config();
    cfg.window = 2;
    cfg.kernels = 1;
    cfg.word_dim = 1;
    cfg.pos_dim = 0;
    cfg.vocab_size = 4;
    let p = random_params(cfg, 4);
    let e = random_matrix(3, 1, 5);
    let u = convolve(&p, &e);
    assert_eq!(u.shape(), (1, 4));
    let k = &p.weights.kernels.data;
    let b = p.weights.conv_bias.data[0];
    // column j sees tokens j-1 and j; missing tokens are zero padding
    let tok = |t: isize| if (0..3).contains(&t) { e.get(t as usize, 0) } else { 0.0 };
    for j in 0..4isize {
        let want = k[0] * tok(j - 1) + k[1] * tok(j) + b;
        assert!((u.get(0, j as usize) - want).abs() < 1e-15);
    }

    // and a wider random case
    let cfg = tiny_config();
    let p = random_params(cfg, 6);
    let e = random_matrix(6, cfg.token_dim(), 7);
    let u = convolve(&p, &e);
    let d_e = cfg.token_dim();
    for i in 0..cfg.kernels {
        for j in 0..6 + cfg.window - 1 {
            let mut want = p.weights.conv_bias.data[i];
            for w in 0..cfg.window {
                let t = j as isize + w as isize - (cfg.window as isize - 1);
                if (0..6).contains(&t) {
                    for c in 0..d_e {
                        want += p.weights.kernels.get(i, w * d_e + c) * e.get(t as usize, c);
                    }
                }
            }
            assert!((u.get(i, j) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn pooling_degenerate_segments() {
    let s = Sentence::new(vec![0, 1, 2], 0, 2);
    let u = Matrix::from_rows(&[vec![3.0, 4.0, 5.0], vec![-1.0, -2.0, -3.0]]);
    let g = piecewise_maxpool(&u, &s, 1);
    assert_eq!(g, vec![3.0, -1.0, 4.0, -2.0, 5.0, -3.0]);

    let c = Matrix::from_vec(2, 5, vec![0.7; 10]);
    let s = Sentence::new(vec![0, 1, 2], 2, 0);
    assert!(piecewise_maxpool(&c, &s, 3).iter().all(|&x| x == 0.7));
}

#[test]
fn pooling_empty_middle_segment_is_zero() {
    let s = Sentence::new(vec![0, 1, 2], 0, 1);
    let u = Matrix::from_rows(&[vec![3.0, 4.0, 5.0]]);
    assert_eq!(piecewise_maxpool(&u, &s, 1), vec![3.0, 0.0, 5.0]);
}

#[test]
fn pooling_matches_direct_loop() {
    let mut rng = seed::rng(11);
    for trial in 0..200u64 {
        let window = rng.gen_range(1..=4);
        let m = rng.gen_range(2..10);
        let head = rng.gen_range(0..m);
        let mut tail = rng.gen_range(0..m);
        while tail == head {
            tail = rng.gen_range(0..m);
        }
        let s = Sentence::new(vec![0; m], head, tail);
        let u = random_matrix(3, m + window - 1, trial);
        let g = piecewise_maxpool(&u, &s, window);
        let (e1, e2) = (head.min(tail) as isize, head.max(tail) as isize);
        let half = ((window - 1) / 2) as isize;
        for i in 0..3 {
            let mut best = [None::<f64>; 3];
            for j in 0..u.cols {
                let c = j as isize - half;
                let seg = if c <= e1 { 0 } else if c < e2 { 1 } else { 2 };
                let v = u.get(i, j);
                best[seg] = Some(best[seg].map_or(v, |b: f64| b.max(v)));
            }
            for (seg, b) in best.iter().enumerate() {
                assert_eq!(g[seg * 3 + i], b.unwrap_or(0.0));
            }
        }
    }
}

#[test]
fn sentence_encoding_relu_and_eval() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.0;
    let mut p = random_params(cfg, 3);
    p.weights.kernels.data.fill(0.0);
    p.weights.conv_bias.data.fill(-0.5);
    let s = Sentence::new(vec![1, 2, 3], 0, 2);
    assert!(encode_sentence(&p, &s, Mode::Train, 1).unwrap().iter().all(|&x| x == 0.0));

    let mut cfg = tiny_config();
    cfg.dropout = 0.5;
    let p = random_params(cfg, 3);
    let e = embed_sentence(&p, &s).unwrap();
    let g = piecewise_maxpool(&convolve(&p, &e), &s, cfg.window);
    let relu: Vec<f64> = g.iter().map(|x| x.max(0.0)).collect();
    assert_eq!(encode_sentence(&p, &s, Mode::Eval, 1).unwrap(), relu);
}

#[test]
fn inverted_dropout_is_unbiased() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.5;
    let p = random_params(cfg, 8);
    let s = Sentence::new(vec![1, 4, 3, 9], 1, 3);
    let reference = encode_sentence(&p, &s, Mode::Eval, 0).unwrap();
    let trials = 10_000u64;
    let mut mean = vec![0.0; reference.len()];
    for t in 0..trials {
        let v = encode_sentence(&p, &s, Mode::Train, t).unwrap();
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / trials as f64;
        }
    }
    let scale: f64 = reference.iter().sum();
    let total: f64 = mean.iter().sum();
    assert!((total - scale).abs() <= 0.03 * scale, "{total} vs {scale}");
    for (m, r) in mean.iter().zip(&reference) {
        if *r == 0.0 {
            assert_eq!(*m, 0.0);
        }
    }
}

#[test]
fn selectors_small_examples() {
    let v = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(select_mean(&v).unwrap(), BagEncoding::Shared(vec![2.0, 3.0]));
    let v = Matrix::from_rows(&[vec![1.0, 4.0], vec![3.0, 2.0]]);
    assert_eq!(select_max(&v).unwrap(), BagEncoding::Shared(vec![3.0, 4.0]));
    let one = Matrix::from_rows(&[vec![0.5, -1.0]]);
    assert_eq!(select_mean(&one).unwrap(), BagEncoding::Shared(vec![0.5, -1.0]));
    assert_eq!(select_max(&one).unwrap(), BagEncoding::Shared(vec![0.5, -1.0]));
    assert!(matches!(select_mean(&Matrix::zeros(0, 2)), Err(crate::Error::EmptyBag)));
    assert!(matches!(select_max(&Matrix::zeros(0, 2)), Err(crate::Error::EmptyBag)));
}

#[test]
fn selectors_match_direct_loops() {
    for s in 0..20 {
        let v = random_matrix(5, 6, s);
        let BagEncoding::Shared(mean) = select_mean(&v).unwrap() else { panic!() };
        let BagEncoding::Shared(max) = select_max(&v).unwrap() else { panic!() };
        for j in 0..6 {
            let mut sum = 0.0;
            let mut top = f64::NEG_INFINITY;
            for k in 0..5 {
                sum += v.get(k, j);
                top = top.max(v.get(k, j));
            }
            assert!((mean[j] - sum / 5.0).abs() < 1e-15);
            assert_eq!(max[j], top);
            assert!(max[j] >= mean[j]);
        }
    }
}

#[test]
fn attention_special_cases() {
    let cfg = tiny_config();
    let p = random_params(cfg, 5);
    let d = cfg.sentence_dim();
    let one = random_matrix(1, d, 1);
    let BagEncoding::PerRelation(x) = select_attention(&p, &one).unwrap() else { panic!() };
    for r in 0..cfg.n_relations {
        assert_eq!(x.row(r), one.row(0));
    }

    let mut p0 = p.clone();
    p0.weights.attn.data.fill(0.0);
    let v = random_matrix(4, d, 2);
    let alpha = attention_weights(&p0, &v).unwrap();
    assert!(alpha.data.iter().all(|&a| a == 0.25));
    let BagEncoding::PerRelation(x) = select_attention(&p0, &v).unwrap() else { panic!() };
    let BagEncoding::Shared(mean) = select_mean(&v).unwrap() else { panic!() };
    for r in 0..cfg.n_relations {
        for j in 0..d {
            assert!((x.get(r, j) - mean[j]).abs() < 1e-15);
        }
    }

    let narrow = random_matrix(2, d - 1, 3);
    assert!(matches!(select_attention(&p, &narrow), Err(crate::Error::Dimension(_))));
}

#[test]
fn attention_matches_direct_softmax() {
    let cfg = tiny_config();
    for s in 0..10 {
        let p = random_params(cfg, 40 + s);
        let d = cfg.sentence_dim();
        let v = random_matrix(4, d, 90 + s);
        let BagEncoding::PerRelation(x) = select_attention(&p, &v).unwrap() else { panic!() };
        let alpha = attention_weights(&p, &v).unwrap();
        for r in 0..3 {
            let mut e = [0.0; 4];
            for (k, ek) in e.iter_mut().enumerate() {
                for j in 0..d {
                    *ek += v.get(k, j) * p.weights.attn.data[j] * p.weights.rel_emb.get(r, j);
                }
            }
            let z: f64 = e.iter().map(|x| x.exp()).sum();
            let a: Vec<f64> = e.iter().map(|x| x.exp() / z).collect();
            let asum: f64 = alpha.row(r).iter().sum();
            assert!((asum - 1.0).abs() < 1e-12);
            for k in 0..4 {
                assert!(alpha.get(r, k) >= 0.0);
                assert!((alpha.get(r, k) - a[k]).abs() < 1e-12);
            }
            for j in 0..d {
                let want: f64 = (0..4).map(|k| a[k] * v.get(k, j)).sum();
                assert!((x.get(r, j) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn classify_cases() {
    let cfg = tiny_config();
    let mut p = random_params(cfg, 7);
    let d = cfg.sentence_dim();
    let x = BagEncoding::Shared(random_matrix(1, d, 8).data);
    let probs = classify(&p, &x).unwrap();
    for r in 0..3 {
        let mut s = p.weights.head_bias.data[r];
        for j in 0..d {
            s += p.weights.rel_emb.get(r, j) * x.for_relation(r)[j];
        }
        assert!((probs[r] - 1.0 / (1.0 + (-s).exp())).abs() < 1e-15);
    }
    p.weights.rel_emb.data.fill(0.0);
    p.weights.head_bias.data = vec![0.0, 1.5, -2.0];
    let probs = classify(&p, &x).unwrap();
    assert_eq!(probs[0], 0.5);
    assert!((probs[1] - sigmoid(1.5)).abs() < 1e-16);
    assert!((probs[2] - sigmoid(-2.0)).abs() < 1e-16);
    assert!(classify(&p, &BagEncoding::Shared(vec![0.0; d + 1])).is_err());
}

/// Straight-line re-implementation of the eval-mode pipeline with explicit
/// loops and no shared helpers.
fn pipeline_oracle(p: &EncoderParams, bag: &Bag, selector: Selector) -> Vec<f64> {
    let cfg = &p.config;
    let w = &p.weights;
    let l = cfg.max_len as isize;
    let d_e = cfg.token_dim();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    for s in &bag.sentences {
        let m = s.tokens.len();
        let emb: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let mut row = w.word_emb.row(s.tokens[j]).to_vec();
                let oh = (j as isize - s.head_pos as isize).clamp(-l, l) + l;
                let ot = (j as isize - s.tail_pos as isize).clamp(-l, l) + l;
                row.extend_from_slice(w.pos_head.row(oh as usize));
                row.extend_from_slice(w.pos_tail.row(ot as usize));
                row
            })
            .collect();
        let cols = m + cfg.window - 1;
        let (e1, e2) = (s.head_pos.min(s.tail_pos) as isize, s.head_pos.max(s.tail_pos) as isize);
        let mut g = vec![vec![None::<f64>; cfg.kernels]; 3];
        for j in 0..cols {
            let c = j as isize - ((cfg.window - 1) / 2) as isize;
            let seg = if c <= e1 { 0 } else if c < e2 { 1 } else { 2 };
            for i in 0..cfg.kernels {
                let mut u = w.conv_bias.data[i];
                for wi in 0..cfg.window {
                    let t = j as isize - (cfg.window as isize - 1) + wi as isize;
                    if t >= 0 && (t as usize) < m {
                        for c in 0..d_e {
                            u += w.kernels.get(i, wi * d_e + c) * emb[t as usize][c];
                        }
                    }
                }
                g[seg][i] = Some(g[seg][i].map_or(u, |b: f64| b.max(u)));
            }
        }
        vs.push(g.concat().into_iter().map(|x| x.unwrap_or(0.0).max(0.0)).collect());
    }
    let n = vs.len();
    let d = cfg.sentence_dim();
    (0..cfg.n_relations)
        .map(|r| {
            let x: Vec<f64> = match selector {
                Selector::Mean => (0..d).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect(),
                Selector::Max => (0..d)
                    .map(|j| vs.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max))
                    .collect(),
                Selector::Attention => {
                    let e: Vec<f64> = vs
                        .iter()
                        .map(|v| (0..d).map(|j| v[j] * w.attn.data[j] * w.rel_emb.get(r, j)).sum())
                        .collect();
                    let z: f64 = e.iter().map(|x| x.exp()).sum();
                    (0..d)
                        .map(|j| (0..n).map(|k| e[k].exp() / z * vs[k][j]).sum())
                        .collect()
                }
            };
            let s: f64 = (0..d).map(|j| w.rel_emb.get(r, j) * x[j]).sum::<f64>() + w.head_bias.data[r];
            1.0 / (1.0 + (-s).exp())
        })
        .collect()
}

#[test]
fn forward_matches_pipeline_oracle() {
    let cfg = tiny_config();
    for s in 0..10 {
        let p = random_params(cfg, 100 + s);
        let bag = random_bag(&cfg, 1 + (s as usize % 4), 200 + s);
        for sel in SELECTORS {
            let got = forward(&p, &bag, sel, Mode::Eval, 0).unwrap();
            let want = pipeline_oracle(&p, &bag, sel);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{sel}: {g} vs {w}");
                assert!(*g > 0.0 && *g < 1.0);
            }
        }
    }
}

#[test]
fn single_sentence_bags_are_selector_independent() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.5;
    let p = random_params(cfg, 9);
    let bag = random_bag(&cfg, 1, 10);
    for mode in [Mode::Eval, Mode::Train] {
        let a = forward(&p, &bag, Selector::Mean, mode, 3).unwrap();
        assert_eq!(a, forward(&p, &bag, Selector::Max, mode, 3).unwrap());
        assert_eq!(a, forward(&p, &bag, Selector::Attention, mode, 3).unwrap());
    }
}

#[test]
fn eval_mode_is_deterministic_and_train_mode_is_seeded() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.5;
    let p = random_params(cfg, 9);
    let bag = random_bag(&cfg, 3, 10);
    for sel in SELECTORS {
        assert_eq!(
            forward(&p, &bag, sel, Mode::Eval, 1).unwrap(),
            forward(&p, &bag, sel, Mode::Eval, 2).unwrap()
        );
        assert_eq!(
            forward(&p, &bag, sel, Mode::Train, 5).unwrap(),
            forward(&p, &bag, sel, Mode::Train, 5).unwrap()
        );
        assert_eq!(
            predict(&p, &bag, sel).unwrap(),
            forward(&p, &bag, sel, Mode::Eval, 0).unwrap()
        );
    }
}

#[test]
fn selectors_ignore_sentence_order() {
    let cfg = tiny_config();
    let p = random_params(cfg, 12);
    let bag = random_bag(&cfg, 5, 13);
    let mut rng = seed::rng(14);
    for sel in SELECTORS {
        let base = forward(&p, &bag, sel, Mode::Eval, 0).unwrap();
        for _ in 0..10 {
            let mut shuffled = bag.clone();
            rand::seq::SliceRandom::shuffle(&mut shuffled.sentences[..], &mut rng);
            assert_eq!(forward(&p, &shuffled, sel, Mode::Eval, 0).unwrap(), base, "{sel}");
        }
    }
}

#[test]
fn head_bias_gradient_vanishes_at_matching_targets() {
    let cfg = tiny_config();
    let p = random_params(cfg, 15);
    let bag = random_bag(&cfg, 3, 16);
    for sel in SELECTORS {
        let probs = forward(&p, &bag, sel, Mode::Eval, 0).unwrap();
        let (_, g) = backward(&p, &bag, sel, &probs, Mode::Eval, 0).unwrap();
        assert!(g.head_bias.data.iter().all(|&x| x == 0.0));
        assert!(g.iter().iter().all(|m| m.data.iter().all(|&x| x == 0.0)));
    }
}

#[test]
fn duplicate_sentences_share_gradient_equally() {
    let cfg = tiny_config();
    let p = random_params(cfg, 17);
    let mut bag = random_bag(&cfg, 1, 18);
    bag.sentences.push(bag.sentences[0].clone());
    let single = Bag {
        sentences: vec![bag.sentences[0].clone()],
        ..bag.clone()
    };
    let q = [1.0, 0.0, 1.0];
    let (l2, g2) = backward(&p, &bag, Selector::Mean, &q, Mode::Eval, 0).unwrap();
    let (l1, g1) = backward(&p, &single, Selector::Mean, &q, Mode::Eval, 0).unwrap();
    assert_eq!(l1, l2);
    // each copy contributes half of the single-sentence block; together they
    // reproduce it
    for (a, b) in g1.iter().iter().zip(g2.iter()) {
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

fn flatten(t: &Tensors) -> Vec<f64> {
    t.iter().iter().flat_map(|m| m.data.iter().copied()).collect()
}

fn unflatten(t: &mut Tensors, flat: &[f64]) {
    let mut off = 0;
    for m in t.iter_mut() {
        let n = m.len();
        m.data.copy_from_slice(&flat[off..off + n]);
        off += n;
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.3;
    for (case, sel) in SELECTORS.iter().enumerate() {
        let p = random_params(cfg, 300 + case as u64);
        let bag = random_bag(&cfg, 3, 400 + case as u64);
        let q = [0.9, 0.2, 0.6];
        let (_, grads) = backward(&p, &bag, *sel, &q, Mode::Train, 77).unwrap();
        let analytic = flatten(&grads);
        let mut flat = flatten(&p.weights);
        let mut probe = p.clone();
        let coords: Vec<usize> = (0..flat.len()).collect();
        let numeric = nem_oracle::fd_gradient(
            |x| {
                unflatten(&mut probe.weights, x);
                loss(&probe, &bag, *sel, &q, Mode::Train, 77).unwrap()
            },
            &mut flat,
            1e-5,
            Some(&coords),
        )
        .unwrap();
        for (i, n) in numeric {
            let a = analytic[i];
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            assert!(rel <= 1e-4, "{sel} coord {i}: analytic {a} numeric {n}");
        }
    }
}

#[test]
fn small_steps_along_negative_gradient_reduce_loss() {
    let mut cfg = tiny_config();
    cfg.dropout = 0.2;
    for inst in 0..20u64 {
        let sel = SELECTORS[inst as usize % 3];
        let p = random_params(cfg, 500 + inst);
        let bag = random_bag(&cfg, 1 + inst as usize % 4, 600 + inst);
        let q = [0.0, 1.0, 0.5];
        let (l0, g) = backward(&p, &bag, sel, &q, Mode::Train, inst).unwrap();
        let mut stepped = p.clone();
        stepped.weights.add_scaled(-1e-4, &g);
        let l1 = loss(&stepped, &bag, sel, &q, Mode::Train, inst).unwrap();
        assert!(l1 < l0, "instance {inst}: {l1} >= {l0}");
    }
}

#[test]
fn soft_targets_are_validated() {
    let cfg = tiny_config();
    let p = random_params(cfg, 1);
    let bag = random_bag(&cfg, 2, 2);
    assert!(backward(&p, &bag, Selector::Mean, &[0.5, 1.5, 0.0], Mode::Eval, 0).is_err());
    assert!(backward(&p, &bag, Selector::Mean, &[0.5, 0.5], Mode::Eval, 0).is_err());
}
