use crate::datagen::Dataset;
use crate::encoder::{forward, EncoderParams, Mode, Selector};
use crate::error::{Error, Result};
use crate::label_space::LabelVector;
use crate::noise_channel::NoiseChannel;
use crate::{floored_ln, PROB_FLOOR};

/// Factorized Bernoulli beliefs `Q_{b,r}(y[r] = 1)`, one row per bag in
/// dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub ids: Vec<String>,
    pub q: Vec<Vec<f64>>,
}

impl Posterior {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|k| self.q[k].as_slice())
    }

    /// Mean of `Q(y=1)` over positions where `select(z, y)` holds.
    /// `None` when the dataset has no truth or nothing is selected.
    pub fn mean_where(&self, ds: &Dataset, select: impl Fn(bool, bool) -> bool) -> Option<f64> {
        let (mut sum, mut count) = (0.0, 0usize);
        for (bag, q) in ds.bags.iter().zip(&self.q) {
            let y = bag.truth.as_ref()?;
            for (r, &qr) in q.iter().enumerate() {
                if select(bag.observed.get(r), y.get(r)) {
                    sum += qr;
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// `Q^0 = z`.
pub fn init_posterior(ds: &Dataset) -> Posterior {
    Posterior {
        ids: ds.bags.iter().map(|b| b.id.clone()).collect(),
        q: ds.bags.iter().map(|b| b.observed.to_probs()).collect(),
    }
}

/// Per-relation Bayes update
/// `Q(y=1) = p(z|1) p(1|x) / sum_y p(z|y) p(y|x)`.
pub fn e_step(channel: &NoiseChannel, prior: &[f64], z: &LabelVector) -> Result<Vec<f64>> {
    if prior.len() != channel.len() || z.len() != channel.len() {
        return Err(Error::LengthMismatch {
            expected: channel.len(),
            got: if prior.len() != channel.len() { prior.len() } else { z.len() },
        });
    }
    prior
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            let one = channel.prob(r, true, z.get(r)) * p;
            let zero = channel.prob(r, false, z.get(r)) * (1.0 - p);
            let denom = one + zero;
            if denom == 0.0 {
                Err(Error::DegenerateChannel { relation: r })
            } else {
                Ok(one / denom)
            }
        })
        .collect()
}

/// Negated expected complete-data log-likelihood of one bag:
/// `-sum_r sum_y Q(y) [ln p(z|y) + ln p(y|x)]`.
pub fn m_step_loss(q: &[f64], probs: &[f64], channel: &NoiseChannel, z: &LabelVector) -> f64 {
    let mut total = 0.0;
    for r in 0..q.len() {
        for (y, qy, py) in [(true, q[r], probs[r]), (false, 1.0 - q[r], 1.0 - probs[r])] {
            if qy != 0.0 {
                total += qy * (floored_ln(channel.prob(r, y, z.get(r))) + floored_ln(py));
            }
        }
    }
    -total
}

fn entropy_term(q: f64) -> f64 {
    let mut h = 0.0;
    for p in [q, 1.0 - q] {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// One bag's contribution to the bound: expected complete-data
/// log-likelihood plus the entropy of Q.
pub fn bag_bound(q: &[f64], prior: &[f64], channel: &NoiseChannel, z: &LabelVector) -> f64 {
    -m_step_loss(q, prior, channel, z) + q.iter().map(|&qr| entropy_term(qr)).sum::<f64>()
}

/// `ln p(z | x)`, factorized per relation.
pub fn bag_log_likelihood(prior: &[f64], channel: &NoiseChannel, z: &LabelVector) -> f64 {
    prior
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            floored_ln(channel.prob(r, true, z.get(r)) * p + channel.prob(r, false, z.get(r)) * (1.0 - p))
        })
        .sum()
}

pub fn lower_bound_from_priors(
    ds: &Dataset,
    priors: &[Vec<f64>],
    channel: &NoiseChannel,
    posterior: &Posterior,
) -> f64 {
    ds.bags
        .iter()
        .zip(priors)
        .zip(&posterior.q)
        .map(|((b, p), q)| bag_bound(q, p, channel, &b.observed))
        .sum()
}

pub fn log_likelihood_from_priors(ds: &Dataset, priors: &[Vec<f64>], channel: &NoiseChannel) -> f64 {
    ds.bags
        .iter()
        .zip(priors)
        .map(|(b, p)| bag_log_likelihood(p, channel, &b.observed))
        .sum()
}

/// The variational bound over the whole dataset, with classifier
/// probabilities from an eval-mode forward pass.
pub fn lower_bound(
    ds: &Dataset,
    params: &EncoderParams,
    selector: Selector,
    channel: &NoiseChannel,
    posterior: &Posterior,
) -> Result<f64> {
    let priors = ds
        .bags
        .iter()
        .map(|b| forward(params, b, selector, Mode::Eval, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(lower_bound_from_priors(ds, &priors, channel, posterior))
}

/// Closed-form channel maximizing the bound for fixed Q: expected flip
/// counts over expected label counts. Relations with no expected mass keep
/// their current values.
pub fn reestimate_channel(ds: &Dataset, posterior: &Posterior, current: &NoiseChannel) -> NoiseChannel {
    let n = current.len();
    let mut flips0 = vec![0.0; n];
    let mut mass0 = vec![0.0; n];
    let mut flips1 = vec![0.0; n];
    let mut mass1 = vec![0.0; n];
    for (b, q) in ds.bags.iter().zip(&posterior.q) {
        for r in 0..n {
            let z = b.observed.get(r);
            mass0[r] += 1.0 - q[r];
            mass1[r] += q[r];
            if z {
                flips0[r] += 1.0 - q[r];
            } else {
                flips1[r] += q[r];
            }
        }
    }
    let pick = |f: f64, m: f64, old: f64| if m > PROB_FLOOR { (f / m).clamp(0.0, 1.0) } else { old };
    NoiseChannel {
        phi0: (0..n).map(|r| pick(flips0[r], mass0[r], current.phi0[r])).collect(),
        phi1: (0..n).map(|r| pick(flips1[r], mass1[r], current.phi1[r])).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{Bag, Sentence};
    use crate::label_space::RelationCatalog;

    fn lv(bits: &[u8]) -> LabelVector {
        LabelVector::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    fn dataset(zs: &[&[u8]]) -> Dataset {
        let cat = RelationCatalog::synthetic(zs[0].len() - 1).unwrap();
        Dataset::new(
            cat,
            zs.iter()
                .enumerate()
                .map(|(i, z)| Bag {
                    id: format!("b{i}"),
                    head: "h".into(),
                    tail: "t".into(),
                    sentences: vec![Sentence::new(vec![0, 1], 0, 1)],
                    observed: lv(z),
                    truth: None,
                })
                .collect(),
        )
    }

    #[test]
    fn posterior_starts_at_observed_labels() {
        let ds = dataset(&[&[0, 1, 0], &[1, 0, 0]]);
        let q = init_posterior(&ds);
        assert_eq!(q.get("b0").unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(q.get("b1").unwrap(), &[1.0, 0.0, 0.0]);
        let empty = Dataset::new(RelationCatalog::synthetic(2).unwrap(), vec![]);
        assert!(init_posterior(&empty).is_empty());
    }

    #[test]
    fn e_step_hand_value() {
        let ch = NoiseChannel::new(vec![0.3], vec![0.9]).unwrap();
        let q = e_step(&ch, &[0.5], &lv(&[1])).unwrap();
        assert!((q[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn e_step_limits() {
        let prior = [0.2, 0.7, 0.999];
        let z = lv(&[1, 0, 1]);
        assert_eq!(e_step(&NoiseChannel::noiseless(3), &prior, &z).unwrap(), vec![1.0, 0.0, 1.0]);
        let flat = NoiseChannel::uniform(3, 0.5, 0.5).unwrap();
        let q = e_step(&flat, &prior, &z).unwrap();
        for (a, b) in q.iter().zip(&prior) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn e_step_degenerate_channel() {
        let ch = NoiseChannel::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            e_step(&ch, &[0.5], &lv(&[1])),
            Err(Error::DegenerateChannel { relation: 0 })
        ));
        assert!(e_step(&ch, &[0.5, 0.5], &lv(&[1])).is_err());
    }

    #[test]
    fn m_step_loss_scalar() {
        let ch = NoiseChannel::noiseless(2);
        let z = lv(&[1, 0]);
        // with a noiseless channel and Q = z the channel term is ln 1 = 0
        let l = m_step_loss(&[1.0, 0.0], &[0.5, 0.5], &ch, &z);
        assert!((l - 1.3863).abs() < 1e-4);
        assert!((l + 2.0 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn m_step_loss_matches_term_by_term_sum() {
        let ch = NoiseChannel::new(vec![0.1, 0.3, 0.0, 0.25], vec![0.6, 0.0, 0.2, 0.5]).unwrap();
        let q = [0.3, 0.9, 0.05, 0.5];
        let p: [f64; 4] = [0.4, 0.2, 0.8, 0.65];
        let z = lv(&[1, 0, 1, 0]);
        let mut want = 0.0f64;
        for r in 0..4 {
            let zr = z.get(r);
            let pz1: f64 = if zr { 1.0 - ch.phi1[r] } else { ch.phi1[r] };
            let pz0: f64 = if zr { ch.phi0[r] } else { 1.0 - ch.phi0[r] };
            want += q[r] * (pz1.max(1e-12).ln() + p[r].ln());
            want += (1.0 - q[r]) * (pz0.max(1e-12).ln() + (1.0 - p[r]).ln());
        }
        assert!((m_step_loss(&q, &p, &ch, &z) + want).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)] // hand value
    fn bound_single_relation_closed_form() {
        let ch = NoiseChannel::uniform(1, 0.5, 0.5).unwrap();
        let b = bag_bound(&[0.5], &[0.5], &ch, &lv(&[1]));
        assert!((b - 0.5f64.ln()).abs() < 1e-15);
        assert!((b + 0.6931).abs() < 1e-4);
    }

    #[test]
    fn bound_is_tight_at_the_e_step_posterior() {
        let ch = NoiseChannel::new(vec![0.3, 0.1, 0.05], vec![0.0, 0.9, 0.4]).unwrap();
        let prior = [0.35, 0.6, 0.02];
        let z = lv(&[1, 0, 1]);
        let q = e_step(&ch, &prior, &z).unwrap();
        let ll = bag_log_likelihood(&prior, &ch, &z);
        assert!((bag_bound(&q, &prior, &ch, &z) - ll).abs() < 1e-12);
        for other in [[0.5, 0.5, 0.5], [0.0, 1.0, 0.3], [0.9, 0.1, 0.7]] {
            assert!(bag_bound(&other, &prior, &ch, &z) <= ll + 1e-12);
        }
    }

    #[test]
    fn channel_reestimation_counts() {
        let ds = dataset(&[&[0, 1], &[0, 1], &[1, 0], &[1, 0]]);
        let post = Posterior {
            ids: vec![],
            q: vec![vec![0.0, 1.0], vec![0.0, 0.5], vec![1.0, 0.5], vec![1.0, 0.0]],
        };
        let ch = reestimate_channel(&ds, &post, &NoiseChannel::noiseless(2));
        // relation 1: Q(0) mass 0 + .5 + .5 + 1 = 2, of which .5 observed as 1
        assert!((ch.phi0[1] - 0.25).abs() < 1e-15);
        // relation 1: Q(1) mass 2, of which .5 observed as 0
        assert!((ch.phi1[1] - 0.25).abs() < 1e-15);
        assert_eq!(ch.phi0[0], 0.0);
        assert_eq!(ch.phi1[0], 0.0);
    }
}
