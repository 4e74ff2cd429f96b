//! The observation channel `p(z | y)`, factorized over relations: each
//! observed bit `z[r]` depends only on the true bit `y[r]` through the pair
//! `(phi0[r], phi1[r])`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::{LabelVector, RelationCatalog};
use crate::seed;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    /// `p(z[r]=1 | y[r]=0)`
    pub phi0: Vec<f64>,
    /// `p(z[r]=0 | y[r]=1)`
    pub phi1: Vec<f64>,
}

/// Channel as written in a config file: explicit per-relation arrays, or one
/// pair for NA and one shared by every other relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Explicit { phi0: Vec<f64>, phi1: Vec<f64> },
    Shorthand { na: PhiPair, other: PhiPair },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPair {
    pub phi0: f64,
    pub phi1: f64,
}

impl ChannelSpec {
    pub fn resolve(&self, catalog: &RelationCatalog) -> Result<NoiseChannel> {
        match self {
            ChannelSpec::Explicit { phi0, phi1 } => {
                let ch = NoiseChannel::new(phi0.clone(), phi1.clone())?;
                if ch.len() != catalog.len() {
                    return Err(Error::LengthMismatch {
                        expected: catalog.len(),
                        got: ch.len(),
                    });
                }
                Ok(ch)
            }
            ChannelSpec::Shorthand { na, other } => {
                let pick = |r: usize| if r == catalog.na_index() { *na } else { *other };
                NoiseChannel::new(
                    (0..catalog.len()).map(|r| pick(r).phi0).collect(),
                    (0..catalog.len()).map(|r| pick(r).phi1).collect(),
                )
            }
        }
    }
}

impl NoiseChannel {
    pub fn new(phi0: Vec<f64>, phi1: Vec<f64>) -> Result<Self> {
        if phi0.len() != phi1.len() {
            return Err(Error::LengthMismatch {
                expected: phi0.len(),
                got: phi1.len(),
            });
        }
        if let Some(bad) = phi0.iter().chain(&phi1).find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("channel probability {bad} outside [0, 1]")));
        }
        Ok(NoiseChannel { phi0, phi1 })
    }

    pub fn uniform(len: usize, phi0: f64, phi1: f64) -> Result<Self> {
        Self::new(vec![phi0; len], vec![phi1; len])
    }

    /// Identity channel: `z = y` with probability one.
    pub fn noiseless(len: usize) -> Self {
        NoiseChannel {
            phi0: vec![0.0; len],
            phi1: vec![0.0; len],
        }
    }

    /// NA gets `(0.3, 0)`, every other relation `(0, 0.9)`.
    pub fn distant_supervision_default(catalog: &RelationCatalog) -> Self {
        ChannelSpec::Shorthand {
            na: PhiPair { phi0: 0.3, phi1: 0.0 },
            other: PhiPair { phi0: 0.0, phi1: 0.9 },
        }
        .resolve(catalog)
        .expect("constants are valid probabilities")
    }

    pub fn len(&self) -> usize {
        self.phi0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi0.is_empty()
    }

    pub fn is_noiseless(&self) -> bool {
        self.phi0.iter().chain(&self.phi1).all(|&p| p == 0.0)
    }

    /// `p(z[r] = z_bit | y[r] = y_bit)`
    #[inline]
    pub fn prob(&self, r: usize, y_bit: bool, z_bit: bool) -> f64 {
        match (y_bit, z_bit) {
            (false, true) => self.phi0[r],
            (false, false) => 1.0 - self.phi0[r],
            (true, false) => self.phi1[r],
            (true, true) => 1.0 - self.phi1[r],
        }
    }

    /// `p(z | y)` as the product of per-relation factors.
    pub fn bag_prob(&self, y: &LabelVector, z: &LabelVector) -> Result<f64> {
        for v in [y, z] {
            if v.len() != self.len() {
                return Err(Error::LengthMismatch {
                    expected: self.len(),
                    got: v.len(),
                });
            }
        }
        Ok((0..self.len())
            .map(|r| self.prob(r, y.get(r), z.get(r)))
            .product())
    }

    /// Draws `z ~ p(z | y)` with every bit independent.
    pub fn sample(&self, y: &LabelVector, rng_seed: u64) -> Result<LabelVector> {
        if y.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: y.len(),
            });
        }
        let mut rng = seed::rng(rng_seed);
        Ok(LabelVector::from_bits(
            (0..self.len())
                .map(|r| rng.gen::<f64>() < self.prob(r, y.get(r), true))
                .collect(),
        ))
    }
}

/// Flips every bit of `y` independently with probability `p_f`.
pub fn flip_noise(y: &LabelVector, p_f: f64, rng_seed: u64) -> Result<LabelVector> {
    if !(0.0..=1.0).contains(&p_f) {
        return Err(Error::Config(format!("flip probability {p_f} outside [0, 1]")));
    }
    let mut rng = seed::rng(rng_seed);
    Ok(LabelVector::from_bits(
        y.bits().iter().map(|&b| b ^ (rng.gen::<f64>() < p_f)).collect(),
    ))
}
