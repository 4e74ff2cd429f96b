use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adadelta::Adadelta;
use super::posterior::{
    e_step, init_posterior, lower_bound_from_priors, reestimate_channel, Posterior,
};
use crate::datagen::Dataset;
use crate::encoder::{accumulate_gradients, forward, Bag, EncoderConfig, EncoderParams, Mode, Selector};
use crate::error::{Error, Result};
use crate::noise_channel::NoiseChannel;
use crate::{seed, PROB_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiUpdate {
    Fixed,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Nem,
    Baseline,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nem" => Ok(TrainMode::Nem),
            "baseline" => Ok(TrainMode::Baseline),
            _ => Err(Error::Config(format!("unknown training mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainMode::Nem => "nem",
            TrainMode::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub selector: Selector,
    /// Optimizer updates per M-step.
    pub delta: usize,
    pub em_iters: usize,
    pub batch_size: usize,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    pub learning_rate: f64,
    /// Not serialized: config files give the channel in catalog-relative
    /// form, resolved by the caller.
    #[serde(skip)]
    pub channel: NoiseChannel,
    pub seed: u64,
    pub phi_update: PhiUpdate,
    /// Compute E-step priors with dropout active instead of in eval mode.
    pub estep_dropout: bool,
    /// Stop once the bound's relative improvement stays below this for two
    /// consecutive iterations.
    pub convergence_tol: Option<f64>,
    /// Record wall-clock time in the trace. Off by default so that traces
    /// are reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            selector: Selector::Attention,
            delta: 2000,
            em_iters: 10,
            batch_size: 160,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
            learning_rate: 1.0,
            channel: NoiseChannel::noiseless(0),
            seed: 0,
            phi_update: PhiUpdate::Fixed,
            estep_dropout: false,
            convergence_tol: Some(1e-4),
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_relations: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train: {m}")));
        if self.delta == 0 {
            return bad("delta must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0) {
            return bad("adadelta_rho must lie in (0, 1)");
        }
        if !(self.adadelta_eps > 0.0) || !(self.learning_rate > 0.0) {
            return bad("adadelta_eps and learning_rate must be positive");
        }
        if self.channel.len() != n_relations {
            return Err(Error::LengthMismatch {
                expected: n_relations,
                got: self.channel.len(),
            });
        }
        Ok(())
    }
}

/// One line of the JSON-lines trace, written after each EM iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Bound after this iteration's E-step.
    pub lower_bound: f64,
    /// Bound at the same parameters with the previous posterior.
    pub lower_bound_before_estep: f64,
    /// Mean Q over labels observed but not true, after the E-step.
    pub mean_q_noisy: Option<f64>,
    /// Mean Q over labels observed and true, after the E-step.
    pub mean_q_clean: Option<f64>,
    /// `mean_q_noisy` of the posterior this iteration's M-step trained on.
    pub mean_q_noisy_before: Option<f64>,
    /// Mean per-bag loss over the M-step's updates.
    pub train_loss: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub posterior: Posterior,
    pub channel: NoiseChannel,
    pub trace: Vec<TraceRecord>,
}

/// Classifier probabilities for every bag, floored away from 0 and 1.
pub fn bag_priors(
    ds: &Dataset,
    params: &EncoderParams,
    selector: Selector,
    mode: Mode,
    rng_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    ds.bags
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut p = forward(params, b, selector, mode, seed::child(rng_seed, i as u64))?;
            for x in &mut p {
                *x = x.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            }
            Ok(p)
        })
        .collect()
}

pub fn predict(params: &EncoderParams, bag: &Bag, selector: Selector) -> Result<Vec<f64>> {
    crate::encoder::predict(params, bag, selector)
}

/// Applies `delta` minibatch updates against the soft targets `targets`.
/// Batches come from one seeded permutation of the bags, cycled from the
/// start when `delta` exceeds the number of batches. Returns the mean loss.
fn m_step(
    ds: &Dataset,
    params: &mut EncoderParams,
    opt: &mut Adadelta,
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
    iter: usize,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = seed::rng(seed::child(seed::derive(cfg.seed, "shuffle"), iter as u64));
    order.shuffle(&mut rng);
    let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
    let dropout_base = seed::child(seed::derive(cfg.seed, "dropout"), iter as u64);
    let mut grads = params.weights.zeros_like();
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);
    for update in 0..cfg.delta {
        let batch = batches[update % batches.len()];
        let update_seed = seed::child(dropout_base, update as u64);
        grads.fill(0.0);
        let weight = 1.0 / batch.len() as f64;
        for (slot, &b) in batch.iter().enumerate() {
            let bag = &ds.bags[b];
            let l = accumulate_gradients(
                params,
                bag,
                cfg.selector,
                &targets[b],
                Mode::Train,
                seed::child(update_seed, slot as u64),
                weight,
                &mut grads,
            )?;
            if !l.is_finite() {
                return Err(Error::NonFinite {
                    bag: bag.id.clone(),
                    iter,
                });
            }
            loss_sum += l;
            loss_count += 1;
        }
        opt.step(params, &grads)?;
    }
    Ok(loss_sum / loss_count as f64)
}

/// Shared loop for both trainers. The baseline keeps Q fixed at the observed
/// labels; with a noiseless channel the E-step reproduces them exactly, so
/// the two runs coincide. `encoder.n_relations` comes from the dataset, and
/// so does `encoder.vocab_size` when it is 0.
pub fn train(
    ds: &Dataset,
    encoder: EncoderConfig,
    cfg: &TrainConfig,
    mode: TrainMode,
) -> Result<TrainOutcome> {
    let n_rel = ds.catalog.len();
    cfg.validate(n_rel)?;
    if ds.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let mut encoder = encoder;
    encoder.n_relations = n_rel;
    if encoder.vocab_size == 0 {
        encoder.vocab_size = ds.max_token().map_or(1, |t| t + 1);
    }
    let mut params = EncoderParams::init(encoder, seed::derive(cfg.seed, "init"))?;
    let mut opt = Adadelta::new(&params, cfg.adadelta_rho, cfg.adadelta_eps, cfg.learning_rate);
    let mut posterior = init_posterior(ds);
    let mut channel = cfg.channel.clone();
    let mut trace = Vec::with_capacity(cfg.em_iters);
    let noisy = |z: bool, y: bool| z && !y;
    let clean = |z: bool, y: bool| z && y;
    let mut slow_iters = 0;

    for iter in 1..=cfg.em_iters {
        let started = Instant::now();
        let q_noisy_before = posterior.mean_where(ds, noisy);
        let train_loss = m_step(ds, &mut params, &mut opt, &posterior.q, cfg, iter)?;
        if mode == TrainMode::Nem && cfg.phi_update == PhiUpdate::ClosedForm {
            channel = reestimate_channel(ds, &posterior, &channel);
        }

        let prior_mode = if cfg.estep_dropout { Mode::Train } else { Mode::Eval };
        let estep_seed = seed::child(seed::derive(cfg.seed, "estep"), iter as u64);
        let priors = bag_priors(ds, &params, cfg.selector, prior_mode, estep_seed)?;
        let bound_before = lower_bound_from_priors(ds, &priors, &channel, &posterior);
        if mode == TrainMode::Nem {
            for ((q, prior), bag) in posterior.q.iter_mut().zip(&priors).zip(&ds.bags) {
                *q = e_step(&channel, prior, &bag.observed)?;
            }
        }
        let bound = lower_bound_from_priors(ds, &priors, &channel, &posterior);
        if !bound.is_finite() {
            return Err(Error::NonFinite {
                bag: "<lower bound>".into(),
                iter,
            });
        }

        let previous = trace.last().map(|t: &TraceRecord| t.lower_bound);
        trace.push(TraceRecord {
            iter,
            lower_bound: bound,
            lower_bound_before_estep: bound_before,
            mean_q_noisy: posterior.mean_where(ds, noisy),
            mean_q_clean: posterior.mean_where(ds, clean),
            mean_q_noisy_before: q_noisy_before,
            train_loss,
            wall_ms: if cfg.record_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        });

        if let (Some(tol), Some(prev)) = (cfg.convergence_tol, previous) {
            let rel = (bound - prev) / prev.abs().max(PROB_FLOOR);
            slow_iters = if rel < tol { slow_iters + 1 } else { 0 };
            if slow_iters >= 2 {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params,
        posterior,
        channel,
        trace,
    })
}

pub fn train_nem(ds: &Dataset, encoder: EncoderConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train(ds, encoder, cfg, TrainMode::Nem)
}

/// Maximizes the likelihood of the observed labels directly, treating them as
/// clean.
pub fn train_baseline(ds: &Dataset, encoder: EncoderConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train(ds, encoder, cfg, TrainMode::Baseline)
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = Vec::new();
    for t in trace {
        serde_json::to_writer(&mut out, t)?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
