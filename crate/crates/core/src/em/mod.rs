//! Noisy-label EM: closed-form posterior over the latent true labels, a
//! generalized M-step of Adadelta updates, and the variational bound that
//! ties the two together. The baseline trainer runs the same M-step against
//! the observed labels directly.

mod adadelta;
mod posterior;
mod trainer;

pub use adadelta::{Adadelta, AdadeltaScalar};
pub use posterior::{
    bag_bound, bag_log_likelihood, e_step, init_posterior, lower_bound, lower_bound_from_priors,
    log_likelihood_from_priors, m_step_loss, reestimate_channel, Posterior,
};
pub use trainer::{
    bag_priors, predict, read_trace, train, train_baseline, train_nem, write_trace, PhiUpdate,
    TraceRecord, TrainConfig, TrainMode, TrainOutcome,
};
