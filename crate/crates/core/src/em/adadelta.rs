use crate::encoder::{EncoderParams, Gradients, Tensors};
use crate::error::{Error, Result};

/// Adadelta with an extra global learning-rate multiplier.
///
/// ```text
/// E[g^2]  <- rho E[g^2] + (1 - rho) g^2
/// dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
/// E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
/// x       <- x + lr * dx
/// ```
#[derive(Debug, Clone)]
pub struct Adadelta {
    pub rho: f64,
    pub eps: f64,
    pub lr: f64,
    sq_grad: Tensors,
    sq_delta: Tensors,
}

impl Adadelta {
    pub fn new(params: &EncoderParams, rho: f64, eps: f64, lr: f64) -> Self {
        Adadelta {
            rho,
            eps,
            lr,
            sq_grad: params.weights.zeros_like(),
            sq_delta: params.weights.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut EncoderParams, grads: &Gradients) -> Result<()> {
        let (rho, eps, lr) = (self.rho, self.eps, self.lr);
        let tensors = params
            .weights
            .iter_mut()
            .into_iter()
            .zip(grads.iter())
            .zip(self.sq_grad.iter_mut())
            .zip(self.sq_delta.iter_mut());
        for (((x, g), eg), ed) in tensors {
            if x.shape() != g.shape() || x.shape() != eg.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {:?} vs gradient {:?}",
                    x.shape(),
                    g.shape()
                )));
            }
            for i in 0..x.data.len() {
                let gi = g.data[i];
                let acc_g = rho * eg.data[i] + (1.0 - rho) * gi * gi;
                let dx = -((ed.data[i] + eps).sqrt() / (acc_g + eps).sqrt()) * gi;
                eg.data[i] = acc_g;
                ed.data[i] = rho * ed.data[i] + (1.0 - rho) * dx * dx;
                x.data[i] += lr * dx;
            }
        }
        Ok(())
    }

    /// Running averages `(E[g^2], E[dx^2])`.
    pub fn accumulators(&self) -> (&Tensors, &Tensors) {
        (&self.sq_grad, &self.sq_delta)
    }
}

/// The same update on one scalar, for checking traces by hand.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdadeltaScalar {
    pub sq_grad: f64,
    pub sq_delta: f64,
}

impl AdadeltaScalar {
    pub fn step(&mut self, x: &mut f64, g: f64, rho: f64, eps: f64, lr: f64) {
        self.sq_grad = rho * self.sq_grad + (1.0 - rho) * g * g;
        let dx = -((self.sq_delta + eps).sqrt() / (self.sq_grad + eps).sqrt()) * g;
        self.sq_delta = rho * self.sq_delta + (1.0 - rho) * dx * dx;
        *x += lr * dx;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;

    const RHO: f64 = 0.95;
    const EPS: f64 = 1e-6;

    fn params() -> EncoderParams {
        EncoderParams::init(
            EncoderConfig {
                vocab_size: 6,
                word_dim: 2,
                pos_dim: 1,
                max_len: 4,
                window: 2,
                kernels: 2,
                n_relations: 2,
                dropout: 0.0,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters_and_decays_accumulators() {
        let mut p = params();
        let before = p.clone();
        let mut opt = Adadelta::new(&p, RHO, EPS, 1.0);
        let mut g = p.weights.zeros_like();
        g.fill(0.3);
        opt.step(&mut p, &g).unwrap();
        let eg = opt.accumulators().0.word_emb.data[0];
        p = before.clone();
        let zero = p.weights.zeros_like();
        opt.step(&mut p, &zero).unwrap();
        assert_eq!(p, before);
        assert!((opt.accumulators().0.word_emb.data[0] - RHO * eg).abs() < 1e-18);
    }

    #[test]
    fn first_step_closed_form() {
        let g = 0.7;
        let mut x = 1.0;
        let mut s = AdadeltaScalar::default();
        s.step(&mut x, g, RHO, EPS, 1.0);
        let want = 1.0 - EPS.sqrt() / ((1.0 - RHO) * g * g + EPS).sqrt() * g;
        assert!((x - want).abs() < 1e-16);
    }

    #[test]
    fn two_step_trace_by_hand() {
        let g = 0.5;
        let mut x = 0.0;
        let mut s = AdadeltaScalar::default();
        s.step(&mut x, g, RHO, EPS, 1.0);
        s.step(&mut x, g, RHO, EPS, 1.0);

        let eg1 = 0.05 * 0.25;
        let dx1 = -(1e-6f64).sqrt() / (eg1 + 1e-6f64).sqrt() * 0.5;
        let ed1 = 0.05 * dx1 * dx1;
        let eg2 = 0.95 * eg1 + 0.05 * 0.25;
        let dx2 = -(ed1 + 1e-6f64).sqrt() / (eg2 + 1e-6f64).sqrt() * 0.5;
        assert!((x - (dx1 + dx2)).abs() < 1e-16);
        assert!((s.sq_delta - (0.95 * ed1 + 0.05 * dx2 * dx2)).abs() < 1e-20);
    }

    #[test]
    fn tensor_update_matches_scalar_update() {
        let mut p = params();
        let x0 = p.weights.kernels.data[3];
        let mut opt = Adadelta::new(&p, RHO, EPS, 0.5);
        let mut g = p.weights.zeros_like();
        g.kernels.data[3] = -1.2;
        let mut s = AdadeltaScalar::default();
        let mut x = x0;
        for _ in 0..3 {
            opt.step(&mut p, &g).unwrap();
            s.step(&mut x, -1.2, RHO, EPS, 0.5);
        }
        assert_eq!(p.weights.kernels.data[3], x);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = params();
        let mut opt = Adadelta::new(&p, RHO, EPS, 1.0);
        let mut g = p.weights.zeros_like();
        g.attn = crate::encoder::Matrix::zeros(1, 1);
        assert!(opt.step(&mut p, &g).is_err());
    }
}
