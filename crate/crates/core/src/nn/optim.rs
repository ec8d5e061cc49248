use super::{Gradients, Mlp};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// `θ ← θ − η·g`
    Sgd,
    /// Bias-corrected adaptive moments.
    Adam,
}

#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: i32,
    moments: Option<(Gradients<T>, Gradients<T>)>,
}

impl<T: Real> Optimizer<T> {
    pub fn sgd(lr: T) -> Self {
        Self::with_kind(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: T) -> Self {
        Self::with_kind(OptimizerKind::Adam, lr)
    }

    pub fn with_kind(kind: OptimizerKind, lr: T) -> Self {
        Self {
            kind,
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            moments: None,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn apply_update(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>) {
        self.step = self.step.saturating_add(1);
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.lr;
                for (p, g) in net.params_mut().zip(grads.values()) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let (m, v) = self
                    .moments
                    .get_or_insert_with(|| (Gradients::zeros_like(net), Gradients::zeros_like(net)));
                let (b1, b2) = (self.beta1, self.beta2);
                let c1 = T::one() - b1.powi(self.step);
                let c2 = T::one() - b2.powi(self.step);
                let (lr, eps) = (self.lr, self.eps);
                for (((p, g), mi), vi) in net
                    .params_mut()
                    .zip(grads.values())
                    .zip(m.values_mut())
                    .zip(v.values_mut())
                {
                    *mi = b1 * *mi + (T::one() - b1) * g;
                    *vi = b2 * *vi + (T::one() - b2) * g * g;
                    let m_hat = *mi / c1;
                    let v_hat = *vi / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}
