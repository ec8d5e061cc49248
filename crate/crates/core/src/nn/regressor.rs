//! Scalar regression on top of [`Mlp`] with z-scored inputs and target.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Gradients, Mlp, NnError, Optimizer, Tape};
use crate::scalar::Real;

/// Per-feature affine map `(x − mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    /// Fits column means and standard deviations. Constant columns get scale 1.
    pub fn fit(rows: &[Vec<T>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = T::from_usize(rows.len().max(1)).unwrap();
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += *v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (*v - *m) * (*v - *m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::lit(1e-12) {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[T], out: &mut [T]) {
        for ((o, v), (m, s)) in out.iter_mut().zip(x).zip(self.mean.iter().zip(&self.scale)) {
            *o = (*v - *m) / *s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec<T> {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regressor<T> {
    pub net: Mlp<T>,
    pub inputs: Standardizer<T>,
    pub target: Standardizer<T>,
}

impl<T: Real> Regressor<T> {
    pub fn predict(&self, x: &[T]) -> Result<T, NnError> {
        let mut z = vec![T::zero(); x.len()];
        self.inputs.apply(x, &mut z);
        let y = self.net.forward(&z)?[0];
        Ok(y * self.target.scale[0] + self.target.mean[0])
    }

    /// Trains with Adam on mean squared error over shuffled mini-batches.
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<T>],
        y: &[T],
        spec: &FitSpec<T>,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(NnError::InvalidArchitecture(format!(
                "need matching non-empty data, got {} inputs and {} targets",
                x.len(),
                y.len()
            )));
        }
        let dim = x[0].len();
        let inputs = Standardizer::fit(x);
        let y_rows: Vec<Vec<T>> = y.iter().map(|&v| vec![v]).collect();
        let target = Standardizer::fit(&y_rows);

        let mut sizes = vec![dim];
        sizes.extend(&spec.hidden);
        sizes.push(1);
        let mut net = Mlp::new(&sizes, rng)?;

        let xs: Vec<Vec<T>> = x
            .iter()
            .map(|r| {
                let mut z = vec![T::zero(); dim];
                inputs.apply(r, &mut z);
                z
            })
            .collect();
        let ys: Vec<T> = y.iter().map(|&v| (v - target.mean[0]) / target.scale[0]).collect();

        let mut opt = Optimizer::adam(spec.lr);
        let mut tape = Tape::new(&net);
        let mut grads = Gradients::zeros_like(&net);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let batch = spec.batch_size.max(1);
        for epoch in 0..spec.epochs {
            order.shuffle(rng);
            let mut epoch_loss = T::zero();
            for chunk in order.chunks(batch) {
                grads.clear();
                let m = T::from_usize(chunk.len()).unwrap();
                for &i in chunk {
                    net.forward_tape(&xs[i], &mut tape, None)?;
                    let r = tape.output()[0] - ys[i];
                    epoch_loss += r * r;
                    net.backward(&mut tape, &[T::lit(2.0) * r / m], &mut grads)?;
                }
                opt.apply_update(&mut net, &grads);
            }
            if !epoch_loss.is_finite() {
                return Err(NnError::NonFiniteLoss { step: epoch });
            }
        }
        Ok(Self { net, inputs, target })
    }

    pub fn rmse(&self, x: &[Vec<T>], y: &[T]) -> Result<T, NnError> {
        let mut sum = T::zero();
        for (xi, yi) in x.iter().zip(y) {
            let e = self.predict(xi)? - *yi;
            sum += e * e;
        }
        Ok((sum / T::from_usize(y.len().max(1)).unwrap()).sqrt())
    }
}
