//! Dense feed-forward network with rectifier hidden layers and a linear head.
//!
//! Weights are stored row-major as `outputs × inputs`, so a row is the fan-in of
//! one unit. Backprop skips rows whose upstream gradient is exactly zero, which
//! keeps the DQN update cheap: only one of the 880 heads carries a residual per
//! sample.

use rand::Rng;

use super::NnError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
            activation,
        }
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[T] {
        &self.weights[j * self.inputs..(j + 1) * self.inputs]
    }

    #[inline]
    fn unit(&self, j: usize, x: &[T]) -> T {
        let z = self.bias[j] + dot(self.row(j), x);
        match self.activation {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
        }
    }
}

/// Four independent accumulators so the reduction pipelines.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
}

impl<T: Real> Mlp<T> {
    /// Random network with rectifier hidden layers and a linear output.
    ///
    /// Weights are uniform in ±√(6 / (fan_in + fan_out)); biases start at zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.random_range(-limit..limit));
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(NnError::InvalidArchitecture(format!("{sizes:?}")));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { Activation::Relu };
                Dense::zeros(w[0], w[1], act)
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::InvalidArchitecture("no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NnError::InvalidArchitecture(format!("layer {i} has inconsistent storage")));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(NnError::InvalidArchitecture(format!(
                    "layer widths {} → {} do not chain",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    /// All parameters in a fixed order: per layer, weights then biases.
    pub fn params(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, NnError> {
        let mut tape = Tape::new(self);
        self.forward_tape(x, &mut tape, None)?;
        Ok(tape.output().to_vec())
    }

    /// Forward pass that keeps every activation for [`Mlp::backward`].
    ///
    /// With `only_output = Some(j)` the last layer evaluates unit `j` alone; the
    /// other output slots are left at zero.
    pub fn forward_tape(&self, x: &[T], tape: &mut Tape<T>, only_output: Option<usize>) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if !tape.fits(self) {
            *tape = Tape::new(self);
        }
        tape.acts[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = tape.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            match only_output {
                Some(j) if l == last => {
                    if j >= layer.outputs {
                        return Err(NnError::ShapeMismatch {
                            expected: layer.outputs,
                            got: j,
                        });
                    }
                    out.iter_mut().for_each(|v| *v = T::zero());
                    out[j] = layer.unit(j, input);
                }
                _ => {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = layer.unit(j, input);
                    }
                }
            }
        }
        Ok(())
    }

    /// Accumulates into `grads` the parameter gradient of a scalar loss whose
    /// derivative with respect to the network output is `d_out`.
    pub fn backward(&self, tape: &mut Tape<T>, d_out: &[T], grads: &mut Gradients<T>) -> Result<(), NnError> {
        if d_out.len() != self.output_dim() {
            return Err(NnError::ShapeMismatch {
                expected: self.output_dim(),
                got: d_out.len(),
            });
        }
        let n = self.layers.len();
        tape.deltas[n].copy_from_slice(d_out);
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let (lower, upper) = tape.deltas.split_at_mut(l + 1);
            let delta = &mut upper[0];
            if layer.activation == Activation::Relu {
                for (d, a) in delta.iter_mut().zip(&tape.acts[l + 1]) {
                    if *a <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            let input = &tape.acts[l];
            let d_in = &mut lower[l];
            d_in.iter_mut().for_each(|v| *v = T::zero());
            let gw = &mut grads.weights[l];
            let gb = &mut grads.bias[l];
            for (j, &g) in delta.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                gb[j] += g;
                let span = j * layer.inputs..(j + 1) * layer.inputs;
                axpy(g, input, &mut gw[span.clone()]);
                axpy(g, &layer.weights[span], d_in);
            }
        }
        Ok(())
    }

    /// Target update `θ' ← β·θ + (1 − β)·θ'`, applied to `self` as the target.
    pub fn soft_blend(&mut self, source: &Mlp<T>, beta: T) -> Result<(), NnError> {
        if self.sizes() != source.sizes() {
            return Err(NnError::InvalidArchitecture(format!(
                "cannot blend {:?} into {:?}",
                source.sizes(),
                self.sizes()
            )));
        }
        let keep = T::one() - beta;
        for (t, s) in self.params_mut().zip(source.params()) {
            *t = beta * s + keep * *t;
        }
        Ok(())
    }
}

/// Activations and backprop scratch for one network shape.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
}

impl<T: Real> Tape<T> {
    pub fn new(net: &Mlp<T>) -> Self {
        let sizes = net.sizes();
        Self {
            acts: sizes.iter().map(|&s| vec![T::zero(); s]).collect(),
            deltas: sizes.iter().map(|&s| vec![T::zero(); s]).collect(),
        }
    }

    fn fits(&self, net: &Mlp<T>) -> bool {
        self.acts.len() == net.layers.len() + 1
            && self.acts[0].len() == net.input_dim()
            && net.layers.iter().zip(&self.acts[1..]).all(|(l, a)| l.outputs == a.len())
    }

    pub fn output(&self) -> &[T] {
        &self.acts[self.acts.len() - 1]
    }

    pub fn input_gradient(&self) -> &[T] {
        &self.deltas[0]
    }
}

/// Parameter gradients laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            weights: net.layers().iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            bias: net.layers().iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.values_mut().for_each(|g| *g = T::zero());
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.weights
            .iter_mut()
            .zip(self.bias.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn scale(&mut self, k: T) {
        self.values_mut().for_each(|g| *g *= k);
    }

    pub fn norm(&self) -> T {
        self.values().map(|g| g * g).sum::<T>().sqrt()
    }

    /// Rescales to `max_norm` when the L2 norm exceeds it. Returns whether it did.
    pub fn clip_norm(&mut self, max_norm: T) -> bool {
        let norm = self.norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
            true
        } else {
            false
        }
    }
}
