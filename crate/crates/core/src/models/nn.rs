//! Small dense and convolutional networks trained with Adam.
//!
//! Parameters live in one flat vector per network so the optimizer and the
//! finite-difference checker can treat every architecture alike.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::linear::LogReg;
use super::{encode_labels, softmax, ClassifierSpec, Hyperparams, TrainSet};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnParams {
    pub filters: usize,
    pub kernel: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for CnnParams {
    fn default() -> Self {
        Self {
            filters: 16,
            kernel: 3,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 64,
        }
    }
}

/// Training-loss history: the full-set loss before the first update, then
/// the mean mini-batch loss of each epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NnTrace {
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

/// Common surface for the optimizer and the gradient checker.
trait Net {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Cross-entropy of one sample; adds its gradient into `grad`.
    fn sample_grad(&self, row: &[f64], target: usize, grad: &mut [f64]) -> f64;
}

fn cross_entropy(p: &[f64], target: usize) -> f64 {
    -p[target].max(f64::MIN_POSITIVE).ln()
}

/// Mean loss over `rows`, gradient averaged into `grad`.
fn batch_grad<N: Net>(net: &N, x: &FeatureMatrix, y: &[usize], rows: &[usize], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for &i in rows {
        loss += net.sample_grad(x.row(i), y[i], grad);
    }
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    loss / n
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Shuffled mini-batch Adam. Epoch `e` shuffles with stream `e + 1`;
/// stream 0 is reserved for initialization.
fn train<N: Net>(
    net: &mut N,
    data: &TrainSet<'_>,
    lr: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> NnTrace {
    let n = data.x.n_samples();
    let mut grad = vec![0.0; net.params().len()];
    let mut order: Vec<usize> = (0..n).collect();
    let initial_loss = batch_grad(net, data.x, &data.y, &order, &mut grad);
    let mut adam = Adam::new(lr, grad.len());
    let mut epoch_losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut rng::derive(seed, epoch as u64 + 1));
        let mut total = 0.0;
        for batch in order.chunks(batch_size) {
            total += batch_grad(net, data.x, &data.y, batch, &mut grad) * batch.len() as f64;
            adam.step(net.params_mut(), &grad);
        }
        epoch_losses.push(total / n as f64);
    }
    NnTrace {
        initial_loss,
        epoch_losses,
    }
}

fn he_init(params: &mut [f64], fan_in: usize, rng: &mut impl rand::Rng) {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    params.iter_mut().for_each(|p| *p = normal.sample(rng));
}

/// Fully connected ReLU network with a softmax output. Layer `l` stores its
/// `out × in` weights row-major followed by its biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Mlp {
    pub(crate) fn init(input: usize, hidden: &[usize], n_classes: usize, seed: u64) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(n_classes);
        let total = sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        let mut net = Self {
            sizes,
            params: vec![0.0; total],
        };
        let mut rng = rng::derive(seed, 0);
        let mut offset = 0;
        for w in net.sizes.clone().windows(2) {
            let (fan_in, out) = (w[0], w[1]);
            he_init(&mut net.params[offset..offset + out * fan_in], fan_in, &mut rng);
            offset += out * (fan_in + 1);
        }
        net
    }

    pub(crate) fn fit(params: &MlpParams, data: &TrainSet<'_>, seed: u64) -> (Self, NnTrace) {
        let mut net = Self::init(data.x.n_features(), &params.hidden, data.n_classes, seed);
        let trace = train(
            &mut net,
            data,
            params.learning_rate,
            params.epochs,
            params.batch_size,
            seed,
        );
        (net, trace)
    }

    /// Activations of every layer; the last entry holds raw logits.
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.sizes.len() - 1;
        let mut acts = vec![row.to_vec()];
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + out * fan_in];
            let b = &self.params[offset + out * fan_in..offset + out * (fan_in + 1)];
            let prev = &acts[l];
            let next: Vec<f64> = (0..out)
                .map(|o| {
                    let z = b[o] + w[o * fan_in..(o + 1) * fan_in].iter().zip(prev).map(|(a, v)| a * v).sum::<f64>();
                    if l + 1 < layers {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(next);
            offset += out * (fan_in + 1);
        }
        acts
    }

    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        let acts = self.forward(row);
        out.copy_from_slice(acts.last().expect("output layer"));
        softmax(out);
    }
}

impl Net for Mlp {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn sample_grad(&self, row: &[f64], target: usize, grad: &mut [f64]) -> f64 {
        let acts = self.forward(row);
        let layers = self.sizes.len() - 1;
        let mut delta = acts[layers].clone();
        softmax(&mut delta);
        let loss = cross_entropy(&delta, target);
        delta[target] -= 1.0;
        let mut offsets: Vec<usize> = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[1] * (w[0] + 1);
        }
        for l in (0..layers).rev() {
            let (fan_in, out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let prev = &acts[l];
            for o in 0..out {
                let d = delta[o];
                for (g, a) in grad[off + o * fan_in..off + (o + 1) * fan_in].iter_mut().zip(prev) {
                    *g += d * a;
                }
                grad[off + out * fan_in + o] += d;
            }
            if l > 0 {
                let w = &self.params[off..off + out * fan_in];
                delta = (0..fan_in)
                    .map(|i| {
                        if prev[i] > 0.0 {
                            (0..out).map(|o| w[o * fan_in + i] * delta[o]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        loss
    }
}

/// Single-channel 1D convolution (valid padding) → ReLU → global max-pool →
/// dense softmax. Layout: conv weights `filters × kernel`, conv biases,
/// dense weights `n_classes × filters`, dense biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cnn1d {
    pub input_len: usize,
    pub filters: usize,
    pub kernel: usize,
    pub n_classes: usize,
    pub params: Vec<f64>,
}

impl Cnn1d {
    pub(crate) fn init(input_len: usize, params: &CnnParams, n_classes: usize, seed: u64) -> Result<Self> {
        if params.kernel > input_len {
            return Err(Error::Fit(format!(
                "CNN1D kernel {} longer than the {input_len}-feature input",
                params.kernel
            )));
        }
        let (f, k) = (params.filters, params.kernel);
        let mut net = Self {
            input_len,
            filters: f,
            kernel: k,
            n_classes,
            params: vec![0.0; f * k + f + n_classes * f + n_classes],
        };
        let mut rng = rng::derive(seed, 0);
        he_init(&mut net.params[..f * k], k, &mut rng);
        let dense = f * k + f;
        he_init(&mut net.params[dense..dense + n_classes * f], f, &mut rng);
        Ok(net)
    }

    pub(crate) fn fit(params: &CnnParams, data: &TrainSet<'_>, seed: u64) -> Result<(Self, NnTrace)> {
        let mut net = Self::init(data.x.n_features(), params, data.n_classes, seed)?;
        let trace = train(
            &mut net,
            data,
            params.learning_rate,
            params.epochs,
            params.batch_size,
            seed,
        );
        Ok((net, trace))
    }

    /// Pooled activations, the winning position of each filter, and logits.
    fn forward(&self, row: &[f64]) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
        let (f, k, c) = (self.filters, self.kernel, self.n_classes);
        let positions = self.input_len - k + 1;
        let conv_w = &self.params[..f * k];
        let conv_b = &self.params[f * k..f * k + f];
        let dense_w = &self.params[f * k + f..f * k + f + c * f];
        let dense_b = &self.params[f * k + f + c * f..];
        let mut pooled = vec![0.0; f];
        let mut winner = vec![0; f];
        for fi in 0..f {
            let w = &conv_w[fi * k..(fi + 1) * k];
            let mut best = f64::NEG_INFINITY;
            for t in 0..positions {
                let z = conv_b[fi] + w.iter().zip(&row[t..t + k]).map(|(a, b)| a * b).sum::<f64>();
                if z > best {
                    best = z;
                    winner[fi] = t;
                }
            }
            // max(relu(z)) = relu(max(z))
            pooled[fi] = best.max(0.0);
        }
        let logits = (0..c)
            .map(|ci| dense_b[ci] + dense_w[ci * f..(ci + 1) * f].iter().zip(&pooled).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (pooled, winner, logits)
    }

    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.forward(row).2);
        softmax(out);
    }
}

impl Net for Cnn1d {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn sample_grad(&self, row: &[f64], target: usize, grad: &mut [f64]) -> f64 {
        let (f, k, c) = (self.filters, self.kernel, self.n_classes);
        let (pooled, winner, mut delta) = self.forward(row);
        softmax(&mut delta);
        let loss = cross_entropy(&delta, target);
        delta[target] -= 1.0;
        let dense = f * k + f;
        let dense_w = &self.params[dense..dense + c * f];
        for ci in 0..c {
            for fi in 0..f {
                grad[dense + ci * f + fi] += delta[ci] * pooled[fi];
            }
            grad[dense + c * f + ci] += delta[ci];
        }
        for fi in 0..f {
            if pooled[fi] <= 0.0 {
                continue;
            }
            let d: f64 = (0..c).map(|ci| dense_w[ci * f + fi] * delta[ci]).sum();
            let t = winner[fi];
            for (j, g) in grad[fi * k..(fi + 1) * k].iter_mut().enumerate() {
                *g += d * row[t + j];
            }
            grad[f * k + fi] += d;
        }
        loss
    }
}

/// Loss at a parameter vector, writing the gradient into the buffer.
type LossFn<'a> = dyn FnMut(&[f64], &mut [f64]) -> f64 + 'a;

/// Largest relative gap between analytic gradients and central differences
/// (step 1e-5) over every parameter, at the initial weights implied by `spec`.
///
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`; the floor keeps
/// parameters with a vanishing true gradient from dividing noise by noise.
pub fn gradient_check<S: AsRef<str>>(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[S]) -> Result<f64> {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-6;
    spec.validate()?;
    if x.n_samples() == 0 || x.n_samples() > 16 {
        return Err(Error::Argument(format!(
            "gradient check takes 1..=16 samples, got {}",
            x.n_samples()
        )));
    }
    if y.len() != x.n_samples() {
        return Err(Error::shape(format!("{} labels", x.n_samples()), y.len()));
    }
    let (classes, encoded) = encode_labels(y);
    let k = classes.len().max(2);
    let all: Vec<usize> = (0..x.n_samples()).collect();

    // (loss at params, gradient) for whichever family is being checked
    let mut eval: Box<LossFn<'_>> = match &spec.params {
        Hyperparams::Logreg(p) => {
            let mut model = LogReg::init(x.n_features(), k, p, spec.seed);
            Box::new(move |theta, grad| {
                model.params_mut().zip(theta).for_each(|(p, t)| *p = *t);
                model.loss_and_grad(x, &encoded, grad)
            })
        }
        Hyperparams::Mlp(p) => {
            let mut net = Mlp::init(x.n_features(), &p.hidden, k, spec.seed);
            Box::new(move |theta, grad| {
                net.params.copy_from_slice(theta);
                batch_grad(&net, x, &encoded, &all, grad)
            })
        }
        Hyperparams::Cnn1d(p) => {
            let mut net = Cnn1d::init(x.n_features(), p, k, spec.seed)?;
            Box::new(move |theta, grad| {
                net.params.copy_from_slice(theta);
                batch_grad(&net, x, &encoded, &all, grad)
            })
        }
        _ => {
            return Err(Error::Argument(format!(
                "gradient check supports LOGREG, MLP and CNN1D, not {}",
                spec.family()
            )))
        }
    };
    let theta0 = initial_params(spec, x.n_features(), k)?;
    let mut analytic = vec![0.0; theta0.len()];
    let loss = eval(&theta0, &mut analytic);
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {loss}")));
    }
    let mut scratch = vec![0.0; theta0.len()];
    let mut theta = theta0.clone();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        theta[i] = theta0[i] + H;
        let plus = eval(&theta, &mut scratch);
        theta[i] = theta0[i] - H;
        let minus = eval(&theta, &mut scratch);
        theta[i] = theta0[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric("non-finite loss under perturbation".into()));
        }
        let numeric = (plus - minus) / (2.0 * H);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn initial_params(spec: &ClassifierSpec, d: usize, k: usize) -> Result<Vec<f64>> {
    Ok(match &spec.params {
        Hyperparams::Logreg(p) => {
            let m = LogReg::init(d, k, p, spec.seed);
            m.weights.iter().chain(&m.bias).copied().collect()
        }
        Hyperparams::Mlp(p) => Mlp::init(d, &p.hidden, k, spec.seed).params,
        Hyperparams::Cnn1d(p) => Cnn1d::init(d, p, k, spec.seed)?.params,
        _ => unreachable!("family checked by caller"),
    })
}
