use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{softmax, TrainSet};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Std of the Gaussian initial weights; 0 starts from all zeros.
    #[serde(default)]
    pub init_scale: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            learning_rate: 0.1,
            epochs: 500,
            init_scale: 0.0,
        }
    }
}

/// Multinomial softmax regression. `weights` is `n_classes × n_features`
/// row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub n_features: usize,
    pub n_classes: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl LogReg {
    pub(crate) fn init(n_features: usize, n_classes: usize, params: &LogRegParams, seed: u64) -> Self {
        let mut weights = vec![0.0; n_features * n_classes];
        let mut bias = vec![0.0; n_classes];
        if params.init_scale > 0.0 {
            let mut rng = rng::derive(seed, 0);
            let normal = Normal::new(0.0, params.init_scale).expect("positive std");
            weights.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
            bias.iter_mut().for_each(|b| *b = normal.sample(&mut rng));
        }
        Self {
            n_features,
            n_classes,
            weights,
            bias,
            l2: params.l2,
        }
    }

    pub(crate) fn fit(params: &LogRegParams, data: &TrainSet<'_>, seed: u64) -> Self {
        let mut model = Self::init(data.x.n_features(), data.n_classes, params, seed);
        let mut grad = vec![0.0; model.n_params()];
        for _ in 0..params.epochs {
            model.loss_and_grad(data.x, &data.y, &mut grad);
            for (p, g) in model.params_mut().zip(&grad) {
                *p -= params.learning_rate * g;
            }
        }
        model
    }

    pub(crate) fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    pub(crate) fn logits(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.n_features..(c + 1) * self.n_features];
            *o = self.bias[c] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        self.logits(row, out);
        softmax(out);
    }

    /// Mean cross-entropy plus `l2/2 · ‖W‖²`; writes the gradient (weights
    /// then biases) into `grad`.
    pub(crate) fn loss_and_grad(&self, x: &FeatureMatrix, y: &[usize], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = x.n_samples() as f64;
        let d = self.n_features;
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        let mut p = vec![0.0; self.n_classes];
        let mut loss = 0.0;
        for (row, &target) in x.rows().zip(y) {
            self.proba_row(row, &mut p);
            loss -= p[target].max(f64::MIN_POSITIVE).ln();
            for c in 0..self.n_classes {
                let delta = (p[c] - if c == target { 1.0 } else { 0.0 }) / n;
                gb[c] += delta;
                for (g, v) in gw[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *g += delta * v;
                }
            }
        }
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g += self.l2 * w;
        }
        loss / n + 0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}
