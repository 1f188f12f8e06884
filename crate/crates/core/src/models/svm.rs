use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{softmax, TrainSet};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    /// Cap on full sweeps over the training set per one-vs-rest problem.
    pub max_passes: usize,
    /// Defaults to `1 / (d · mean feature variance)`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
            gamma: None,
        }
    }
}

/// One-vs-rest RBF machines sharing one pool of support vectors.
/// `coef[c][s]` is `α·y` of support vector `s` in the machine for class `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub n_features: usize,
    pub support_vectors: Vec<f64>,
    pub coef: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Gram matrices above this many samples are not materialized.
const PRECOMPUTE_LIMIT: usize = 4096;

pub(crate) fn default_gamma(x: &FeatureMatrix) -> f64 {
    let d = x.n_features();
    let n = x.n_samples() as f64;
    let mean = x.mean();
    let total: f64 = (0..d)
        .map(|j| x.rows().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n)
        .sum();
    let mean_var = total / d as f64;
    if mean_var > 0.0 && mean_var.is_finite() {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * sq).exp()
}

struct Kernel<'a> {
    x: &'a FeatureMatrix,
    gamma: f64,
    gram: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a FeatureMatrix, gamma: f64) -> Self {
        let n = x.n_samples();
        let gram = (n <= PRECOMPUTE_LIMIT).then(|| {
            let mut g = vec![0.0; n * n];
            g.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rbf(gamma, x.row(i), x.row(j));
                }
            });
            g
        });
        Self { x, gamma, gram }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g[i * self.x.n_samples() + j],
            None => rbf(self.gamma, self.x.row(i), self.x.row(j)),
        }
    }
}

/// Binary soft-margin dual solved by simplified SMO. The second index is
/// the one maximizing `|E_i − E_j|`, with a seeded random fallback when
/// that pair makes no progress.
fn smo(kernel: &Kernel<'_>, y: &[f64], params: &SvmParams, seed: u64) -> (Vec<f64>, f64) {
    let n = y.len();
    let c = params.c;
    let tol = params.tol;
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    // E_k = f(x_k) − y_k with f ≡ 0 initially
    let mut err: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut rng = rng::derive(seed, 0);
    let mut passes = 0;
    while passes < params.max_passes {
        passes += 1;
        let mut changed = 0;
        for i in 0..n {
            let r = err[i] * y[i];
            if !((r < -tol && alpha[i] < c) || (r > tol && alpha[i] > 0.0)) {
                continue;
            }
            let mut best = if i == 0 { 1 } else { 0 };
            for k in 0..n {
                if k != i && (err[i] - err[k]).abs() > (err[i] - err[best]).abs() {
                    best = k;
                }
            }
            let mut stepped = n > 1 && step(kernel, y, c, &mut alpha, &mut b, &mut err, i, best);
            if !stepped && n > 2 {
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                stepped = step(kernel, y, c, &mut alpha, &mut b, &mut err, i, j);
            }
            if stepped {
                changed += 1;
            }
        }
        if changed == 0 {
            break;
        }
    }
    if passes >= params.max_passes {
        log::warn!("SMO stopped at the pass limit ({})", params.max_passes);
    }
    (alpha, b)
}

#[allow(clippy::too_many_arguments)]
fn step(
    kernel: &Kernel<'_>,
    y: &[f64],
    c: f64,
    alpha: &mut [f64],
    b: &mut f64,
    err: &mut [f64],
    i: usize,
    j: usize,
) -> bool {
    let (ai, aj) = (alpha[i], alpha[j]);
    let (lo, hi) = if y[i] != y[j] {
        ((aj - ai).max(0.0), (c + aj - ai).min(c))
    } else {
        ((ai + aj - c).max(0.0), (ai + aj).min(c))
    };
    if lo >= hi {
        return false;
    }
    let (kii, kjj, kij) = (kernel.at(i, i), kernel.at(j, j), kernel.at(i, j));
    let eta = kii + kjj - 2.0 * kij;
    if eta <= 0.0 {
        return false;
    }
    let aj_new = (aj + y[j] * (err[i] - err[j]) / eta).clamp(lo, hi);
    if (aj_new - aj).abs() < 1e-5 * (aj_new + aj + 1e-5) {
        return false;
    }
    let ai_new = ai + y[i] * y[j] * (aj - aj_new);
    let di = y[i] * (ai_new - ai);
    let dj = y[j] * (aj_new - aj);
    let b1 = *b - err[i] - di * kii - dj * kij;
    let b2 = *b - err[j] - di * kij - dj * kjj;
    let b_new = if ai_new > 0.0 && ai_new < c {
        b1
    } else if aj_new > 0.0 && aj_new < c {
        b2
    } else {
        (b1 + b2) / 2.0
    };
    let db = b_new - *b;
    for (k, e) in err.iter_mut().enumerate() {
        *e += di * kernel.at(i, k) + dj * kernel.at(j, k) + db;
    }
    alpha[i] = ai_new;
    alpha[j] = aj_new;
    *b = b_new;
    true
}

impl SvmModel {
    /// Each one-vs-rest problem runs on its own RNG stream, so the parallel
    /// fit equals the sequential one.
    pub(crate) fn fit(params: &SvmParams, data: &TrainSet<'_>, seed: u64) -> Self {
        let gamma = params.gamma.unwrap_or_else(|| default_gamma(data.x));
        let kernel = Kernel::new(data.x, gamma);
        let solutions: Vec<(Vec<f64>, f64)> = (0..data.n_classes)
            .into_par_iter()
            .map(|class| {
                let y: Vec<f64> = data
                    .y
                    .iter()
                    .map(|&c| if c == class { 1.0 } else { -1.0 })
                    .collect();
                let (alpha, b) = smo(&kernel, &y, params, rng::derive(seed, class as u64).random());
                let coef = alpha.iter().zip(&y).map(|(a, y)| a * y).collect();
                (coef, b)
            })
            .collect();
        let support: Vec<usize> = (0..data.x.n_samples())
            .filter(|&s| solutions.iter().any(|(coef, _)| coef[s] != 0.0))
            .collect();
        let mut support_vectors = Vec::with_capacity(support.len() * data.x.n_features());
        for &s in &support {
            support_vectors.extend_from_slice(data.x.row(s));
        }
        Self {
            gamma,
            n_features: data.x.n_features(),
            support_vectors,
            coef: solutions
                .iter()
                .map(|(coef, _)| support.iter().map(|&s| coef[s]).collect())
                .collect(),
            bias: solutions.iter().map(|(_, b)| *b).collect(),
        }
    }

    pub fn decision_values(&self, row: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        let d = self.n_features.max(1);
        for (s, sv) in self.support_vectors.chunks_exact(d).enumerate() {
            let k = rbf(self.gamma, sv, row);
            for (o, coef) in out.iter_mut().zip(&self.coef) {
                *o += coef[s] * k;
            }
        }
    }

    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        self.decision_values(row, out);
        softmax(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ClassifierSpec, Family, Hyperparams};

    #[test]
    fn two_points_are_separated() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        for c in [1.0, 10.0] {
            let spec = ClassifierSpec {
                params: Hyperparams::SvmRbf(SvmParams {
                    c,
                    ..SvmParams::default()
                }),
                seed: 0,
            };
            let m = fit(&spec, &x, &["A", "B"]).unwrap();
            assert_eq!(m.predict(&x).unwrap(), vec!["A", "B"]);
        }
    }

    #[test]
    fn gamma_from_variance() {
        // column variances 1 and 4 → mean 2.5, d = 2
        let x = FeatureMatrix::from_rows(&[[-1.0, -2.0], [1.0, 2.0]]).unwrap();
        assert!((default_gamma(&x) - 1.0 / 5.0).abs() < 1e-15);
        let flat = FeatureMatrix::from_rows(&[[3.0], [3.0]]).unwrap();
        assert_eq!(default_gamma(&flat), 1.0);
    }

    #[test]
    fn three_class_rings() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (k, r) in [0.5, 2.0, 4.0].iter().enumerate() {
            for t in 0..12 {
                let a = t as f64 * std::f64::consts::TAU / 12.0;
                rows.push([r * a.cos(), r * a.sin()]);
                y.push(format!("r{k}"));
            }
        }
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = fit(&ClassifierSpec::new(Family::SvmRbf, 1), &x, &y).unwrap();
        let pred = m.predict(&x).unwrap();
        let correct = pred.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(correct >= 33, "{correct}/36");
    }
}
