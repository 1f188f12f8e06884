use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Stores the training set. Neighbours vote with weight `1 / (d + 1e-9)`
/// where `d` is Euclidean distance; distance ties go to the earlier sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub points: Vec<f64>,
    pub labels: Vec<usize>,
}

const EPS: f64 = 1e-9;

impl KnnModel {
    pub(crate) fn fit(params: &KnnParams, data: &TrainSet<'_>) -> Result<Self> {
        let n = data.x.n_samples();
        if params.k > n {
            return Err(Error::Fit(format!("KNN k = {} exceeds {n} training samples", params.k)));
        }
        Ok(Self {
            k: params.k,
            n_features: data.x.n_features(),
            n_classes: data.n_classes,
            points: data.x.as_slice().to_vec(),
            labels: data.y.clone(),
        })
    }

    /// The `k` nearest training samples as `(distance, index)`.
    pub fn neighbours(&self, row: &[f64]) -> Vec<(f64, usize)> {
        let d = self.n_features.max(1);
        let mut all: Vec<(f64, usize)> = self
            .points
            .chunks_exact(d)
            .enumerate()
            .map(|(i, p)| {
                let sq: f64 = p.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (sq.sqrt(), i)
            })
            .collect();
        let k = self.k.min(all.len());
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(k);
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (dist, i) in self.neighbours(row) {
            out[self.labels[i]] += 1.0 / (dist + EPS);
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
    }
}
