use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Tree, TreeParams};
use super::{argmax, TrainSet};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `max(1, floor(sqrt(d)))`
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            max_depth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Tree `t` draws from its own stream, so the result does not depend on
    /// how rayon schedules the work.
    pub(crate) fn fit(params: &ForestParams, data: &TrainSet<'_>, seed: u64) -> Self {
        let n = data.x.n_samples();
        let m = params.max_features.resolve(data.x.n_features());
        let tree_params = TreeParams {
            criterion: params.criterion,
            max_depth: params.max_depth,
            ..TreeParams::default()
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::derive(seed, t as u64);
                let samples = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::grow(&tree_params, data, samples, Some(m), Some(&mut rng))
            })
            .collect();
        Forest { trees }
    }

    /// Mean of the trees' leaf class frequencies.
    pub(crate) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.leaf(row)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
    }

    /// Majority vote over per-tree predictions; ties go to the earlier class.
    pub fn vote(&self, row: &[f64]) -> usize {
        let k = self.trees.first().map_or(0, |t| t.nodes[0].distribution.len());
        let mut votes = vec![0.0; k];
        for tree in &self.trees {
            votes[argmax(tree.leaf(row))] += 1.0;
        }
        argmax(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::models::{fit, ClassifierSpec, Family};

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(9), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(2), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(9), 9);
        assert_eq!(MaxFeatures::All.resolve(4), 4);
    }

    #[test]
    fn same_seed_same_forest() {
        let rows: Vec<[f64; 3]> = (0..60)
            .map(|i| [(i % 7) as f64, (i % 11) as f64, (i / 20) as f64])
            .collect();
        let y: Vec<String> = (0..60).map(|i| format!("c{}", i / 20)).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let a = fit(&ClassifierSpec::new(Family::Forest, 9), &x, &y).unwrap();
        let b = fit(&ClassifierSpec::new(Family::Forest, 9), &x, &y).unwrap();
        assert_eq!(a.params, b.params);
        let c = fit(&ClassifierSpec::new(Family::Forest, 10), &x, &y).unwrap();
        assert_ne!(a.params, c.params);
    }
}
