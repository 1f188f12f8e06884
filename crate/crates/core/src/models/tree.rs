use std::fmt;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        })
    }
}

impl Criterion {
    /// Impurity of a class-count vector with total `n`.
    pub fn impurity(self, counts: &[usize], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        match self {
            Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
            Criterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    #[serde(default)]
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// One node of the flat tree encoding. Leaves have `feature == None`.
/// Samples with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Class frequencies of the training samples reaching this node.
    pub distribution: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

/// The best split found at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

/// Exhaustive search over midpoints between consecutive distinct values.
/// Features are scanned in the order given and thresholds ascending; only a
/// strictly larger decrease replaces the incumbent, so ties keep the lower
/// feature and then the lower threshold when `features` is ascending.
pub fn best_split(
    x: &FeatureMatrix,
    y: &[usize],
    samples: &[usize],
    features: &[usize],
    n_classes: usize,
    criterion: Criterion,
) -> Option<Split> {
    let n = samples.len();
    let mut total = vec![0usize; n_classes];
    for &s in samples {
        total[y[s]] += 1;
    }
    let parent = criterion.impurity(&total, n);
    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &f in features {
        sorted.clear();
        sorted.extend(samples.iter().map(|&s| (x.get(s, f), y[s])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&total);
        for i in 0..n - 1 {
            let (value, class) = sorted[i];
            left[class] += 1;
            right[class] -= 1;
            let next = sorted[i + 1].0;
            if next <= value {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            let child = (n_left as f64 * criterion.impurity(&left, n_left)
                + n_right as f64 * criterion.impurity(&right, n_right))
                / n as f64;
            let decrease = parent - child;
            if best.is_none_or(|b| decrease > b.decrease) {
                let mut threshold = value + (next - value) / 2.0;
                if threshold >= next {
                    threshold = value;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

impl Tree {
    pub(crate) fn fit(params: &TreeParams, data: &TrainSet<'_>) -> Self {
        let samples: Vec<usize> = (0..data.x.n_samples()).collect();
        Self::grow(params, data, samples, None, None)
    }

    /// Grows a tree on `samples` (indices may repeat, as in a bootstrap).
    /// With `max_features`, each node scans a random feature subset, widened
    /// one feature at a time when the subset has no valid split.
    pub(crate) fn grow(
        params: &TreeParams,
        data: &TrainSet<'_>,
        samples: Vec<usize>,
        max_features: Option<usize>,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        let k = data.n_classes;
        let d = data.x.n_features();
        let mut nodes: Vec<Node> = Vec::new();
        // (node index, samples, depth)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        nodes.push(leaf(&samples, &data.y, k));
        stack.push((0, samples, 0));
        while let Some((id, samples, depth)) = stack.pop() {
            let mut counts = vec![0usize; k];
            for &s in &samples {
                counts[data.y[s]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
            if pure || depth_capped || samples.len() < params.min_samples_split {
                continue;
            }
            let split = match (max_features, rng.as_deref_mut()) {
                (Some(m), Some(rng)) if m < d => {
                    let mut order: Vec<usize> = (0..d).collect();
                    order.shuffle(rng);
                    let mut found = None;
                    let mut take = m;
                    while found.is_none() && take <= d {
                        let mut subset = order[..take].to_vec();
                        subset.sort_unstable();
                        found = best_split(data.x, &data.y, &samples, &subset, k, params.criterion);
                        take += 1;
                    }
                    found
                }
                _ => {
                    let all: Vec<usize> = (0..d).collect();
                    best_split(data.x, &data.y, &samples, &all, k, params.criterion)
                }
            };
            let Some(split) = split else { continue };
            let (l, r): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| data.x.get(s, split.feature) <= split.threshold);
            let left_id = nodes.len();
            nodes.push(leaf(&l, &data.y, k));
            let right_id = nodes.len();
            nodes.push(leaf(&r, &data.y, k));
            let node = &mut nodes[id];
            node.feature = Some(split.feature);
            node.threshold = split.threshold;
            node.left = left_id;
            node.right = right_id;
            stack.push((right_id, r, depth + 1));
            stack.push((left_id, l, depth + 1));
        }
        Tree { nodes }
    }

    /// Class distribution of the leaf reached by `row`.
    pub fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            match node.feature {
                None => return &node.distribution,
                Some(f) => {
                    id = if row[f] <= node.threshold {
                        node.left
                    } else {
                        node.right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id].feature {
                None => 0,
                Some(_) => 1 + walk(nodes, nodes[id].left).max(walk(nodes, nodes[id].right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn leaf(samples: &[usize], y: &[usize], k: usize) -> Node {
    let mut distribution = vec![0.0; k];
    for &s in samples {
        distribution[y[s]] += 1.0;
    }
    let n = samples.len().max(1) as f64;
    distribution.iter_mut().for_each(|v| *v /= n);
    Node {
        feature: None,
        threshold: 0.0,
        left: 0,
        right: 0,
        distribution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ClassifierSpec, Family};

    #[test]
    fn impurities() {
        assert_eq!(Criterion::Gini.impurity(&[5, 5], 10), 0.5);
        assert_eq!(Criterion::Entropy.impurity(&[5, 5], 10), 1.0);
        assert_eq!(Criterion::Gini.impurity(&[4, 0], 4), 0.0);
    }

    #[test]
    fn separable_training_set_is_memorized() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<&str> = (0..20).map(|i| if i < 10 { "a" } else { "b" }).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let m = fit(&ClassifierSpec::tree(criterion, 0), &x, &y).unwrap();
            assert_eq!(m.predict(&x).unwrap(), y);
        }
    }

    #[test]
    fn xor_grown_to_purity() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let y = ["A", "A", "B", "B"];
        let m = fit(&ClassifierSpec::new(Family::Tree, 0), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn single_class_tree_predicts_it_everywhere() {
        let x = FeatureMatrix::from_rows(&[[0.0], [5.0], [9.0]]).unwrap();
        let m = fit(&ClassifierSpec::new(Family::Tree, 0), &x, &["Z", "Z", "Z"]).unwrap();
        let probe = FeatureMatrix::from_rows(&[[-100.0], [100.0]]).unwrap();
        assert_eq!(m.predict(&probe).unwrap(), vec!["Z", "Z"]);
    }

    #[test]
    fn balanced_leaf_probability() {
        // identical features, different labels: no split is possible
        let x = FeatureMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let m = fit(&ClassifierSpec::new(Family::Tree, 0), &x, &["A", "B"]).unwrap();
        assert_eq!(m.predict_proba(&x).unwrap().row(0), &[0.5, 0.5]);
    }
}
