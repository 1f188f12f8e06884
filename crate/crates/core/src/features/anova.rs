use serde::{Deserialize, Serialize};

use super::lda::group_by_class;
use super::matrix::FeatureMatrix;
use super::transform::{infinite_as_max, FittedTransform, TransformParams};
use crate::error::{Error, Result};

/// One-way ANOVA F statistics, one per feature.
///
/// A feature constant within every class but not overall has an infinite
/// F; it is flagged and ranks above every finite score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaScores {
    #[serde(with = "infinite_as_max")]
    pub f_values: Vec<f64>,
    pub infinite: Vec<bool>,
}

/// `F = [Σ_c n_c (x̄_c − x̄)² / (C − 1)] / [Σ_c Σ_i (x_ic − x̄_c)² / (n − C)]`
/// per feature. A feature constant over all samples scores 0.
pub fn anova_f_scores<S: AsRef<str>>(x: &FeatureMatrix, labels: &[S]) -> Result<AnovaScores> {
    if labels.len() != x.n_samples() {
        return Err(Error::shape(
            format!("{} labels", x.n_samples()),
            labels.len(),
        ));
    }
    let groups = group_by_class(labels);
    let c = groups.len();
    let n = x.n_samples();
    if c < 2 {
        return Err(Error::Statistics(format!(
            "ANOVA needs at least 2 classes, got {c}"
        )));
    }
    if n <= c {
        return Err(Error::Statistics(format!(
            "ANOVA needs more samples than classes ({n} <= {c})"
        )));
    }
    let grand = x.mean();
    let mut f_values = Vec::with_capacity(x.n_features());
    let mut infinite = Vec::with_capacity(x.n_features());
    for j in 0..x.n_features() {
        let first = x.get(0, j);
        if x.rows().all(|r| r[j] == first) {
            f_values.push(0.0);
            infinite.push(false);
            continue;
        }
        let mut between = 0.0;
        let mut within = 0.0;
        for idx in groups.values() {
            let mean_c = idx.iter().map(|&i| x.get(i, j)).sum::<f64>() / idx.len() as f64;
            between += idx.len() as f64 * (mean_c - grand[j]).powi(2);
            within += idx.iter().map(|&i| (x.get(i, j) - mean_c).powi(2)).sum::<f64>();
        }
        if within <= 1e-12 * between {
            f_values.push(f64::INFINITY);
            infinite.push(true);
        } else {
            f_values.push((between / (c - 1) as f64) / (within / (n - c) as f64));
            infinite.push(false);
        }
    }
    Ok(AnovaScores { f_values, infinite })
}

/// Indices of the `k` highest scores (ties to the lower index), returned in
/// ascending order so the selected features keep their original order.
pub fn select_k_best(scores: &[f64], k: usize) -> Result<FittedTransform> {
    if k == 0 || k > scores.len() {
        return Err(Error::Argument(format!(
            "k = {k} outside [1, {}]",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut indices = order[..k].to_vec();
    indices.sort_unstable();
    Ok(FittedTransform {
        input_dim: scores.len(),
        output_dim: k,
        params: TransformParams::Kbest {
            indices,
            scores: scores.to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_scores_zero() {
        let x = FeatureMatrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 5.0], [1.0, 6.0]])
            .unwrap();
        let s = anova_f_scores(&x, &["a", "a", "b", "b"]).unwrap();
        assert_eq!(s.f_values[0], 0.0);
        assert!(s.f_values[1] > 0.0);
    }

    #[test]
    fn perfectly_separated_is_infinite() {
        let x = FeatureMatrix::from_rows(&[[0.0], [0.0], [10.0], [10.0]]).unwrap();
        let s = anova_f_scores(&x, &["a", "a", "b", "b"]).unwrap();
        assert!(s.f_values[0].is_infinite());
        assert!(s.infinite[0]);
        let json = serde_json::to_string(&s).unwrap();
        let back: AnovaScores = serde_json::from_str(&json).unwrap();
        assert!(back.f_values[0].is_infinite());
    }

    #[test]
    fn single_class_rejected() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            anova_f_scores(&x, &["a", "a"]),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn k_best_selection() {
        let t = select_k_best(&[3.0, 1.0, 2.0], 2).unwrap();
        match &t.params {
            TransformParams::Kbest { indices, .. } => assert_eq!(indices, &vec![0, 2]),
            _ => unreachable!(),
        }
        let all = select_k_best(&[3.0, 1.0, 2.0], 3).unwrap();
        let x = FeatureMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(all.transform(&x).unwrap(), x);
        assert!(select_k_best(&[1.0], 0).is_err());
        assert!(select_k_best(&[1.0], 2).is_err());
        let inf = select_k_best(&[5.0, f64::INFINITY, 5.0], 2).unwrap();
        match &inf.params {
            TransformParams::Kbest { indices, .. } => assert_eq!(indices, &vec![0, 1]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn k_best_transform_picks_columns() {
        let t = select_k_best(&[3.0, 1.0, 2.0], 2).unwrap();
        let x = FeatureMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let y = t.transform(&x).unwrap();
        assert_eq!(y.row(0), &[1.0, 3.0]);
        assert_eq!(y.row(1), &[4.0, 6.0]);
        assert!(t.transform(&FeatureMatrix::from_rows(&[[1.0]]).unwrap()).is_err());
    }
}
