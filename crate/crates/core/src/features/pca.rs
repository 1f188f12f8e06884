use nalgebra::{DMatrix, SymmetricEigen};

use super::matrix::FeatureMatrix;
use super::transform::{FittedTransform, TransformParams};
use crate::error::{Error, Result};

/// Per-column standardization with the population standard deviation.
/// Zero-variance columns keep std 1 and are flagged, so they scale to zeros.
pub fn fit_scaler(x: &FeatureMatrix) -> Result<FittedTransform> {
    if x.n_samples() < 2 {
        return Err(Error::Fit(format!(
            "scaler needs at least 2 samples, got {}",
            x.n_samples()
        )));
    }
    let means = x.mean();
    let n = x.n_samples() as f64;
    let mut var = vec![0.0; x.n_features()];
    for row in x.rows() {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(&means) {
            *acc += (v - m) * (v - m);
        }
    }
    let mut constant_columns = Vec::new();
    let stds = var
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                constant_columns.push(j);
                1.0
            }
        })
        .collect();
    Ok(FittedTransform {
        input_dim: x.n_features(),
        output_dim: x.n_features(),
        params: TransformParams::Scaler {
            means,
            stds,
            constant_columns,
        },
    })
}

pub(crate) fn covariance(x: &FeatureMatrix, mean: &[f64]) -> DMatrix<f64> {
    let d = x.n_features();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in x.rows() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (x.n_samples().saturating_sub(1)).max(1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite matrix entries".into()));
    }
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &val)| (val, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs)
}

/// Principal components of the covariance matrix. Keeps the fewest
/// components whose cumulative explained-variance ratio reaches
/// `variance_target`.
pub fn fit_pca(x: &FeatureMatrix, variance_target: f64) -> Result<FittedTransform> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::Argument(format!(
            "variance target {variance_target} outside (0, 1]"
        )));
    }
    if x.n_samples() < 2 || x.n_features() == 0 {
        return Err(Error::Fit("PCA needs at least 2 samples and 1 feature".into()));
    }
    let mean = x.mean();
    let pairs = sorted_eigen(covariance(x, &mean))?;
    let variances: Vec<f64> = pairs.iter().map(|(v, _)| v.max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("covariance has zero total variance".into()));
    }
    let ratios: Vec<f64> = variances.iter().map(|v| v / total).collect();
    let mut keep = ratios.len();
    let mut cumulative = 0.0;
    for (k, r) in ratios.iter().enumerate() {
        cumulative += r;
        if cumulative >= variance_target - 1e-12 {
            keep = k + 1;
            break;
        }
    }
    let components = pairs[..keep]
        .iter()
        .map(|(_, v)| {
            let mut v = v.clone();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(FittedTransform {
        input_dim: x.n_features(),
        output_dim: keep,
        params: TransformParams::Pca {
            mean,
            components,
            explained_variance: variances[..keep].to_vec(),
            explained_variance_ratio: ratios[..keep].to_vec(),
            full_variance_ratio: ratios,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_two_points() {
        let x = FeatureMatrix::from_rows(&[[0.0, 5.0], [2.0, 5.0]]).unwrap();
        let s = fit_scaler(&x).unwrap();
        let z = s.transform(&x).unwrap();
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
        assert_eq!(z.column(1), vec![0.0, 0.0]);
        match &s.params {
            TransformParams::Scaler {
                constant_columns, ..
            } => assert_eq!(constant_columns, &vec![1]),
            _ => unreachable!(),
        }
        assert!(fit_scaler(&FeatureMatrix::from_rows(&[[1.0]]).unwrap()).is_err());
    }

    #[test]
    fn rank_one_data_needs_one_component() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let p = fit_pca(&x, 0.95).unwrap();
        assert_eq!(p.output_dim, 1);
        match &p.params {
            TransformParams::Pca {
                explained_variance_ratio,
                components,
                ..
            } => {
                assert!((explained_variance_ratio[0] - 1.0).abs() < 1e-12);
                assert!(components[0].iter().all(|&c| c > 0.0));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
