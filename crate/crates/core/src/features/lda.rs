use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::matrix::FeatureMatrix;
use super::pca::{fix_sign, sorted_eigen};
use super::transform::{FittedTransform, TransformParams};
use crate::error::{Error, Result};

/// Between- and within-class scatter matrices plus class statistics.
pub(crate) struct Scatter {
    pub mean: Vec<f64>,
    pub classes: Vec<String>,
    pub class_means: Vec<Vec<f64>>,
    pub between: DMatrix<f64>,
    pub within: DMatrix<f64>,
}

pub(crate) fn group_by_class<S: AsRef<str>>(labels: &[S]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.as_ref()).or_default().push(i);
    }
    groups
}

pub(crate) fn scatter<S: AsRef<str>>(x: &FeatureMatrix, labels: &[S]) -> Scatter {
    let d = x.n_features();
    let mean = x.mean();
    let groups = group_by_class(labels);
    let mut between = DMatrix::<f64>::zeros(d, d);
    let mut within = DMatrix::<f64>::zeros(d, d);
    let mut classes = Vec::with_capacity(groups.len());
    let mut class_means = Vec::with_capacity(groups.len());
    for (class, idx) in &groups {
        let mut mu = vec![0.0; d];
        for &i in idx {
            for (m, v) in mu.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= idx.len() as f64);
        for &i in idx {
            let row = x.row(i);
            for a in 0..d {
                let da = row[a] - mu[a];
                for b in 0..d {
                    within[(a, b)] += da * (row[b] - mu[b]);
                }
            }
        }
        let n_c = idx.len() as f64;
        for a in 0..d {
            for b in 0..d {
                between[(a, b)] += n_c * (mu[a] - mean[a]) * (mu[b] - mean[b]);
            }
        }
        classes.push(class.to_string());
        class_means.push(mu);
    }
    Scatter {
        mean,
        classes,
        class_means,
        between,
        within,
    }
}

/// Fisher discriminant axes from the generalized eigenproblem
/// `S_b v = λ S_w v`, with `S_w` ridge-regularized by `1e-6 · trace / N`.
///
/// The problem is reduced to a symmetric one through the Cholesky factor
/// `S_w = L Lᵀ`: eigenvectors `u` of `L⁻¹ S_b L⁻ᵀ` give axes `v = L⁻ᵀ u`,
/// normalized so that `vᵀ S_w v = 1`.
pub fn fit_lda<S: AsRef<str>>(x: &FeatureMatrix, labels: &[S]) -> Result<FittedTransform> {
    if labels.len() != x.n_samples() {
        return Err(Error::shape(
            format!("{} labels", x.n_samples()),
            labels.len(),
        ));
    }
    let groups = group_by_class(labels);
    if groups.len() < 2 {
        return Err(Error::Fit(format!(
            "LDA needs at least 2 classes, got {}",
            groups.len()
        )));
    }
    if let Some((class, idx)) = groups.iter().find(|(_, idx)| idx.len() < 2) {
        return Err(Error::Fit(format!(
            "LDA class `{class}` has {} sample(s); at least 2 required",
            idx.len()
        )));
    }
    let d = x.n_features();
    let n_axes = (groups.len() - 1).min(d);
    let Scatter {
        mean,
        classes,
        class_means,
        between,
        mut within,
    } = scatter(x, labels);

    let ridge = 1e-6 * within.trace() / d as f64;
    for i in 0..d {
        within[(i, i)] += ridge;
    }
    let chol = within.clone().cholesky().ok_or_else(|| {
        Error::Numeric("within-class scatter is singular after regularization".into())
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("Cholesky factor not invertible".into()))?;
    let mut reduced = &l_inv * &between * l_inv.transpose();
    // symmetrize away rounding
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let pairs = sorted_eigen(reduced)?;

    let l_inv_t = l_inv.transpose();
    let mut axes = Vec::with_capacity(n_axes);
    let mut eigenvalues = Vec::with_capacity(n_axes);
    for (value, u) in pairs.into_iter().take(n_axes) {
        let u = nalgebra::DVector::from_vec(u);
        let mut v: Vec<f64> = (&l_inv_t * u).iter().copied().collect();
        fix_sign(&mut v);
        axes.push(v);
        eigenvalues.push(value.max(0.0));
    }
    Ok(FittedTransform {
        input_dim: d,
        output_dim: n_axes,
        params: TransformParams::Lda {
            mean,
            axes,
            eigenvalues,
            classes,
            class_means,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_count_bounded_by_classes() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..5 {
            for k in 0..6 {
                let mut r = [0.0; 9];
                for (j, v) in r.iter_mut().enumerate() {
                    *v = (c * 3 + j) as f64 * 0.1 + ((k * 7 + j * 3) % 5) as f64;
                }
                rows.push(r);
                labels.push(format!("C{c}"));
            }
        }
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let t = fit_lda(&x, &labels).unwrap();
        assert_eq!(t.output_dim, 4);
        assert_eq!(t.transform(&x).unwrap().n_features(), 4);
    }

    #[test]
    fn singleton_class_rejected() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        match fit_lda(&x, &["a", "a", "b"]) {
            Err(Error::Fit(msg)) => assert!(msg.contains("`b`")),
            other => panic!("expected fit error, got {other:?}"),
        }
    }

    #[test]
    fn identical_means_give_zero_eigenvalues() {
        let x = FeatureMatrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
            .unwrap();
        let t = fit_lda(&x, &["a", "a", "b", "b"]).unwrap();
        match t.params {
            TransformParams::Lda { eigenvalues, .. } => {
                assert!(eigenvalues.iter().all(|&e| e.abs() < 1e-12))
            }
            _ => unreachable!(),
        }
    }
}
