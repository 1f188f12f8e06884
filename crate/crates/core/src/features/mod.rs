//! Standardization and the three feature-space reductions: PCA by retained
//! variance, Fisher LDA, and ANOVA F-value selection.
//!
//! Every `fit_*` returns a [`FittedTransform`] holding only parameters
//! learned from its input, so fitting on a training partition and
//! transforming a test partition cannot leak test statistics.

mod anova;
mod lda;
mod matrix;
mod pca;
mod transform;

pub use anova::{anova_f_scores, select_k_best, AnovaScores};
pub use lda::fit_lda;
pub use matrix::FeatureMatrix;
pub use pca::{fit_pca, fit_scaler};
pub use transform::{FittedTransform, TransformKind, TransformParams, TRANSFORM_SCHEMA_VERSION};

/// Applies a fitted transform; see [`FittedTransform::transform`].
pub fn transform(t: &FittedTransform, x: &FeatureMatrix) -> crate::Result<FeatureMatrix> {
    t.transform(x)
}
