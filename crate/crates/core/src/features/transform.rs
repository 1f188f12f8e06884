use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};

pub const TRANSFORM_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TransformKind {
    Scaler,
    Pca,
    Lda,
    Kbest,
}

/// Learned parameters, one variant per transform kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TransformParams {
    Scaler {
        means: Vec<f64>,
        stds: Vec<f64>,
        /// Zero-variance columns; their std is stored as 1.
        constant_columns: Vec<usize>,
    },
    Pca {
        mean: Vec<f64>,
        /// Kept components, one row each, descending eigenvalue order.
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
        explained_variance_ratio: Vec<f64>,
        /// Ratios of every component, kept or not.
        full_variance_ratio: Vec<f64>,
    },
    Lda {
        mean: Vec<f64>,
        /// Discriminant axes, one row each, descending eigenvalue order.
        axes: Vec<Vec<f64>>,
        eigenvalues: Vec<f64>,
        classes: Vec<String>,
        class_means: Vec<Vec<f64>>,
    },
    Kbest {
        indices: Vec<usize>,
        #[serde(with = "infinite_as_max")]
        scores: Vec<f64>,
    },
}

/// A trained feature transform. Holds only parameters learned at fit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(flatten)]
    pub params: TransformParams,
}

#[derive(Serialize, Deserialize)]
struct TransformDocument {
    schema_version: u32,
    #[serde(flatten)]
    transform: FittedTransform,
}

impl FittedTransform {
    pub fn kind(&self) -> TransformKind {
        match self.params {
            TransformParams::Scaler { .. } => TransformKind::Scaler,
            TransformParams::Pca { .. } => TransformKind::Pca,
            TransformParams::Lda { .. } => TransformKind::Lda,
            TransformParams::Kbest { .. } => TransformKind::Kbest,
        }
    }

    /// Applies the fitted mapping. Never refits.
    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.check_width(self.input_dim)?;
        let n = x.n_samples();
        let mut out = Vec::with_capacity(n * self.output_dim);
        match &self.params {
            TransformParams::Scaler { means, stds, .. } => {
                for row in x.rows() {
                    out.extend(row.iter().zip(means).zip(stds).map(|((v, m), s)| (v - m) / s));
                }
            }
            TransformParams::Pca {
                mean, components, ..
            }
            | TransformParams::Lda {
                mean, axes: components, ..
            } => {
                for row in x.rows() {
                    out.extend(components.iter().map(|c| {
                        c.iter()
                            .zip(row.iter().zip(mean))
                            .map(|(w, (v, m))| w * (v - m))
                            .sum::<f64>()
                    }));
                }
            }
            TransformParams::Kbest { indices, .. } => {
                for row in x.rows() {
                    out.extend(indices.iter().map(|&j| row[j]));
                }
            }
        }
        Ok(FeatureMatrix::from_raw_unchecked(n, self.output_dim, out))
    }

    /// Maps PCA scores back to the input space.
    pub fn inverse_transform(&self, z: &FeatureMatrix) -> Result<FeatureMatrix> {
        let TransformParams::Pca {
            mean, components, ..
        } = &self.params
        else {
            return Err(Error::Argument(format!(
                "inverse transform is defined for PCA only, not {:?}",
                self.kind()
            )));
        };
        z.check_width(self.output_dim)?;
        let mut out = Vec::with_capacity(z.n_samples() * self.input_dim);
        for row in z.rows() {
            for (j, m) in mean.iter().enumerate() {
                out.push(m + row.iter().zip(components).map(|(s, c)| s * c[j]).sum::<f64>());
            }
        }
        Ok(FeatureMatrix::from_raw_unchecked(
            z.n_samples(),
            self.input_dim,
            out,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&TransformDocument {
            schema_version: TRANSFORM_SCHEMA_VERSION,
            transform: self.clone(),
        })
        .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Format("missing schema_version".into()))?;
        if version != u64::from(TRANSFORM_SCHEMA_VERSION) {
            return Err(Error::Format(format!(
                "unsupported transform schema version {version}"
            )));
        }
        let doc: TransformDocument =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        Ok(doc.transform)
    }
}

/// Infinite F-scores have no JSON encoding; they are written as `f64::MAX`
/// and read back as infinity.
pub(crate) mod infinite_as_max {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        values
            .iter()
            .map(|&v| if v.is_infinite() { f64::MAX } else { v })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Ok(values
            .into_iter()
            .map(|v| if v == f64::MAX { f64::INFINITY } else { v })
            .collect())
    }
}
