use serde::{Deserialize, Serialize};

use crate::dataset::RecordTable;
use crate::error::{Error, Result};

/// Dense row-major `n_samples × n_features` matrix of finite values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_samples: usize,
    n_features: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_samples: usize, n_features: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_samples * n_features {
            return Err(Error::shape(
                format!("{} values for {n_samples}x{n_features}", n_samples * n_features),
                data.len(),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite entry at row {}, column {}",
                pos / n_features.max(1),
                pos % n_features.max(1)
            )));
        }
        Ok(Self {
            n_samples,
            n_features,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_features);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_features {
                return Err(Error::shape(
                    format!("{n_features} columns"),
                    format!("{} in row {i}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), n_features, data)
    }

    /// The nine numeric features of every record.
    pub fn from_table(table: &RecordTable) -> Self {
        let data = table.records().iter().flat_map(|r| r.features()).collect();
        Self {
            n_samples: table.len(),
            n_features: 9,
            data,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.n_features.max(1))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_features + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n_samples: indices.len(),
            n_features: self.n_features,
            data,
        }
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_features];
        for r in self.rows() {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.n_samples.max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    pub(crate) fn from_raw_unchecked(n_samples: usize, n_features: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_samples * n_features);
        Self {
            n_samples,
            n_features,
            data,
        }
    }

    pub(crate) fn check_width(&self, expected: usize) -> Result<()> {
        if self.n_features != expected {
            return Err(Error::shape(
                format!("{expected} columns"),
                format!("{} columns", self.n_features),
            ));
        }
        Ok(())
    }
}
