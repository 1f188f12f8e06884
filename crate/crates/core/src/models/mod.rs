//! Seven classifier families behind one fit / predict / predict-probability
//! contract: multinomial logistic regression, CART decision tree, random
//! forest, distance-weighted KNN, one-vs-rest RBF SVM, MLP and a 1D CNN.
//!
//! Class lists are the sorted distinct training labels. All arithmetic is
//! in `f64` and every random choice flows from [`ClassifierSpec::seed`].

mod forest;
mod knn;
mod linear;
mod nn;
mod svm;
mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use forest::{Forest, ForestParams, MaxFeatures};
pub use knn::{KnnModel, KnnParams};
pub use linear::{LogReg, LogRegParams};
pub use nn::{gradient_check, Cnn1d, CnnParams, Mlp, MlpParams, NnTrace};
pub use svm::{SvmModel, SvmParams};
pub use tree::{Criterion, Node, Tree, TreeParams};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Logreg,
    Tree,
    Forest,
    Knn,
    SvmRbf,
    Mlp,
    Cnn1d,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Logreg,
        Family::Tree,
        Family::Forest,
        Family::Knn,
        Family::SvmRbf,
        Family::Mlp,
        Family::Cnn1d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logreg => "LOGREG",
            Family::Tree => "TREE",
            Family::Forest => "FOREST",
            Family::Knn => "KNN",
            Family::SvmRbf => "SVM_RBF",
            Family::Mlp => "MLP",
            Family::Cnn1d => "CNN1D",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, Family::Mlp | Family::Cnn1d)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_uppercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == upper || (upper == "SVM" && *f == Family::SvmRbf))
            .ok_or_else(|| Error::Argument(format!("unknown model family `{s}`")))
    }
}

/// Family-specific hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Hyperparams {
    Logreg(LogRegParams),
    Tree(TreeParams),
    Forest(ForestParams),
    Knn(KnnParams),
    SvmRbf(SvmParams),
    Mlp(MlpParams),
    Cnn1d(CnnParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    /// The documented defaults for a family.
    pub fn new(family: Family, seed: u64) -> Self {
        let params = match family {
            Family::Logreg => Hyperparams::Logreg(LogRegParams::default()),
            Family::Tree => Hyperparams::Tree(TreeParams::default()),
            Family::Forest => Hyperparams::Forest(ForestParams::default()),
            Family::Knn => Hyperparams::Knn(KnnParams::default()),
            Family::SvmRbf => Hyperparams::SvmRbf(SvmParams::default()),
            Family::Mlp => Hyperparams::Mlp(MlpParams::default()),
            Family::Cnn1d => Hyperparams::Cnn1d(CnnParams::default()),
        };
        Self { params, seed }
    }

    pub fn tree(criterion: Criterion, seed: u64) -> Self {
        Self {
            params: Hyperparams::Tree(TreeParams {
                criterion,
                ..TreeParams::default()
            }),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        match self.params {
            Hyperparams::Logreg(_) => Family::Logreg,
            Hyperparams::Tree(_) => Family::Tree,
            Hyperparams::Forest(_) => Family::Forest,
            Hyperparams::Knn(_) => Family::Knn,
            Hyperparams::SvmRbf(_) => Family::SvmRbf,
            Hyperparams::Mlp(_) => Family::Mlp,
            Hyperparams::Cnn1d(_) => Family::Cnn1d,
        }
    }

    /// Human-readable name, e.g. `TREE(entropy)`.
    pub fn name(&self) -> String {
        match &self.params {
            Hyperparams::Tree(p) => format!("TREE({})", p.criterion),
            _ => self.family().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Argument(msg));
        match &self.params {
            Hyperparams::Logreg(p) => {
                if !(p.learning_rate > 0.0) || p.l2 < 0.0 || p.epochs == 0 {
                    return bad(format!("invalid LOGREG hyperparameters {p:?}"));
                }
            }
            Hyperparams::Tree(p) => {
                if p.min_samples_split < 2 {
                    return bad("TREE min_samples_split must be >= 2".into());
                }
            }
            Hyperparams::Forest(p) => {
                if p.n_trees == 0 {
                    return bad("FOREST needs at least one tree".into());
                }
            }
            Hyperparams::Knn(p) => {
                if p.k == 0 {
                    return bad("KNN k must be >= 1".into());
                }
            }
            Hyperparams::SvmRbf(p) => {
                if !(p.c > 0.0) || !(p.tol > 0.0) || p.max_passes == 0 {
                    return bad(format!("invalid SVM_RBF hyperparameters {p:?}"));
                }
            }
            Hyperparams::Mlp(p) => {
                if !(p.learning_rate > 0.0) || p.batch_size == 0 || p.hidden.contains(&0) {
                    return bad(format!("invalid MLP hyperparameters {p:?}"));
                }
            }
            Hyperparams::Cnn1d(p) => {
                if !(p.learning_rate > 0.0) || p.batch_size == 0 || p.filters == 0 || p.kernel == 0
                {
                    return bad(format!("invalid CNN1D hyperparameters {p:?}"));
                }
            }
        }
        Ok(())
    }
}

/// Learned parameters, tagged by family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelParams {
    Logreg(LogReg),
    Tree(Tree),
    Forest(Forest),
    Knn(KnnModel),
    SvmRbf(SvmModel),
    Mlp(Mlp),
    Cnn1d(Cnn1d),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub classes: Vec<String>,
    pub n_features: usize,
    #[serde(flatten)]
    pub params: ModelParams,
    pub training_seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    #[serde(flatten)]
    model: FittedModel,
}

/// Row-major `n_samples × n_classes` class-membership scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMatrix {
    pub classes: Vec<String>,
    pub n_samples: usize,
    pub data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(classes: Vec<String>, n_samples: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_samples * classes.len() {
            return Err(Error::shape(
                format!("{} entries", n_samples * classes.len()),
                data.len(),
            ));
        }
        Ok(Self {
            classes,
            n_samples,
            data,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.classes.len();
        &self.data[i * k..(i + 1) * k]
    }

    /// Row-wise argmax; ties go to the earlier class.
    pub fn argmax(&self) -> Vec<usize> {
        (0..self.n_samples).map(|i| argmax(self.row(i))).collect()
    }

    pub fn predicted_labels(&self) -> Vec<String> {
        self.argmax()
            .into_iter()
            .map(|i| self.classes[i].clone())
            .collect()
    }
}

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable in-place softmax.
pub(crate) fn softmax(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// Sorted distinct labels and each sample's index into them.
pub fn encode_labels<S: AsRef<str>>(y: &[S]) -> (Vec<String>, Vec<usize>) {
    let classes: Vec<String> = y
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let encoded = y
        .iter()
        .map(|s| {
            classes
                .binary_search_by(|c| c.as_str().cmp(s.as_ref()))
                .expect("label drawn from its own class set")
        })
        .collect();
    (classes, encoded)
}

/// Training data in the encoded form every family consumes.
pub(crate) struct TrainSet<'a> {
    pub x: &'a FeatureMatrix,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

pub fn fit<S: AsRef<str>>(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[S]) -> Result<FittedModel> {
    spec.validate()?;
    if y.len() != x.n_samples() {
        return Err(Error::shape(format!("{} labels", x.n_samples()), y.len()));
    }
    let (classes, encoded) = encode_labels(y);
    if classes.is_empty() {
        return Err(Error::Fit("cannot fit on an empty training set".into()));
    }
    if x.n_samples() < classes.len() {
        return Err(Error::Fit(format!(
            "{} samples for {} classes",
            x.n_samples(),
            classes.len()
        )));
    }
    let data = TrainSet {
        x,
        y: encoded,
        n_classes: classes.len(),
    };
    let start = Instant::now();
    let params = match &spec.params {
        Hyperparams::Logreg(p) => ModelParams::Logreg(LogReg::fit(p, &data, spec.seed)),
        Hyperparams::Tree(p) => ModelParams::Tree(Tree::fit(p, &data)),
        Hyperparams::Forest(p) => ModelParams::Forest(Forest::fit(p, &data, spec.seed)),
        Hyperparams::Knn(p) => ModelParams::Knn(KnnModel::fit(p, &data)?),
        Hyperparams::SvmRbf(p) => ModelParams::SvmRbf(SvmModel::fit(p, &data, spec.seed)),
        Hyperparams::Mlp(p) => ModelParams::Mlp(Mlp::fit(p, &data, spec.seed).0),
        Hyperparams::Cnn1d(p) => ModelParams::Cnn1d(Cnn1d::fit(p, &data, spec.seed)?.0),
    };
    Ok(FittedModel {
        classes,
        n_features: x.n_features(),
        params,
        training_seconds: start.elapsed().as_secs_f64(),
    })
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self.params {
            ModelParams::Logreg(_) => Family::Logreg,
            ModelParams::Tree(_) => Family::Tree,
            ModelParams::Forest(_) => Family::Forest,
            ModelParams::Knn(_) => Family::Knn,
            ModelParams::SvmRbf(_) => Family::SvmRbf,
            ModelParams::Mlp(_) => Family::Mlp,
            ModelParams::Cnn1d(_) => Family::Cnn1d,
        }
    }

    fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        match &self.params {
            ModelParams::Logreg(m) => m.proba_row(row, out),
            ModelParams::Tree(m) => out.copy_from_slice(m.leaf(row)),
            ModelParams::Forest(m) => m.proba_row(row, out),
            ModelParams::Knn(m) => m.proba_row(row, out),
            ModelParams::SvmRbf(m) => m.proba_row(row, out),
            ModelParams::Mlp(m) => m.proba_row(row, out),
            ModelParams::Cnn1d(m) => m.proba_row(row, out),
        }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        x.check_width(self.n_features)?;
        let k = self.classes.len();
        let mut data = vec![0.0; x.n_samples() * k];
        for (row, out) in x.rows().zip(data.chunks_exact_mut(k)) {
            self.proba_row(row, out);
        }
        ProbabilityMatrix::new(self.classes.clone(), x.n_samples(), data)
    }

    /// Class indices. Forests take the majority vote of their trees; every
    /// other family takes the probability argmax. Ties go to the earlier class.
    pub fn predict_indices(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        if let ModelParams::Forest(forest) = &self.params {
            x.check_width(self.n_features)?;
            return Ok(x.rows().map(|r| forest.vote(r)).collect());
        }
        Ok(self.predict_proba(x)?.argmax())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(x)?
            .into_iter()
            .map(|i| self.classes[i].clone())
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            model: self.clone(),
        })
        .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("corrupt model document: {e}")))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Format("model document lacks schema_version".into()))?;
        if version != u64::from(MODEL_SCHEMA_VERSION) {
            return Err(Error::Format(format!(
                "unsupported model schema version {version}"
            )));
        }
        let doc: ModelDocument = serde_json::from_value(value)
            .map_err(|e| Error::Format(format!("corrupt model document: {e}")))?;
        let model = doc.model;
        if model.classes.is_empty() {
            return Err(Error::Format("model has an empty class list".into()));
        }
        Ok(model)
    }
}

pub fn predict(model: &FittedModel, x: &FeatureMatrix) -> Result<Vec<String>> {
    model.predict(x)
}

pub fn predict_proba(model: &FittedModel, x: &FeatureMatrix) -> Result<ProbabilityMatrix> {
    model.predict_proba(x)
}

pub fn serialize_model(model: &FittedModel) -> Result<String> {
    model.to_json()
}

pub fn deserialize_model(document: &str) -> Result<FittedModel> {
    FittedModel::from_json(document)
}
