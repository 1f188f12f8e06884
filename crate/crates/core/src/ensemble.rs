//! Hard, weighted-soft and hybrid voting over fitted members.
//!
//! The hybrid rule keeps the hard vote where it agrees with the soft vote
//! and takes the soft vote otherwise, so its output always equals the soft
//! vote. It is still computed separately because the number of samples
//! where the two disagree is the only thing that tells them apart.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::stratified_indices;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metrics::f1_macro;
use crate::models::{encode_labels, fit, ClassifierSpec, Criterion, Family, FittedModel, ProbabilityMatrix};

/// Share of the training set held out to score members in
/// [`WeightsMode::ValidationF1`].
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsMode {
    #[default]
    Uniform,
    /// Each member weighted by its macro-F1 on a held-out training fold.
    ValidationF1,
}

impl fmt::Display for WeightsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightsMode::Uniform => "uniform",
            WeightsMode::ValidationF1 => "validation-f1",
        })
    }
}

impl FromStr for WeightsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(WeightsMode::Uniform),
            "validation-f1" => Ok(WeightsMode::ValidationF1),
            _ => Err(Error::Argument(format!("unknown weights mode `{s}`"))),
        }
    }
}

/// KNN, TREE(gini), TREE(entropy), SVM_RBF and MLP.
pub fn default_members(seed: u64) -> Vec<ClassifierSpec> {
    vec![
        ClassifierSpec::new(Family::Knn, seed),
        ClassifierSpec::tree(Criterion::Gini, seed),
        ClassifierSpec::tree(Criterion::Entropy, seed),
        ClassifierSpec::new(Family::SvmRbf, seed),
        ClassifierSpec::new(Family::Mlp, seed),
    ]
}

fn check_members(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "an ensemble needs at least 2 members, got {n}"
        )));
    }
    Ok(())
}

/// Per sample, the most frequent label; ties go to the earlier class in
/// `classes`.
pub fn hard_vote<S: AsRef<str>>(predictions: &[Vec<S>], classes: &[String]) -> Result<Vec<String>> {
    check_members(predictions.len())?;
    let n = predictions[0].len();
    for p in predictions {
        if p.len() != n {
            return Err(Error::shape(format!("{n} predictions"), p.len()));
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut votes = vec![0usize; classes.len()];
    for i in 0..n {
        votes.iter_mut().for_each(|v| *v = 0);
        for p in predictions {
            let label = p[i].as_ref();
            let c = classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::Label {
                    row: i + 1,
                    value: label.to_string(),
                    message: "label not in class list".into(),
                })?;
            votes[c] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        out.push(classes[best].clone());
    }
    Ok(out)
}

/// `Σ w_i·P_i / Σ w_i`, then the row argmax.
pub fn weighted_soft_vote(
    probas: &[ProbabilityMatrix],
    weights: &[f64],
) -> Result<(Vec<String>, ProbabilityMatrix)> {
    check_members(probas.len())?;
    if weights.len() != probas.len() {
        return Err(Error::shape(format!("{} weights", probas.len()), weights.len()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Argument(format!("weights must be finite and nonnegative: {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Argument("all ensemble weights are zero".into()));
    }
    let first = &probas[0];
    for p in probas {
        if p.classes != first.classes {
            return Err(Error::Argument("members disagree on the class list".into()));
        }
        if p.n_samples != first.n_samples {
            return Err(Error::shape(format!("{} samples", first.n_samples), p.n_samples));
        }
    }
    let mut data = vec![0.0; first.data.len()];
    for (p, &w) in probas.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (d, v) in data.iter_mut().zip(&p.data) {
            *d += w * v;
        }
    }
    data.iter_mut().for_each(|d| *d /= total);
    let combined = ProbabilityMatrix::new(first.classes.clone(), first.n_samples, data)?;
    Ok((combined.predicted_labels(), combined))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridResult {
    pub predictions: Vec<String>,
    pub disagreements: usize,
}

/// Keeps `hard[i]` when it equals `soft[i]`, otherwise takes `soft[i]`.
pub fn hybrid_consensus<A: AsRef<str>, B: AsRef<str>>(hard: &[A], soft: &[B]) -> Result<HybridResult> {
    if hard.len() != soft.len() {
        return Err(Error::shape(format!("{} predictions", hard.len()), soft.len()));
    }
    let mut disagreements = 0;
    let predictions = hard
        .iter()
        .zip(soft)
        .map(|(h, s)| {
            if h.as_ref() == s.as_ref() {
                h.as_ref().to_string()
            } else {
                disagreements += 1;
                s.as_ref().to_string()
            }
        })
        .collect();
    Ok(HybridResult {
        predictions,
        disagreements,
    })
}

/// Fitted members sharing one class list, with their soft-vote weights.
#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub names: Vec<String>,
    pub members: Vec<FittedModel>,
    pub weights: Vec<f64>,
    pub weights_mode: WeightsMode,
}

impl EnsembleConfig {
    pub fn new(
        names: Vec<String>,
        members: Vec<FittedModel>,
        weights: Vec<f64>,
        weights_mode: WeightsMode,
    ) -> Result<Self> {
        check_members(members.len())?;
        if names.len() != members.len() || weights.len() != members.len() {
            return Err(Error::shape(
                format!("{} names and weights", members.len()),
                names.len().min(weights.len()),
            ));
        }
        if members.iter().any(|m| m.classes != members[0].classes) {
            return Err(Error::Argument("members disagree on the class list".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Argument(format!("invalid ensemble weights {weights:?}")));
        }
        Ok(Self {
            names,
            members,
            weights,
            weights_mode,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.members[0].classes
    }
}

fn fit_all<S: AsRef<str> + Sync>(specs: &[ClassifierSpec], x: &FeatureMatrix, y: &[S]) -> Result<Vec<FittedModel>> {
    specs.par_iter().map(|s| fit(s, x, y)).collect()
}

/// Macro-F1 of each member on a stratified held-out fold of the training
/// data, with every member fitted on the remainder.
pub fn validation_weights<S: AsRef<str> + Sync>(
    specs: &[ClassifierSpec],
    x: &FeatureMatrix,
    y: &[S],
    seed: u64,
) -> Result<Vec<f64>> {
    let (classes, encoded) = encode_labels(y);
    let (fit_idx, val_idx) = stratified_indices(&encoded, VALIDATION_FRACTION, seed)?;
    let x_fit = x.select_rows(&fit_idx);
    let y_fit: Vec<&str> = fit_idx.iter().map(|&i| y[i].as_ref()).collect();
    let x_val = x.select_rows(&val_idx);
    let y_val: Vec<&str> = val_idx.iter().map(|&i| y[i].as_ref()).collect();
    let models = fit_all(specs, &x_fit, &y_fit)?;
    models
        .iter()
        .map(|m| f1_macro(&y_val, &m.predict(&x_val)?, &classes))
        .collect()
}

/// Fits every member on the full training data and assigns weights.
/// Validation-F1 weights fall back to uniform when every member scores 0.
pub fn train_ensemble<S: AsRef<str> + Sync>(
    specs: &[ClassifierSpec],
    x: &FeatureMatrix,
    y: &[S],
    mode: WeightsMode,
    seed: u64,
) -> Result<EnsembleConfig> {
    check_members(specs.len())?;
    let mut weights = match mode {
        WeightsMode::Uniform => vec![1.0; specs.len()],
        WeightsMode::ValidationF1 => validation_weights(specs, x, y, seed)?,
    };
    if weights.iter().all(|&w| w == 0.0) {
        log::warn!("every member scored macro-F1 0 on validation; using uniform weights");
        weights = vec![1.0; specs.len()];
    }
    let members = fit_all(specs, x, y)?;
    let names = specs.iter().map(ClassifierSpec::name).collect();
    EnsembleConfig::new(names, members, weights, mode)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberPredictions {
    pub name: String,
    pub predictions: Vec<String>,
}

/// Serialized ensemble outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_member_predictions: Option<Vec<MemberPredictions>>,
    pub hard: Vec<String>,
    pub soft: Vec<String>,
    pub hybrid: Vec<String>,
    pub disagreements: usize,
    pub weights_mode: WeightsMode,
    pub weights: Vec<f64>,
}

/// Runs all three voting rules on `x`.
pub fn run_ensemble(config: &EnsembleConfig, x: &FeatureMatrix, keep_members: bool) -> Result<EnsembleResult> {
    let outputs: Vec<(Vec<String>, ProbabilityMatrix)> = config
        .members
        .par_iter()
        .map(|m| Ok((m.predict(x)?, m.predict_proba(x)?)))
        .collect::<Result<_>>()?;
    let (predictions, probas): (Vec<_>, Vec<_>) = outputs.into_iter().unzip();
    let hard = hard_vote(&predictions, config.classes())?;
    let (soft, _) = weighted_soft_vote(&probas, &config.weights)?;
    let hybrid = hybrid_consensus(&hard, &soft)?;
    let per_member_predictions = keep_members.then(|| {
        config
            .names
            .iter()
            .cloned()
            .zip(predictions)
            .map(|(name, predictions)| MemberPredictions { name, predictions })
            .collect()
    });
    Ok(EnsembleResult {
        per_member_predictions,
        hard,
        soft,
        hybrid: hybrid.predictions,
        disagreements: hybrid.disagreements,
        weights_mode: config.weights_mode,
        weights: config.weights.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn proba(rows: &[[f64; 2]]) -> ProbabilityMatrix {
        ProbabilityMatrix::new(classes(&["A", "B"]), rows.len(), rows.concat()).unwrap()
    }

    #[test]
    fn hard_vote_majority_and_ties() {
        let cls = classes(&["A", "B", "C"]);
        let out = hard_vote(&[vec!["A"], vec!["A"], vec!["B"]], &cls).unwrap();
        assert_eq!(out, vec!["A"]);
        let tie = hard_vote(&[vec!["B"], vec!["A"]], &cls).unwrap();
        assert_eq!(tie, vec!["A"]);
        let same = vec!["C", "A", "B"];
        assert_eq!(hard_vote(&[same.clone(), same.clone()], &cls).unwrap(), same);
    }

    #[test]
    fn hard_vote_errors() {
        let cls = classes(&["A"]);
        assert!(matches!(hard_vote(&[vec!["A"]], &cls), Err(Error::Argument(_))));
        assert!(matches!(
            hard_vote(&[vec!["A"], vec!["A", "A"]], &cls),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn soft_vote_arithmetic() {
        let (labels, combined) =
            weighted_soft_vote(&[proba(&[[1.0, 0.0]]), proba(&[[0.0, 1.0]])], &[2.0, 1.0]).unwrap();
        assert_eq!(labels, vec!["A"]);
        assert!((combined.row(0)[0] - 2.0 / 3.0).abs() < 1e-15);
        let p = proba(&[[0.3, 0.7], [0.6, 0.4]]);
        let (_, same) = weighted_soft_vote(&[p.clone(), p.clone()], &[1.0, 1.0]).unwrap();
        for (a, b) in same.data.iter().zip(&p.data) {
            assert!((a - b).abs() < 1e-15);
        }
        let (only_first, _) = weighted_soft_vote(&[p.clone(), proba(&[[1.0, 0.0], [0.0, 1.0]])], &[1.0, 0.0]).unwrap();
        assert_eq!(only_first, vec!["B", "A"]);
    }

    #[test]
    fn soft_vote_rejects_zero_weights() {
        let p = proba(&[[0.5, 0.5]]);
        assert!(matches!(
            weighted_soft_vote(&[p.clone(), p], &[0.0, 0.0]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn hybrid_reports_disagreements() {
        let r = hybrid_consensus(&["A", "B"], &["A", "C"]).unwrap();
        assert_eq!(r.predictions, vec!["A", "C"]);
        assert_eq!(r.disagreements, 1);
        let r = hybrid_consensus(&["A"], &["A"]).unwrap();
        assert_eq!(r.disagreements, 0);
        assert!(hybrid_consensus(&["A"], &["A", "B"]).is_err());
    }

    #[test]
    fn weights_mode_parsing() {
        assert_eq!("validation-f1".parse::<WeightsMode>().unwrap(), WeightsMode::ValidationF1);
        assert_eq!("UNIFORM".parse::<WeightsMode>().unwrap(), WeightsMode::Uniform);
        assert!("best".parse::<WeightsMode>().is_err());
        assert_eq!(serde_json::to_string(&WeightsMode::ValidationF1).unwrap(), "\"validation-f1\"");
    }

    #[test]
    fn trained_ensemble_end_to_end() {
        let rows: Vec<[f64; 4]> = (0..60)
            .map(|i| {
                let c = (i % 3) as f64;
                [c * 3.0 + (i % 5) as f64 * 0.1, c - (i % 7) as f64 * 0.05, (i % 2) as f64, c * 0.5]
            })
            .collect();
        let y: Vec<String> = (0..60).map(|i| format!("k{}", i % 3)).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let mut specs = default_members(2);
        // keep the test fast
        if let crate::models::Hyperparams::Mlp(p) = &mut specs[4].params {
            p.epochs = 30;
        }
        for mode in [WeightsMode::Uniform, WeightsMode::ValidationF1] {
            let cfg = train_ensemble(&specs, &x, &y, mode, 2).unwrap();
            assert_eq!(cfg.names[1], "TREE(gini)");
            let r = run_ensemble(&cfg, &x, true).unwrap();
            assert_eq!(r.hybrid, r.soft);
            assert_eq!(r.per_member_predictions.as_ref().unwrap().len(), 5);
            let correct = r.soft.iter().zip(&y).filter(|(a, b)| a == b).count();
            assert!(correct >= 57, "{mode}: {correct}/60");
        }
    }
}
