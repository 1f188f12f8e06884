//! Imbalance-aware classification metrics.
//!
//! Any 0/0 precision, recall or F1 is reported as 0, and classes listed but
//! absent from the data still count toward macro averages. Both choices
//! keep the "accuracy trap" visible: a model that ignores rare classes keeps
//! a high accuracy while its macro-F1 collapses.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    /// `confusion[i][j]`: samples of true class `i` predicted as class `j`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub n_samples: usize,
    /// Wall-clock timings; excluded from reproducibility comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

fn class_index(classes: &[String]) -> HashMap<&str, usize> {
    classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect()
}

pub fn confusion_matrix<A: AsRef<str>, B: AsRef<str>>(
    y_true: &[A],
    y_pred: &[B],
    classes: &[String],
) -> Result<Vec<Vec<usize>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(
            format!("{} predictions", y_true.len()),
            y_pred.len(),
        ));
    }
    let index = class_index(classes);
    let lookup = |label: &str, i: usize| {
        index.get(label).copied().ok_or_else(|| Error::Label {
            row: i + 1,
            value: label.to_string(),
            message: "label not in class list".into(),
        })
    };
    let mut m = vec![vec![0usize; classes.len()]; classes.len()];
    for (i, (t, p)) in y_true.iter().zip(y_pred).enumerate() {
        let ti = lookup(t.as_ref(), i)?;
        let pi = lookup(p.as_ref(), i)?;
        m[ti][pi] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Builds the full report from a confusion matrix.
pub fn report_from_confusion(confusion: Vec<Vec<usize>>, classes: &[String]) -> EvalReport {
    let k = classes.len();
    let n: usize = confusion.iter().flatten().sum();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        per_class.push(ClassMetrics {
            class: classes[c].clone(),
            precision,
            recall,
            f1: harmonic(precision, recall),
            support,
        });
    }
    let avg = |f: &dyn Fn(&ClassMetrics) -> f64, weighted: bool| -> f64 {
        if weighted {
            if n == 0 {
                return 0.0;
            }
            per_class
                .iter()
                .map(|m| f(m) * m.support as f64)
                .sum::<f64>()
                / n as f64
        } else if k == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / k as f64
        }
    };
    let averages = |weighted| Averages {
        precision: avg(&|m| m.precision, weighted),
        recall: avg(&|m| m.recall, weighted),
        f1: avg(&|m| m.f1, weighted),
    };
    let macro_avg = averages(false);
    let weighted_avg = averages(true);
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    EvalReport {
        classes: classes.to_vec(),
        accuracy: ratio(correct, n),
        confusion,
        per_class,
        macro_avg,
        weighted_avg,
        n_samples: n,
        timing: None,
    }
}

pub fn classification_report<A: AsRef<str>, B: AsRef<str>>(
    y_true: &[A],
    y_pred: &[B],
    classes: &[String],
) -> Result<EvalReport> {
    let confusion = confusion_matrix(y_true, y_pred, classes)?;
    Ok(report_from_confusion(confusion, classes))
}

pub fn f1_macro<A: AsRef<str>, B: AsRef<str>>(
    y_true: &[A],
    y_pred: &[B],
    classes: &[String],
) -> Result<f64> {
    Ok(classification_report(y_true, y_pred, classes)?.macro_avg.f1)
}

impl EvalReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.class == name)
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.timing = Some(timing);
        self
    }

    /// Aligned plain-text table, four decimals.
    pub fn to_text(&self, title: &str) -> String {
        let width = self
            .per_class
            .iter()
            .map(|m| m.class.len())
            .chain(["Weighted Avg".len()])
            .max()
            .unwrap_or(12);
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "Class", "Precision", "Recall", "F1-Score", "Support"
        );
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                m.class, m.precision, m.recall, m.f1, m.support
            );
        }
        for (name, a) in [("Macro Avg", self.macro_avg), ("Weighted Avg", self.weighted_avg)] {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                name, a.precision, a.recall, a.f1, self.n_samples
            );
        }
        let _ = writeln!(out, "Accuracy  {:.4}", self.accuracy);
        let _ = writeln!(out, "F1-Macro  {:.4}", self.macro_avg.f1);
        out
    }
}
