//! Exploratory statistics over a record table: class distributions, CAN ID
//! frequencies, per-category byte means, payload-sum histograms and the
//! Pearson correlation matrix of the numeric features against `is_attack`.
//!
//! Every result serializes to JSON and has a CSV rendering for plotting.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Category, RecordTable, FEATURE_NAMES};
use crate::error::{Error, Result};

/// Upper bound of the payload sum, `8 × 255`.
pub const MAX_PAYLOAD_SUM: u32 = 2040;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLevel {
    Category,
    SpecificClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub class: String,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub level: ClassLevel,
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn get(&self, class: &str) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| r.class == class)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,percentage\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.2}", r.class, r.count, r.percentage);
        }
        out
    }
}

/// Counts and percentages per class, sorted by descending count (ties by
/// class order).
pub fn class_distribution(table: &RecordTable, level: ClassLevel) -> Result<DistributionTable> {
    if table.is_empty() {
        return Err(Error::Statistics("class distribution of an empty table".into()));
    }
    let mut counts: BTreeMap<(u8, &'static str), usize> = BTreeMap::new();
    for r in table.records() {
        let key = match level {
            ClassLevel::Category => (r.category as u8, r.category.as_str()),
            ClassLevel::SpecificClass => (r.specific_class as u8, r.specific_class.as_str()),
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    let total = table.len() as f64;
    let mut rows: Vec<DistributionRow> = counts
        .into_iter()
        .map(|((_, name), count)| DistributionRow {
            class: name.to_string(),
            count,
            percentage: 100.0 * count as f64 / total,
        })
        .collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.count));
    Ok(DistributionTable { level, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdFrequency {
    pub id: u16,
    pub count: usize,
    /// Counts per category, in category order, for the categories present.
    pub by_category: BTreeMap<Category, usize>,
}

/// The `k` most frequent arbitration IDs; ties go to the smaller ID.
pub fn top_ids(table: &RecordTable, k: usize) -> Result<Vec<IdFrequency>> {
    if k == 0 {
        return Err(Error::Argument("top_ids needs k >= 1".into()));
    }
    let mut freq: HashMap<u16, IdFrequency> = HashMap::new();
    for r in table.records() {
        let entry = freq.entry(r.id).or_insert_with(|| IdFrequency {
            id: r.id,
            count: 0,
            by_category: BTreeMap::new(),
        });
        entry.count += 1;
        *entry.by_category.entry(r.category).or_insert(0) += 1;
    }
    let mut all: Vec<IdFrequency> = freq.into_values().collect();
    all.sort_by(|a, b| b.count.cmp(&a.count).then(a.id.cmp(&b.id)));
    all.truncate(k);
    Ok(all)
}

pub fn top_ids_csv(rows: &[IdFrequency]) -> String {
    let mut out = String::from("id,count");
    for c in Category::ALL {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.id, r.count);
        for c in Category::ALL {
            let _ = write!(out, ",{}", r.by_category.get(c).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ByteMeans {
    /// One row per category present: mean of DATA_0..DATA_7.
    pub rows: Vec<(Category, [f64; 8])>,
    pub overall: [f64; 8],
}

impl ByteMeans {
    pub fn get(&self, category: Category) -> Option<&[f64; 8]> {
        self.rows.iter().find(|(c, _)| *c == category).map(|(_, m)| m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category");
        for name in &FEATURE_NAMES[1..] {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        let mut line = |name: &str, means: &[f64; 8]| {
            out.push_str(name);
            for m in means {
                let _ = write!(out, ",{m:.4}");
            }
            out.push('\n');
        };
        for (c, m) in &self.rows {
            line(c.as_str(), m);
        }
        line("ALL", &self.overall);
        out
    }
}

pub fn byte_means_by_category(table: &RecordTable) -> ByteMeans {
    let mut sums: BTreeMap<Category, ([u64; 8], usize)> = BTreeMap::new();
    let mut all = [0u64; 8];
    for r in table.records() {
        let entry = sums.entry(r.category).or_insert(([0; 8], 0));
        for (k, &b) in r.data.iter().enumerate() {
            entry.0[k] += u64::from(b);
            all[k] += u64::from(b);
        }
        entry.1 += 1;
    }
    let mean = |s: &[u64; 8], n: usize| -> [f64; 8] {
        if n == 0 {
            return [0.0; 8];
        }
        s.map(|v| v as f64 / n as f64)
    };
    ByteMeans {
        rows: sums
            .iter()
            .map(|(&c, (s, n))| (c, mean(s, *n)))
            .collect(),
        overall: mean(&all, table.len()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayloadHistogram {
    /// `bins + 1` edges spanning `[0, 2040]`.
    pub edges: Vec<f64>,
    pub counts: BTreeMap<Category, Vec<usize>>,
}

impl PayloadHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end");
        for c in self.counts.keys() {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for b in 0..self.edges.len() - 1 {
            let _ = write!(out, "{:.4},{:.4}", self.edges[b], self.edges[b + 1]);
            for counts in self.counts.values() {
                let _ = write!(out, ",{}", counts[b]);
            }
            out.push('\n');
        }
        out
    }
}

/// Bin index of a payload sum for equal-width bins over `[0, 2040]`; the
/// upper edge belongs to the last bin.
pub fn payload_bin(sum: u32, bins: usize) -> usize {
    let idx = (u64::from(sum) * bins as u64 / u64::from(MAX_PAYLOAD_SUM)) as usize;
    idx.min(bins - 1)
}

pub fn payload_sum_histogram(table: &RecordTable, bins: usize) -> Result<PayloadHistogram> {
    if bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    let width = f64::from(MAX_PAYLOAD_SUM) / bins as f64;
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for r in table.records() {
        counts.entry(r.category).or_insert_with(|| vec![0; bins])[payload_bin(r.payload_sum(), bins)] +=
            1;
    }
    Ok(PayloadHistogram { edges, counts })
}

/// Names of the correlation matrix axes.
pub const CORRELATION_FEATURES: [&str; 10] = [
    "ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3", "DATA_4", "DATA_5", "DATA_6", "DATA_7",
    "is_attack",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Names of zero-variance columns whose correlations were set to 0.
    pub constant_columns: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.values) {
            out.push_str(n);
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlation of the columns of `rows`. Constant columns correlate
/// 0 with everything, including themselves, and are reported by index.
pub fn pearson_matrix(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if rows.len() < 2 {
        return Err(Error::Statistics(format!(
            "correlation needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; d]; d];
    for row in rows {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    let constant: Vec<usize> = (0..d).filter(|&i| cov[i][i] <= 0.0).collect();
    let mut corr = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let value = if constant.contains(&i) || constant.contains(&j) {
                0.0
            } else if i == j {
                1.0
            } else {
                (cov[i][j] / (cov[i][i].sqrt() * cov[j][j].sqrt())).clamp(-1.0, 1.0)
            };
            corr[i][j] = value;
            corr[j][i] = value;
        }
    }
    Ok((corr, constant))
}

pub fn correlation_matrix(table: &RecordTable) -> Result<CorrelationMatrix> {
    let rows: Vec<Vec<f64>> = table
        .records()
        .iter()
        .map(|r| {
            let mut v = r.features().to_vec();
            v.push(if r.is_attack() { 1.0 } else { 0.0 });
            v
        })
        .collect();
    let (values, constant) = pearson_matrix(&rows)?;
    let constant_columns: Vec<String> = constant
        .iter()
        .map(|&i| CORRELATION_FEATURES[i].to_string())
        .collect();
    if !constant_columns.is_empty() {
        log::warn!(
            "constant columns given zero correlation: {}",
            constant_columns.join(", ")
        );
    }
    Ok(CorrelationMatrix {
        names: CORRELATION_FEATURES.iter().map(|s| s.to_string()).collect(),
        values,
        constant_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CanFrameRecord, SpecificClass};

    fn rec(id: u16, data: [u8; 8], class: SpecificClass) -> CanFrameRecord {
        CanFrameRecord::new(id, data, class).unwrap()
    }

    #[test]
    fn single_class_is_full_share() {
        let t = RecordTable::from_records(vec![rec(1, [0; 8], SpecificClass::Dos); 4], "x");
        let d = class_distribution(&t, ClassLevel::Category).unwrap();
        assert_eq!(d.rows.len(), 1);
        assert_eq!(d.rows[0].class, "DOS");
        assert_eq!(d.rows[0].percentage, 100.0);
        assert!(class_distribution(&RecordTable::new(), ClassLevel::Category).is_err());
    }

    #[test]
    fn distribution_sorted_descending() {
        let mut recs = vec![rec(1, [0; 8], SpecificClass::Gas); 2];
        recs.extend(vec![rec(2, [0; 8], SpecificClass::Benign); 5]);
        let t = RecordTable::from_records(recs, "x");
        let d = class_distribution(&t, ClassLevel::SpecificClass).unwrap();
        assert_eq!(d.rows[0].class, "BENIGN");
        assert_eq!(d.rows[1].count, 2);
    }

    #[test]
    fn top_ids_ties_and_overflow() {
        let t = RecordTable::from_records(
            vec![
                rec(9, [0; 8], SpecificClass::Benign),
                rec(3, [0; 8], SpecificClass::Benign),
                rec(291, [0; 8], SpecificClass::Dos),
                rec(291, [0; 8], SpecificClass::Dos),
            ],
            "x",
        );
        let top = top_ids(&t, 10).unwrap();
        assert_eq!(top.iter().map(|f| f.id).collect::<Vec<_>>(), vec![291, 3, 9]);
        assert_eq!(top[0].by_category[&Category::Dos], 2);
        assert!(top_ids(&t, 0).is_err());
    }

    #[test]
    fn byte_means() {
        let t = RecordTable::from_records(
            vec![
                rec(1, [0; 8], SpecificClass::Benign),
                rec(1, [2, 0, 0, 0, 0, 0, 0, 0], SpecificClass::Benign),
                rec(291, [0; 8], SpecificClass::Dos),
            ],
            "x",
        );
        let m = byte_means_by_category(&t);
        assert_eq!(m.get(Category::Benign).unwrap()[0], 1.0);
        assert_eq!(m.get(Category::Dos).unwrap(), &[0.0; 8]);
    }

    #[test]
    fn histogram_edges() {
        let t = RecordTable::from_records(
            vec![
                rec(1, [255; 8], SpecificClass::Benign),
                rec(1, [0; 8], SpecificClass::Benign),
                rec(1, [0; 8], SpecificClass::Benign),
            ],
            "x",
        );
        let h = payload_sum_histogram(&t, 10).unwrap();
        let counts = &h.counts[&Category::Benign];
        assert_eq!(counts[9], 1);
        assert_eq!(counts[0], 2);
        assert_eq!(counts.iter().sum::<usize>(), 3);
        assert_eq!(h.edges.len(), 11);
    }

    #[test]
    fn correlation_basics() {
        let t = RecordTable::from_records(
            vec![
                rec(1, [0, 5, 0, 0, 0, 0, 0, 0], SpecificClass::Benign),
                rec(2, [1, 3, 0, 0, 0, 0, 0, 0], SpecificClass::Dos),
                rec(4, [2, 1, 0, 0, 0, 0, 0, 0], SpecificClass::Dos),
            ],
            "x",
        );
        let c = correlation_matrix(&t).unwrap();
        assert_eq!(c.get("DATA_0", "DATA_0"), Some(1.0));
        assert!((c.get("DATA_0", "DATA_1").unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(c.get("DATA_2", "DATA_2"), Some(0.0));
        assert!(c.constant_columns.contains(&"DATA_2".to_string()));
        let one = RecordTable::from_records(vec![rec(1, [0; 8], SpecificClass::Benign)], "x");
        assert!(correlation_matrix(&one).is_err());
    }
}
