//! End-to-end commands: exploratory statistics, the feature-set benchmark,
//! the voting ensemble and synthetic data generation.
//!
//! Every command deduplicates before splitting and fits every transform and
//! model on the train partition only. Apart from `benchmark.csv`, which
//! carries wall-clock timings, outputs are byte-identical for a given
//! configuration.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    byte_means_by_category, class_distribution, correlation_matrix, payload_sum_histogram,
    top_ids, top_ids_csv, ByteMeans, ClassLevel, CorrelationMatrix, DistributionTable,
    IdFrequency, PayloadHistogram,
};
use crate::dataset::{
    deduplicate, duplicate_report, generate_synthetic, load_dataset_dir, stratified_split,
    write_decimal_file, DuplicateReport, RecordTable, SpecificClass, SynthConfig,
    CANONICAL_FILES,
};
use crate::ensemble::{run_ensemble, train_ensemble, EnsembleResult, WeightsMode};
use crate::error::{Error, Result};
use crate::features::{anova_f_scores, fit_lda, fit_pca, fit_scaler, select_k_best, FeatureMatrix, FittedTransform};
use crate::metrics::{classification_report, EvalReport, Timing};
use crate::models::{fit, ClassifierSpec, Criterion, Family};

pub const DEFAULT_TEST_FRACTION: f64 = 0.30;
pub const PCA_VARIANCE_TARGET: f64 = 0.95;
pub const ANOVA_K: usize = 5;
pub const TOP_ID_COUNT: usize = 20;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeatureSet {
    Original,
    Pca,
    Lda,
    Anova,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [FeatureSet::Original, FeatureSet::Pca, FeatureSet::Lda, FeatureSet::Anova];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Original => "ORIGINAL",
            FeatureSet::Pca => "PCA",
            FeatureSet::Lda => "LDA",
            FeatureSet::Anova => "ANOVA",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == upper)
            .ok_or_else(|| Error::Argument(format!("unknown feature set `{s}`")))
    }
}

/// Parses `LOGREG`, `FOREST`, `TREE`, `TREE(entropy)` and so on into the
/// family's default spec.
pub fn parse_model(name: &str, seed: u64) -> Result<ClassifierSpec> {
    let trimmed = name.trim();
    let upper = trimmed.to_ascii_uppercase();
    if let Some(inner) = upper.strip_prefix("TREE(").and_then(|r| r.strip_suffix(')')) {
        let criterion = match inner {
            "GINI" => Criterion::Gini,
            "ENTROPY" => Criterion::Entropy,
            _ => return Err(Error::Argument(format!("unknown tree criterion in `{name}`"))),
        };
        return Ok(ClassifierSpec::tree(criterion, seed));
    }
    Ok(ClassifierSpec::new(trimmed.parse::<Family>()?, seed))
}

/// LOGREG, TREE(gini), FOREST, KNN, SVM_RBF, MLP and CNN1D.
pub fn default_models(seed: u64) -> Vec<ClassifierSpec> {
    [Family::Logreg, Family::Tree, Family::Forest, Family::Knn, Family::SvmRbf, Family::Mlp, Family::Cnn1d]
        .into_iter()
        .map(|f| ClassifierSpec::new(f, seed))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Directory(PathBuf),
    Synthetic(SynthConfig),
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<RecordTable> {
        match self {
            DataSource::Directory(dir) => load_dataset_dir(dir),
            DataSource::Synthetic(cfg) => generate_synthetic(cfg, seed),
        }
    }

    fn describe(&self) -> String {
        match self {
            DataSource::Directory(dir) => dir.display().to_string(),
            DataSource::Synthetic(_) => "synthetic".into(),
        }
    }
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: SynthConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: DataSource,
    pub seed: u64,
    pub test_fraction: f64,
    pub feature_sets: Vec<FeatureSet>,
    /// Benchmark models, or the ensemble members for `cmd_ensemble`.
    pub models: Vec<ClassifierSpec>,
    pub out_dir: PathBuf,
    pub weights_mode: WeightsMode,
    /// Worker threads for benchmark cells; `None` uses every core.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(source: DataSource, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source,
            seed,
            test_fraction: DEFAULT_TEST_FRACTION,
            feature_sets: FeatureSet::ALL.to_vec(),
            models: default_models(seed),
            out_dir: out_dir.into(),
            weights_mode: WeightsMode::Uniform,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_sets.is_empty() {
            return Err(Error::Argument("no feature sets selected".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Argument("no models selected".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "test fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::Argument("jobs must be at least 1".into()));
        }
        self.models.iter().try_for_each(ClassifierSpec::validate)
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn all_class_names() -> Vec<String> {
    SpecificClass::ALL.iter().map(|c| c.as_str().to_string()).collect()
}

fn labels(table: &RecordTable) -> Vec<&'static str> {
    table.records().iter().map(|r| r.specific_class.as_str()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatsReport {
    pub seed: u64,
    pub n_records: usize,
    pub sources: Vec<(String, usize)>,
    pub category_distribution: DistributionTable,
    pub specific_distribution: DistributionTable,
    pub top_ids: Vec<IdFrequency>,
    pub byte_means: ByteMeans,
    pub payload_histogram: PayloadHistogram,
    pub correlation: CorrelationMatrix,
    pub duplicates: DuplicateReport,
}

pub fn stats_report(table: &RecordTable, seed: u64) -> Result<StatsReport> {
    Ok(StatsReport {
        seed,
        n_records: table.len(),
        sources: table.source_counts(),
        category_distribution: class_distribution(table, ClassLevel::Category)?,
        specific_distribution: class_distribution(table, ClassLevel::SpecificClass)?,
        top_ids: top_ids(table, TOP_ID_COUNT)?,
        byte_means: byte_means_by_category(table),
        payload_histogram: payload_sum_histogram(table, HISTOGRAM_BINS)?,
        correlation: correlation_matrix(table)?,
        duplicates: duplicate_report(table),
    })
}

fn duplicates_csv(report: &DuplicateReport) -> String {
    let mut out = String::from("category,duplicate_count,total_records,duplicate_fraction,unique_messages\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{}",
            r.category, r.duplicate_count, r.total_records, r.duplicate_fraction, r.unique_messages
        );
    }
    let _ = writeln!(out, "TOTAL_DEDUPLICATED,,{},,", report.deduplicated_total);
    let _ = writeln!(out, "UNIQUE_FRAMES_IGNORING_LABELS,,{},,", report.unique_frames_ignoring_labels);
    out
}

/// Writes the EDA tables as CSV plus one combined `stats.json`.
pub fn cmd_stats(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let table = config.source.load(config.seed)?;
    let report = stats_report(&table, config.seed)?;
    create_dir(&config.out_dir)?;
    let dir = &config.out_dir;
    Ok(vec![
        write(dir, "category_distribution.csv", &report.category_distribution.to_csv())?,
        write(dir, "specific_distribution.csv", &report.specific_distribution.to_csv())?,
        write(dir, "top_ids.csv", &top_ids_csv(&report.top_ids))?,
        write(dir, "byte_means.csv", &report.byte_means.to_csv())?,
        write(dir, "payload_histogram.csv", &report.payload_histogram.to_csv())?,
        write(dir, "correlation.csv", &report.correlation.to_csv())?,
        write(dir, "duplicates.csv", &duplicates_csv(&report.duplicates))?,
        write(dir, "stats.json", &to_json(&report)?)?,
    ])
}

/// Train and test matrices in one feature space, with the transforms that
/// produced them (all fitted on train).
#[derive(Clone, Debug)]
pub struct PreparedFeatures {
    pub feature_set: FeatureSet,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub transforms: Vec<FittedTransform>,
    /// Classes left out of the LDA fit for having fewer than two train rows.
    pub lda_excluded_classes: Vec<String>,
}

pub fn prepare_features(
    feature_set: FeatureSet,
    train: &FeatureMatrix,
    train_labels: &[&str],
    test: &FeatureMatrix,
) -> Result<PreparedFeatures> {
    let scaler = fit_scaler(train)?;
    let train_s = scaler.transform(train)?;
    let test_s = scaler.transform(test)?;
    let mut excluded = Vec::new();
    let reducer = match feature_set {
        FeatureSet::Original => None,
        FeatureSet::Pca => Some(fit_pca(&train_s, PCA_VARIANCE_TARGET)?),
        FeatureSet::Anova => {
            let scores = anova_f_scores(&train_s, train_labels)?;
            Some(select_k_best(&scores.f_values, ANOVA_K.min(train.n_features()))?)
        }
        FeatureSet::Lda => {
            let mut counts = std::collections::BTreeMap::<&str, usize>::new();
            for l in train_labels {
                *counts.entry(l).or_default() += 1;
            }
            excluded = counts
                .iter()
                .filter(|(_, &n)| n < 2)
                .map(|(c, _)| c.to_string())
                .collect();
            let keep: Vec<usize> = (0..train_labels.len())
                .filter(|&i| counts[train_labels[i]] >= 2)
                .collect();
            if !excluded.is_empty() {
                log::warn!("LDA fit excludes single-record classes {excluded:?}");
            }
            let kept_labels: Vec<&str> = keep.iter().map(|&i| train_labels[i]).collect();
            Some(fit_lda(&train_s.select_rows(&keep), &kept_labels)?)
        }
    };
    let (train_out, test_out, transforms) = match reducer {
        None => (train_s, test_s, vec![scaler]),
        Some(r) => (r.transform(&train_s)?, r.transform(&test_s)?, vec![scaler, r]),
    };
    Ok(PreparedFeatures {
        feature_set,
        train: train_out,
        test: test_out,
        transforms,
        lda_excluded_classes: excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// Neural models run on ORIGINAL features only.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub feature_set: FeatureSet,
    pub model: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureSetSummary {
    pub feature_set: FeatureSet,
    pub output_dim: usize,
    pub transforms: Vec<FittedTransform>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lda_excluded_classes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitSummary {
    pub n_records: usize,
    pub n_deduplicated: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub split: SplitSummary,
    pub feature_sets: Vec<FeatureSetSummary>,
    pub cells: Vec<BenchmarkCell>,
    /// Wall-clock timings per cell, in cell order. Not serialized.
    #[serde(skip)]
    pub timings: Vec<Option<Timing>>,
}

impl BenchmarkReport {
    pub fn cell(&self, feature_set: FeatureSet, model: &str) -> Option<&BenchmarkCell> {
        self.cells
            .iter()
            .find(|c| c.feature_set == feature_set && c.model == model)
    }

    /// Per-cell accuracy and macro-F1 without timings.
    pub fn comparison_csv(&self) -> String {
        let mut out = String::from("seed,feature_set,model,status,accuracy,f1_macro\n");
        for c in &self.cells {
            let (acc, f1) = metric_cells(c);
            let _ = writeln!(out, "{},{},{},{},{acc},{f1}", self.seed, c.feature_set, c.model, status_str(c.status));
        }
        out
    }

    /// The comparison plus `time_s` (fit + predict seconds).
    pub fn timed_csv(&self) -> String {
        let mut out = String::from("seed,feature_set,model,status,accuracy,f1_macro,time_s\n");
        for (c, t) in self.cells.iter().zip(&self.timings) {
            let (acc, f1) = metric_cells(c);
            let time = t.map_or(String::new(), |t| format!("{:.4}", t.fit_seconds + t.predict_seconds));
            let _ = writeln!(
                out,
                "{},{},{},{},{acc},{f1},{time}",
                self.seed,
                c.feature_set,
                c.model,
                status_str(c.status)
            );
        }
        out
    }

    /// Aligned summary followed by the per-class report of every cell.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Model performance by feature set (seed {})", self.seed);
        let _ = writeln!(out, "{:<10}  {:<14}  {:>8}  {:>8}", "Features", "Model", "Accuracy", "F1-Macro");
        for c in &self.cells {
            if let Some(r) = &c.report {
                let _ = writeln!(
                    out,
                    "{:<10}  {:<14}  {:>8.4}  {:>8.4}",
                    c.feature_set.as_str(),
                    c.model,
                    r.accuracy,
                    r.macro_avg.f1
                );
            }
        }
        for c in &self.cells {
            if let Some(r) = &c.report {
                out.push('\n');
                out.push_str(&r.to_text(&format!("{} / {}", c.feature_set, c.model)));
            }
        }
        out
    }
}

fn status_str(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Ok => "ok",
        CellStatus::Skipped => "skipped",
    }
}

fn metric_cells(c: &BenchmarkCell) -> (String, String) {
    match &c.report {
        Some(r) => (format!("{:.4}", r.accuracy), format!("{:.4}", r.macro_avg.f1)),
        None => (String::new(), String::new()),
    }
}

/// Deduplicated table and its stratified split, shared by the benchmark and
/// the ensemble.
struct Partition {
    summary: SplitSummary,
    train: RecordTable,
    test: RecordTable,
}

fn partition(config: &RunConfig) -> Result<Partition> {
    let table = config.source.load(config.seed)?;
    let unique = deduplicate(&table);
    log::info!(
        "{}: {} records, {} after deduplication",
        config.source.describe(),
        table.len(),
        unique.len()
    );
    let split = stratified_split(&unique, config.test_fraction, config.seed)?;
    Ok(Partition {
        summary: SplitSummary {
            n_records: table.len(),
            n_deduplicated: unique.len(),
            n_train: split.train.len(),
            n_test: split.test.len(),
            test_fraction: config.test_fraction,
        },
        train: split.train,
        test: split.test,
    })
}

fn run_cell(
    spec: &ClassifierSpec,
    prepared: &PreparedFeatures,
    y_train: &[&str],
    y_test: &[&str],
    classes: &[String],
) -> Result<(EvalReport, Timing)> {
    let start = Instant::now();
    let model = fit(spec, &prepared.train, y_train)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let predicted = model.predict(&prepared.test)?;
    let predict_seconds = start.elapsed().as_secs_f64();
    let report = classification_report(y_test, &predicted, classes)?;
    Ok((
        report,
        Timing {
            fit_seconds,
            predict_seconds,
        },
    ))
}

/// Evaluates every (feature set, model) cell. Rows come back in feature-set
/// order, then model order, however the worker pool schedules them.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let part = partition(config)?;
    let x_train = FeatureMatrix::from_table(&part.train);
    let x_test = FeatureMatrix::from_table(&part.test);
    let y_train = labels(&part.train);
    let y_test = labels(&part.test);
    let classes = all_class_names();

    let prepared: Vec<PreparedFeatures> = config
        .feature_sets
        .iter()
        .map(|&fs| prepare_features(fs, &x_train, &y_train, &x_test))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, &ClassifierSpec)> = (0..prepared.len())
        .flat_map(|p| config.models.iter().map(move |m| (p, m)))
        .collect();
    let evaluate = || {
        jobs.par_iter()
            .map(|&(p, spec)| {
                let fs = prepared[p].feature_set;
                let name = spec.name();
                if spec.family().is_neural() && fs != FeatureSet::Original {
                    return Ok((
                        BenchmarkCell {
                            feature_set: fs,
                            model: name,
                            status: CellStatus::Skipped,
                            report: None,
                        },
                        None,
                    ));
                }
                let (report, timing) = run_cell(spec, &prepared[p], &y_train, &y_test, &classes)
                    .map_err(|e| Error::Cell {
                        feature_set: fs.to_string(),
                        model: name.clone(),
                        source: Box::new(e),
                    })?;
                Ok((
                    BenchmarkCell {
                        feature_set: fs,
                        model: name,
                        status: CellStatus::Ok,
                        report: Some(report),
                    },
                    Some(timing),
                ))
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build a {n}-thread pool: {e}")))?
            .install(evaluate)?,
        None => evaluate()?,
    };
    let (cells, timings) = results.into_iter().unzip();
    Ok(BenchmarkReport {
        seed: config.seed,
        split: part.summary,
        feature_sets: prepared
            .into_iter()
            .map(|p| FeatureSetSummary {
                feature_set: p.feature_set,
                output_dim: p.train.n_features(),
                transforms: p.transforms,
                lda_excluded_classes: p.lda_excluded_classes,
            })
            .collect(),
        cells,
        timings,
    })
}

/// Runs the benchmark and writes `benchmark.csv` (with timings),
/// `comparison.csv`, `benchmark.json` and `benchmark.txt`.
pub fn cmd_benchmark(config: &RunConfig) -> Result<BenchmarkReport> {
    let report = run_benchmark(config)?;
    create_dir(&config.out_dir)?;
    let dir = &config.out_dir;
    write(dir, "benchmark.csv", &report.timed_csv())?;
    write(dir, "comparison.csv", &report.comparison_csv())?;
    write(dir, "benchmark.json", &to_json(&report)?)?;
    write(dir, "benchmark.txt", &report.to_text())?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub seed: u64,
    pub split: SplitSummary,
    pub members: Vec<String>,
    pub hard: EvalReport,
    pub soft: EvalReport,
    pub hybrid: EvalReport,
    pub result: EnsembleResult,
    /// Test rows (0-based, in test order) where hard and soft votes differ.
    pub disagreement_rows: Vec<usize>,
}

impl EnsembleReport {
    pub fn to_text(&self) -> String {
        let mut out = self.hybrid.to_text(&format!(
            "Final ensemble results, hybrid consensus (seed {})",
            self.seed
        ));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12}  {:>8}  {:>8}", "Method", "Accuracy", "F1-Macro");
        for (name, r) in [("Hard Vote", &self.hard), ("Soft Vote", &self.soft), ("Hybrid", &self.hybrid)] {
            let _ = writeln!(out, "{:<12}  {:>8.4}  {:>8.4}", name, r.accuracy, r.macro_avg.f1);
        }
        let _ = writeln!(out, "Disagreements  {}", self.result.disagreements);
        let _ = writeln!(out, "Weights ({})", self.result.weights_mode);
        for (m, w) in self.members.iter().zip(&self.result.weights) {
            let _ = writeln!(out, "  {m:<14}  {w:.4}");
        }
        out
    }
}

/// Trains the configured models as ensemble members (see
/// [`crate::ensemble::default_members`]) on standardized ORIGINAL features and scores all three
/// voting rules on the test split.
pub fn run_ensemble_experiment(config: &RunConfig) -> Result<EnsembleReport> {
    config.validate()?;
    let part = partition(config)?;
    let x_train = FeatureMatrix::from_table(&part.train);
    let x_test = FeatureMatrix::from_table(&part.test);
    let y_train = labels(&part.train);
    let y_test = labels(&part.test);
    let prepared = prepare_features(FeatureSet::Original, &x_train, &y_train, &x_test)?;
    let ensemble = train_ensemble(&config.models, &prepared.train, &y_train, config.weights_mode, config.seed)?;
    let result = run_ensemble(&ensemble, &prepared.test, true)?;
    let classes = all_class_names();
    let disagreement_rows = result
        .hard
        .iter()
        .zip(&result.soft)
        .enumerate()
        .filter(|(_, (h, s))| h != s)
        .map(|(i, _)| i)
        .collect();
    Ok(EnsembleReport {
        seed: config.seed,
        split: part.summary,
        members: ensemble.names.clone(),
        hard: classification_report(&y_test, &result.hard, &classes)?,
        soft: classification_report(&y_test, &result.soft, &classes)?,
        hybrid: classification_report(&y_test, &result.hybrid, &classes)?,
        result,
        disagreement_rows,
    })
}

/// Writes `ensemble.txt`, `ensemble.json` and `disagreements.csv`.
pub fn cmd_ensemble(config: &RunConfig) -> Result<EnsembleReport> {
    let report = run_ensemble_experiment(config)?;
    create_dir(&config.out_dir)?;
    let dir = &config.out_dir;
    write(dir, "ensemble.txt", &report.to_text())?;
    write(dir, "ensemble.json", &to_json(&report)?)?;
    let mut csv = String::from("test_row,hard,soft\n");
    for &i in &report.disagreement_rows {
        let _ = writeln!(csv, "{i},{},{}", report.result.hard[i], report.result.soft[i]);
    }
    write(dir, "disagreements.csv", &csv)?;
    Ok(report)
}

/// Writes the six canonical decimal CSVs, one per specific class.
pub fn cmd_synth(config: &SynthConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let table = generate_synthetic(config, seed)?;
    create_dir(out_dir)?;
    let mut written = Vec::with_capacity(CANONICAL_FILES.len());
    for ((file, _), class) in CANONICAL_FILES.iter().zip(SpecificClass::ALL) {
        let indices: Vec<usize> = table
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.specific_class == *class)
            .map(|(i, _)| i)
            .collect();
        let path = out_dir.join(file);
        write_decimal_file(&table.select(&indices), &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_decimal_csv, Category};
    use crate::features::TransformParams;

    fn small_synth() -> SynthConfig {
        SynthConfig::default().scaled(0.03)
    }

    fn fast_models(seed: u64) -> Vec<ClassifierSpec> {
        ["LOGREG", "TREE", "TREE(entropy)", "KNN"]
            .iter()
            .map(|m| parse_model(m, seed).unwrap())
            .collect()
    }

    #[test]
    fn parse_names() {
        assert_eq!(parse_model("tree(entropy)", 1).unwrap().name(), "TREE(entropy)");
        assert_eq!(parse_model("svm_rbf", 1).unwrap().family(), Family::SvmRbf);
        assert!(parse_model("TREE(log)", 1).is_err());
        assert_eq!("pca".parse::<FeatureSet>().unwrap(), FeatureSet::Pca);
        assert!("raw".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn benchmark_rows_and_train_only_scaler() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(DataSource::Synthetic(small_synth()), 4, dir.path());
        cfg.models = fast_models(4);
        cfg.models.push(parse_model("MLP", 4).unwrap());
        if let crate::models::Hyperparams::Mlp(p) = &mut cfg.models[4].params {
            p.epochs = 5;
        }
        let report = cmd_benchmark(&cfg).unwrap();
        assert_eq!(report.cells.len(), 4 * 5);
        let skipped = report.cells.iter().filter(|c| c.status == CellStatus::Skipped).count();
        assert_eq!(skipped, 3);

        // recompute the scaler from the train partition alone
        let table = generate_synthetic(&cfg.source_synth(), 4).unwrap();
        let split = stratified_split(&deduplicate(&table), cfg.test_fraction, 4).unwrap();
        let means = FeatureMatrix::from_table(&split.train).mean();
        match &report.feature_sets[0].transforms[0].params {
            TransformParams::Scaler { means: stored, .. } => assert_eq!(stored, &means),
            other => panic!("expected scaler, got {other:?}"),
        }
        for name in ["benchmark.csv", "comparison.csv", "benchmark.json", "benchmark.txt"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
    }

    #[test]
    fn tree_separates_full_size_synthetic() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(DataSource::Synthetic(SynthConfig::default()), 11, dir.path());
        cfg.models = vec![parse_model("TREE", 11).unwrap()];
        cfg.feature_sets = vec![FeatureSet::Original];
        let report = run_benchmark(&cfg).unwrap();
        let acc = report.cells[0].report.as_ref().unwrap().accuracy;
        assert!(acc >= 0.99, "{}", report.to_text());
    }

    impl RunConfig {
        fn source_synth(&self) -> SynthConfig {
            match &self.source {
                DataSource::Synthetic(c) => c.clone(),
                DataSource::Directory(_) => unreachable!(),
            }
        }
    }

    #[test]
    fn identical_members_never_disagree() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(DataSource::Synthetic(small_synth()), 8, dir.path());
        cfg.models = vec![parse_model("TREE", 8).unwrap(); 5];
        let report = cmd_ensemble(&cfg).unwrap();
        assert_eq!(report.result.disagreements, 0);
        assert!(report.to_text().contains("Disagreements  0"));
    }

    #[test]
    fn absent_class_reports_zero_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut synth = small_synth();
        for c in &mut synth.classes {
            if c.class == SpecificClass::SteeringWheel {
                c.count = 0;
            }
        }
        let mut cfg = RunConfig::new(DataSource::Synthetic(synth), 8, dir.path());
        cfg.models = vec![parse_model("KNN", 8).unwrap(), parse_model("TREE", 8).unwrap()];
        let report = run_ensemble_experiment(&cfg).unwrap();
        let row = report.hybrid.class("STEERING_WHEEL").unwrap();
        assert_eq!((row.precision, row.recall, row.f1, row.support), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn stats_for_dos_only_input() {
        let dir = tempfile::tempdir().unwrap();
        let mut synth = small_synth();
        for c in &mut synth.classes {
            if c.class != SpecificClass::Dos {
                c.count = 0;
            }
        }
        let cfg = RunConfig::new(DataSource::Synthetic(synth), 1, dir.path());
        cmd_stats(&cfg).unwrap();
        let report: StatsReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
        assert_eq!(report.top_ids.len(), 1);
        assert_eq!(report.top_ids[0].id, 291);
        assert_eq!(report.category_distribution.get(Category::Dos.as_str()).unwrap().percentage, 100.0);
    }

    #[test]
    fn missing_directory_names_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::new(DataSource::Directory(dir.path().to_path_buf()), 1, dir.path().join("out"));
        match cmd_stats(&cfg) {
            Err(Error::MissingInputs { expected, .. }) => assert_eq!(expected.len(), 6),
            other => panic!("expected missing inputs, got {other:?}"),
        }
    }

    #[test]
    fn synth_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_synth();
        cfg.classes[2].count = 0;
        let paths = cmd_synth(&cfg, 3, dir.path()).unwrap();
        assert_eq!(paths.len(), 6);
        let merged = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(merged.len(), cfg.total());
        let empty = parse_decimal_csv(&paths[2], "x").unwrap();
        assert!(empty.is_empty());
        let again = tempfile::tempdir().unwrap();
        cmd_synth(&cfg, 3, again.path()).unwrap();
        for (file, _) in CANONICAL_FILES {
            assert_eq!(
                fs::read(dir.path().join(file)).unwrap(),
                fs::read(again.path().join(file)).unwrap()
            );
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::new(DataSource::Synthetic(small_synth()), 1, "out");
        cfg.feature_sets.clear();
        assert!(matches!(cfg.validate(), Err(Error::Argument(_))));
        let mut cfg = RunConfig::new(DataSource::Synthetic(small_synth()), 1, "out");
        cfg.test_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }
}
