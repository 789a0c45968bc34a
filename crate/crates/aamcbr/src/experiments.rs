//! Experiment harness: coverage, extraction and outcome-prediction runs,
//! metrics aggregation, and report emission.
//!
//! Every run item is independent, so items execute concurrently under the
//! global backend limit and aggregate by a deterministic ordered reduce.
//! All serialized structures use ordered maps, so identical seeds produce
//! byte-identical CSV and JSON outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aacbr::aacbr_outcome;
use crate::agents::{determine_coverage, extract_case_factors, parallel_map_indexed, run_aam_cbr, AgentConfig, ParseStatus};
use crate::backend::{Backend, BackendError};
use crate::datagen::{ScenarioPool, TestSet};
use crate::model::{Case, CaseBase, FactorDomain, FactorId, NewCase, Outcome};
use crate::prompts::{render_previous_case_list, PreviousCaseText};

use std::collections::BTreeSet;

#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error("test set {0} draws a subset missing from the scenario pool")]
    MissingScenario(usize),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exact integer ratio; `value()` is the derived accuracy/precision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn tally(&mut self, hit: bool) {
        self.denominator += 1;
        if hit {
            self.numerator += 1;
        }
    }

    /// `None` when the denominator is zero (undefined, not 0).
    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    pub fn display(&self) -> String {
        match self.value() {
            Some(v) => format!("{v:.2}"),
            None => "—".to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

/// One (previous case, new case) coverage decision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub test_set: usize,
    pub previous_index: usize,
    pub new_case_size: usize,
    pub ground_truth_relevant: bool,
    pub predicted_relevant: bool,
    pub parse_failed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCell {
    /// predicted == ground truth
    pub accuracy: Ratio,
    /// P(actually relevant | predicted relevant)
    pub precision: Ratio,
    /// fraction of pairs that are truly relevant
    pub relevant_rate: Ratio,
}

/// Coverage metrics keyed by new-case size.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub per_n: BTreeMap<String, CoverageCell>,
}

impl CoverageMetrics {
    pub fn from_records(records: &[CoverageRecord]) -> Self {
        let mut per_n: BTreeMap<String, CoverageCell> = BTreeMap::new();
        for r in records {
            let cell = per_n.entry(r.new_case_size.to_string()).or_default();
            cell.accuracy.tally(r.predicted_relevant == r.ground_truth_relevant);
            if r.predicted_relevant {
                cell.precision.tally(r.ground_truth_relevant);
            }
            cell.relevant_rate.tally(r.ground_truth_relevant);
        }
        CoverageMetrics { per_n }
    }
}

pub struct CoverageRun {
    pub records: Vec<CoverageRecord>,
    pub metrics: CoverageMetrics,
}

/// Runs coverage determination for every (previous, new) pair of every test
/// set: with 10 previous and 5 new cases that is 50 pairs per set. Backend
/// failures on a pair are recorded as failed parses, not aborts.
pub fn run_coverage_experiment(
    backend: &dyn Backend,
    domain: &FactorDomain,
    pool: &ScenarioPool,
    test_sets: &[TestSet],
    config: &AgentConfig,
) -> Result<CoverageRun, ExperimentError> {
    let items = coverage_items(domain, pool, test_sets)?;
    let limit = if backend.single_flight() { 1 } else { config.concurrency };
    let records = parallel_map_indexed(items.len(), limit, |i| {
        let item = &items[i];
        match determine_coverage(backend, &config.prompts, &item.new_sentences, &item.text, config.parse_retries)
        {
            Ok(v) => CoverageRecord {
                test_set: item.test_set,
                previous_index: item.previous_index,
                new_case_size: item.new_case_size,
                ground_truth_relevant: item.ground_truth_relevant,
                predicted_relevant: v.relevant,
                parse_failed: v.parse_status == ParseStatus::Failed,
            },
            Err(_) => CoverageRecord {
                test_set: item.test_set,
                previous_index: item.previous_index,
                new_case_size: item.new_case_size,
                ground_truth_relevant: item.ground_truth_relevant,
                predicted_relevant: false,
                parse_failed: true,
            },
        }
    });
    let metrics = CoverageMetrics::from_records(&records);
    Ok(CoverageRun { records, metrics })
}

struct CoverageItem {
    test_set: usize,
    previous_index: usize,
    new_case_size: usize,
    ground_truth_relevant: bool,
    new_sentences: Vec<String>,
    text: String,
}

fn coverage_items(
    domain: &FactorDomain,
    pool: &ScenarioPool,
    test_sets: &[TestSet],
) -> Result<Vec<CoverageItem>, ExperimentError> {
    let mut items = Vec::new();
    for (ts_index, set) in test_sets.iter().enumerate() {
        for (prev_index, prev) in set.previous.iter().enumerate() {
            let subset = prev.subset_set();
            let scenario = pool
                .get(&subset)
                .ok_or(ExperimentError::MissingScenario(ts_index))?;
            for new_ids in &set.new_cases {
                let new_set: BTreeSet<FactorId> = new_ids.iter().cloned().collect();
                items.push(CoverageItem {
                    test_set: ts_index,
                    previous_index: prev_index,
                    new_case_size: new_ids.len(),
                    ground_truth_relevant: subset.is_subset(&new_set),
                    new_sentences: domain.sentences_for(&new_set),
                    text: scenario.description.clone(),
                });
            }
        }
    }
    Ok(items)
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// One extraction attempt on a pair previously predicted relevant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionRecord {
    pub test_set: usize,
    pub previous_index: usize,
    pub new_case_size: usize,
    pub ground_truth_relevant: bool,
    pub predicted: BTreeSet<FactorId>,
    /// truth ∩ new case
    pub ground_truth: BTreeSet<FactorId>,
    pub exact_match: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionCell {
    pub exact_match: Ratio,
    /// exact match restricted to pairs that are actually relevant
    pub exact_match_given_relevant: Ratio,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionMetrics {
    pub per_n: BTreeMap<String, ExtractionCell>,
}

impl ExtractionMetrics {
    pub fn from_records(records: &[ExtractionRecord]) -> Self {
        let mut per_n: BTreeMap<String, ExtractionCell> = BTreeMap::new();
        for r in records {
            let cell = per_n.entry(r.new_case_size.to_string()).or_default();
            cell.exact_match.tally(r.exact_match);
            if r.ground_truth_relevant {
                cell.exact_match_given_relevant.tally(r.exact_match);
            }
        }
        ExtractionMetrics { per_n }
    }
}

pub struct ExtractionRun {
    pub records: Vec<ExtractionRecord>,
    pub metrics: ExtractionMetrics,
}

/// Runs factor extraction on every coverage pair that was predicted
/// relevant, scoring exact set match against truth ∩ new case.
pub fn run_extraction_experiment(
    backend: &dyn Backend,
    domain: &FactorDomain,
    pool: &ScenarioPool,
    test_sets: &[TestSet],
    coverage: &[CoverageRecord],
    config: &AgentConfig,
) -> Result<ExtractionRun, ExperimentError> {
    struct Item {
        test_set: usize,
        previous_index: usize,
        new_case_size: usize,
        ground_truth_relevant: bool,
        ground_truth: BTreeSet<FactorId>,
        new_sentences: Vec<String>,
        text: String,
    }

    let mut items = Vec::new();
    for record in coverage.iter().filter(|r| r.predicted_relevant) {
        let set = test_sets
            .get(record.test_set)
            .ok_or(ExperimentError::MissingScenario(record.test_set))?;
        let prev = &set.previous[record.previous_index];
        let subset = prev.subset_set();
        let scenario = pool
            .get(&subset)
            .ok_or(ExperimentError::MissingScenario(record.test_set))?;
        let new_ids = set
            .new_cases
            .iter()
            .find(|n| n.len() == record.new_case_size)
            .ok_or(ExperimentError::MissingScenario(record.test_set))?;
        let new_set: BTreeSet<FactorId> = new_ids.iter().cloned().collect();
        items.push(Item {
            test_set: record.test_set,
            previous_index: record.previous_index,
            new_case_size: record.new_case_size,
            ground_truth_relevant: record.ground_truth_relevant,
            ground_truth: subset.intersection(&new_set).cloned().collect(),
            new_sentences: domain.sentences_for(&new_set),
            text: scenario.description.clone(),
        });
    }

    let limit = if backend.single_flight() { 1 } else { config.concurrency };
    let records = parallel_map_indexed(items.len(), limit, |i| {
        let item = &items[i];
        let predicted = extract_case_factors(
            backend,
            &config.prompts,
            domain,
            &item.new_sentences,
            &item.text,
            config.parse_retries,
        )
        .map(|e| e.factors)
        .unwrap_or_default();
        ExtractionRecord {
            test_set: item.test_set,
            previous_index: item.previous_index,
            new_case_size: item.new_case_size,
            ground_truth_relevant: item.ground_truth_relevant,
            exact_match: predicted == item.ground_truth,
            predicted,
            ground_truth: item.ground_truth.clone(),
        }
    });
    let metrics = ExtractionMetrics::from_records(&records);
    Ok(ExtractionRun { records, metrics })
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "aam-cbr")]
    AamCbr,
    #[serde(rename = "single-not-instructed")]
    SingleNotInstructed,
    #[serde(rename = "single-instructed")]
    SingleInstructed,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::AamCbr, Strategy::SingleNotInstructed, Strategy::SingleInstructed];

    pub fn key(self) -> &'static str {
        match self {
            Strategy::AamCbr => "aam-cbr",
            Strategy::SingleNotInstructed => "single-not-instructed",
            Strategy::SingleInstructed => "single-instructed",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Strategy::AamCbr => "AAM-CBR",
            Strategy::SingleNotInstructed => "SinglePrompt-NotInstructed",
            Strategy::SingleInstructed => "SinglePrompt-Instructed",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "aam-cbr" => Some(Strategy::AamCbr),
            "single-not-instructed" => Some(Strategy::SingleNotInstructed),
            "single-instructed" => Some(Strategy::SingleInstructed),
            _ => None,
        }
    }
}

/// A prediction: one of the two outcomes, or an inconclusive answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicted {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "mixed")]
    Mixed,
}

impl Predicted {
    pub fn key(self) -> &'static str {
        match self {
            Predicted::Zero => "0",
            Predicted::One => "1",
            Predicted::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Predicted> {
        match s {
            "0" => Some(Predicted::Zero),
            "1" => Some(Predicted::One),
            "mixed" => Some(Predicted::Mixed),
            _ => None,
        }
    }

    fn matches(self, outcome: Outcome) -> bool {
        matches!(
            (self, outcome),
            (Predicted::Zero, Outcome::Zero) | (Predicted::One, Outcome::One)
        )
    }
}

/// One (test set, new case, default, strategy) prediction scored against the
/// symbolic gold standard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRecord {
    pub test_set: usize,
    pub new_case_size: usize,
    pub default: Outcome,
    pub strategy: Strategy,
    pub predicted: Predicted,
    pub gold: Outcome,
    pub correct: bool,
    pub error: Option<String>,
}

/// Accuracy per strategy → new-case size → default outcome.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionMetrics {
    pub cells: BTreeMap<String, BTreeMap<String, BTreeMap<String, Ratio>>>,
}

impl PredictionMetrics {
    pub fn from_records(records: &[PredictionRecord]) -> Self {
        let mut cells: BTreeMap<String, BTreeMap<String, BTreeMap<String, Ratio>>> = BTreeMap::new();
        for r in records {
            cells
                .entry(r.strategy.key().to_string())
                .or_default()
                .entry(r.new_case_size.to_string())
                .or_default()
                .entry(r.default.to_string())
                .or_default()
                .tally(r.correct);
        }
        PredictionMetrics { cells }
    }

    pub fn cell(&self, strategy: Strategy, n: usize, default: Outcome) -> Option<&Ratio> {
        self.cells
            .get(strategy.key())?
            .get(&n.to_string())?
            .get(default.as_str())
    }

    /// Accuracy per new-case size pooled over both defaults.
    pub fn accuracy_by_size(&self, strategy: Strategy) -> BTreeMap<usize, Ratio> {
        let mut out: BTreeMap<usize, Ratio> = BTreeMap::new();
        if let Some(by_n) = self.cells.get(strategy.key()) {
            for (n, by_default) in by_n {
                let n: usize = n.parse().expect("size keys are integers");
                let entry = out.entry(n).or_default();
                for ratio in by_default.values() {
                    entry.numerator += ratio.numerator;
                    entry.denominator += ratio.denominator;
                }
            }
        }
        out
    }
}

pub struct PredictionRun {
    pub records: Vec<PredictionRecord>,
    pub metrics: PredictionMetrics,
}

/// How previous cases are presented to the single-prompt baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineInput {
    /// Scenario text plus stated outcome (matches the agentic premise of
    /// non-factorized previous cases).
    RawText,
    /// Factor sentences plus stated outcome.
    Factorized,
}

/// Runs outcome prediction for every (test set, new case, default, strategy)
/// combination. The gold standard is the symbolic outcome on the
/// ground-truth relevant factorized cases. Single-prompt strategies answer
/// freely and the conclusion is extracted by a second prompt; a `mixed` or
/// unparseable conclusion scores as incorrect. Per-item failures are
/// captured in the record and the run continues.
#[allow(clippy::too_many_arguments)]
pub fn run_prediction_experiment(
    backend: &dyn Backend,
    domain: &FactorDomain,
    pool: &ScenarioPool,
    test_sets: &[TestSet],
    defaults: &[Outcome],
    strategies: &[Strategy],
    config: &AgentConfig,
    baseline_input: BaselineInput,
) -> Result<PredictionRun, ExperimentError> {
    struct Item {
        test_set: usize,
        new_case_size: usize,
        default: Outcome,
        strategy: Strategy,
        new_case: NewCase,
        gold: Outcome,
    }

    let mut texts_by_set: Vec<Vec<(String, Outcome)>> = Vec::with_capacity(test_sets.len());
    let mut truth_by_set: Vec<Vec<(BTreeSet<FactorId>, Outcome)>> = Vec::with_capacity(test_sets.len());
    for (ts_index, set) in test_sets.iter().enumerate() {
        let mut texts = Vec::with_capacity(set.previous.len());
        let mut truths = Vec::with_capacity(set.previous.len());
        for prev in &set.previous {
            let subset = prev.subset_set();
            let scenario = pool
                .get(&subset)
                .ok_or(ExperimentError::MissingScenario(ts_index))?;
            texts.push((scenario.description.clone(), prev.outcome));
            truths.push((subset, prev.outcome));
        }
        texts_by_set.push(texts);
        truth_by_set.push(truths);
    }

    let mut items = Vec::new();
    for (ts_index, set) in test_sets.iter().enumerate() {
        for new_ids in &set.new_cases {
            let new_case = NewCase::new(new_ids.iter().cloned());
            for &default in defaults {
                let gold = gold_outcome(&truth_by_set[ts_index], default, &new_case);
                for &strategy in strategies {
                    items.push(Item {
                        test_set: ts_index,
                        new_case_size: new_ids.len(),
                        default,
                        strategy,
                        new_case: new_case.clone(),
                        gold,
                    });
                }
            }
        }
    }

    // items run concurrently, so each agentic run stays serial inside
    let inner_config = AgentConfig {
        concurrency: 1,
        ..config.clone()
    };
    let limit = if backend.single_flight() { 1 } else { config.concurrency };
    let records = parallel_map_indexed(items.len(), limit, |i| {
        let item = &items[i];
        let previous = &texts_by_set[item.test_set];
        let outcome = match item.strategy {
            Strategy::AamCbr => {
                run_aam_cbr(backend, domain, previous, &item.new_case, item.default, &inner_config).map(|r| {
                    match r.verdict.outcome {
                        Outcome::Zero => Predicted::Zero,
                        Outcome::One => Predicted::One,
                    }
                })
            }
            Strategy::SingleNotInstructed | Strategy::SingleInstructed => single_prompt_prediction(
                backend,
                domain,
                &inner_config,
                previous,
                &truth_by_set[item.test_set],
                &item.new_case,
                item.default,
                item.strategy == Strategy::SingleInstructed,
                baseline_input,
            ),
        };
        let (predicted, error) = match outcome {
            Ok(p) => (p, None),
            Err(e) => (Predicted::Mixed, Some(e.to_string())),
        };
        PredictionRecord {
            test_set: item.test_set,
            new_case_size: item.new_case_size,
            default: item.default,
            strategy: item.strategy,
            predicted,
            gold: item.gold,
            correct: predicted.matches(item.gold),
            error,
        }
    });

    let metrics = PredictionMetrics::from_records(&records);
    Ok(PredictionRun { records, metrics })
}

/// The gold standard: the symbolic outcome over the ground-truth factorized
/// cases relevant to the new case.
pub fn gold_outcome(
    truths: &[(BTreeSet<FactorId>, Outcome)],
    default: Outcome,
    new_case: &NewCase,
) -> Outcome {
    let cases = truths
        .iter()
        .map(|(factors, outcome)| Case {
            factors: factors.clone(),
            outcome: *outcome,
        })
        .collect::<Vec<_>>();
    let case_base = CaseBase::new(cases).expect("test-set constraints keep outcomes consistent");
    aacbr_outcome(&case_base.relevant_to(new_case), default, new_case).outcome
}

#[allow(clippy::too_many_arguments)]
fn single_prompt_prediction(
    backend: &dyn Backend,
    domain: &FactorDomain,
    config: &AgentConfig,
    previous_texts: &[(String, Outcome)],
    truths: &[(BTreeSet<FactorId>, Outcome)],
    new_case: &NewCase,
    default: Outcome,
    instructed: bool,
    baseline_input: BaselineInput,
) -> Result<Predicted, BackendError> {
    let rendered: Vec<PreviousCaseText> = match baseline_input {
        BaselineInput::RawText => previous_texts
            .iter()
            .map(|(text, outcome)| PreviousCaseText::Raw {
                description: text.clone(),
                outcome: *outcome,
            })
            .collect(),
        BaselineInput::Factorized => truths
            .iter()
            .map(|(factors, outcome)| PreviousCaseText::Factorized {
                sentences: domain.sentences_for(factors),
                outcome: *outcome,
            })
            .collect(),
    };
    let previous_case_list = render_previous_case_list(&rendered);
    let new_sentences = domain.sentences_for(&new_case.factors);
    let prompt = config
        .prompts
        .render_predict(&previous_case_list, &new_sentences, default, instructed)
        .expect("prediction template renders");
    let first_response = backend.complete(&prompt)?;
    let conclude = config
        .prompts
        .render_conclude(&first_response)
        .expect("conclusion template renders");
    let conclusion = backend.complete(&conclude)?;
    let cleaned = conclusion.trim().trim_matches(['\'', '"', '`', '.']).trim().to_lowercase();
    Ok(Predicted::parse(&cleaned).unwrap_or(Predicted::Mixed))
}

/// The probability that a uniformly drawn subset of the domain is covered by
/// a new case of size `n`: 2^(n − |F|).
pub fn relevance_probability(n: usize, domain_size: usize) -> f64 {
    debug_assert!(n <= domain_size);
    2f64.powi(n as i32 - domain_size as i32)
}

// ---------------------------------------------------------------------------
// Report emission and ingestion
// ---------------------------------------------------------------------------

/// Everything a sequence of runs produced.
#[derive(Default)]
pub struct RunArtifacts {
    pub coverage: Option<CoverageRun>,
    pub extraction: Option<ExtractionRun>,
    pub prediction: Option<PredictionRun>,
}

/// The metrics file: one optional section per experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionMetrics>,
}

impl MetricsReport {
    /// Sections present in `other` replace the ones here.
    pub fn merge(&mut self, other: MetricsReport) {
        if other.coverage.is_some() {
            self.coverage = other.coverage;
        }
        if other.extraction.is_some() {
            self.extraction = other.extraction;
        }
        if other.prediction.is_some() {
            self.prediction = other.prediction;
        }
    }
}

/// Writes one CSV per record type, a merged `metrics.json`, and rendered
/// text tables. Returns the written paths.
pub fn emit_report(out_dir: &Path, artifacts: &RunArtifacts) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    if let Some(run) = &artifacts.coverage {
        let path = out_dir.join("coverage.csv");
        write_coverage_csv(&path, &run.records)?;
        written.push(path);
    }
    if let Some(run) = &artifacts.extraction {
        let path = out_dir.join("extraction.csv");
        write_extraction_csv(&path, &run.records)?;
        written.push(path);
    }
    if let Some(run) = &artifacts.prediction {
        let path = out_dir.join("predictions.csv");
        write_predictions_csv(&path, &run.records)?;
        written.push(path);
    }

    let metrics_path = out_dir.join("metrics.json");
    let mut report = if metrics_path.exists() {
        serde_json::from_str(&fs::read_to_string(&metrics_path)?)?
    } else {
        MetricsReport::default()
    };
    report.merge(MetricsReport {
        coverage: artifacts.coverage.as_ref().map(|r| r.metrics.clone()),
        extraction: artifacts.extraction.as_ref().map(|r| r.metrics.clone()),
        prediction: artifacts.prediction.as_ref().map(|r| r.metrics.clone()),
    });
    fs::write(&metrics_path, serde_json::to_string_pretty(&report)?)?;
    written.push(metrics_path);

    let tables_path = out_dir.join("tables.txt");
    fs::write(&tables_path, render_tables(&report))?;
    written.push(tables_path);

    Ok(written)
}

pub fn load_metrics(path: &Path) -> Result<MetricsReport, ExperimentError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn join_ids(ids: &BTreeSet<FactorId>) -> String {
    ids.iter().map(FactorId::as_str).collect::<Vec<_>>().join("+")
}

fn split_ids(joined: &str) -> BTreeSet<FactorId> {
    if joined.is_empty() {
        BTreeSet::new()
    } else {
        joined.split('+').map(FactorId::from).collect()
    }
}

fn write_coverage_csv(path: &Path, records: &[CoverageRecord]) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "test_set",
        "previous_index",
        "new_case_size",
        "ground_truth_relevant",
        "predicted_relevant",
        "parse_failed",
    ])?;
    for r in records {
        writer.write_record([
            r.test_set.to_string(),
            r.previous_index.to_string(),
            r.new_case_size.to_string(),
            r.ground_truth_relevant.to_string(),
            r.predicted_relevant.to_string(),
            r.parse_failed.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_coverage_csv(path: &Path) -> Result<Vec<CoverageRecord>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        records.push(CoverageRecord {
            test_set: parse_field(&row, 0)?,
            previous_index: parse_field(&row, 1)?,
            new_case_size: parse_field(&row, 2)?,
            ground_truth_relevant: parse_field(&row, 3)?,
            predicted_relevant: parse_field(&row, 4)?,
            parse_failed: parse_field(&row, 5)?,
        });
    }
    Ok(records)
}

fn write_extraction_csv(path: &Path, records: &[ExtractionRecord]) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "test_set",
        "previous_index",
        "new_case_size",
        "ground_truth_relevant",
        "predicted_factors",
        "ground_truth_factors",
        "exact_match",
    ])?;
    for r in records {
        writer.write_record([
            r.test_set.to_string(),
            r.previous_index.to_string(),
            r.new_case_size.to_string(),
            r.ground_truth_relevant.to_string(),
            join_ids(&r.predicted),
            join_ids(&r.ground_truth),
            r.exact_match.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_extraction_csv(path: &Path) -> Result<Vec<ExtractionRecord>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        records.push(ExtractionRecord {
            test_set: parse_field(&row, 0)?,
            previous_index: parse_field(&row, 1)?,
            new_case_size: parse_field(&row, 2)?,
            ground_truth_relevant: parse_field(&row, 3)?,
            predicted: split_ids(row.get(4).unwrap_or_default()),
            ground_truth: split_ids(row.get(5).unwrap_or_default()),
            exact_match: parse_field(&row, 6)?,
        });
    }
    Ok(records)
}

fn write_predictions_csv(path: &Path, records: &[PredictionRecord]) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "test_set",
        "new_case_size",
        "default",
        "strategy",
        "predicted",
        "gold",
        "correct",
        "error",
    ])?;
    for r in records {
        writer.write_record([
            r.test_set.to_string(),
            r.new_case_size.to_string(),
            r.default.to_string(),
            r.strategy.key().to_string(),
            r.predicted.key().to_string(),
            r.gold.to_string(),
            r.correct.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_predictions_csv(path: &Path) -> Result<Vec<PredictionRecord>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let strategy = Strategy::parse(row.get(3).unwrap_or_default())
            .ok_or_else(|| bad_field("strategy"))?;
        let predicted = Predicted::parse(row.get(4).unwrap_or_default())
            .ok_or_else(|| bad_field("predicted"))?;
        let default = Outcome::parse(row.get(2).unwrap_or_default()).ok_or_else(|| bad_field("default"))?;
        let gold = Outcome::parse(row.get(5).unwrap_or_default()).ok_or_else(|| bad_field("gold"))?;
        let error = row.get(7).filter(|s| !s.is_empty()).map(str::to_string);
        records.push(PredictionRecord {
            test_set: parse_field(&row, 0)?,
            new_case_size: parse_field(&row, 1)?,
            default,
            strategy,
            predicted,
            gold,
            correct: parse_field(&row, 6)?,
            error,
        });
    }
    Ok(records)
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, index: usize) -> Result<T, ExperimentError> {
    row.get(index)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad_field(&format!("column {index}")))
}

fn bad_field(what: &str) -> ExperimentError {
    ExperimentError::Io(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("malformed {what} in record file"),
    ))
}

// ---------------------------------------------------------------------------
// Text tables
// ---------------------------------------------------------------------------

/// Renders every available metrics section as aligned text tables; the
/// prediction table lays strategies against (new-case size, default) pairs.
pub fn render_tables(report: &MetricsReport) -> String {
    let mut out = String::new();
    if let Some(prediction) = &report.prediction {
        out.push_str(&render_prediction_table(prediction));
        out.push('\n');
    }
    if let Some(coverage) = &report.coverage {
        out.push_str(&render_coverage_table(coverage));
        out.push('\n');
    }
    if let Some(extraction) = &report.extraction {
        out.push_str(&render_extraction_table(extraction));
        out.push('\n');
    }
    out
}

fn sizes_in(keys: impl Iterator<Item = String>) -> Vec<usize> {
    let mut sizes: Vec<usize> = keys.filter_map(|k| k.parse().ok()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

fn render_prediction_table(metrics: &PredictionMetrics) -> String {
    let sizes = sizes_in(metrics.cells.values().flat_map(|by_n| by_n.keys().cloned()));
    let mut out = String::from("Outcome Prediction Accuracy\n");
    let name_width = Strategy::ALL
        .iter()
        .map(|s| s.display_name().len())
        .max()
        .unwrap_or(8);
    out.push_str(&format!("{:name_width$}", "strategy"));
    for n in &sizes {
        for d in Outcome::BOTH {
            out.push_str(&format!(" | n={n} '{d}'"));
        }
    }
    out.push('\n');
    for strategy in Strategy::ALL {
        if !metrics.cells.contains_key(strategy.key()) {
            continue;
        }
        out.push_str(&format!("{:name_width$}", strategy.display_name()));
        for n in &sizes {
            for d in Outcome::BOTH {
                let shown = metrics
                    .cell(strategy, *n, d)
                    .map(Ratio::display)
                    .unwrap_or_else(|| "—".to_string());
                let width = format!("n={n} '{d}'").len();
                out.push_str(&format!(" | {shown:>width$}"));
            }
        }
        out.push('\n');
    }
    out
}

fn render_coverage_table(metrics: &CoverageMetrics) -> String {
    let mut out = String::from("Case Coverage Determination\n");
    out.push_str("n  | accuracy | precision | relevant-rate\n");
    for n in sizes_in(metrics.per_n.keys().cloned()) {
        let cell = &metrics.per_n[&n.to_string()];
        out.push_str(&format!(
            "{n:<2} | {:>8} | {:>9} | {:>13}\n",
            cell.accuracy.display(),
            cell.precision.display(),
            cell.relevant_rate.display(),
        ));
    }
    out
}

fn render_extraction_table(metrics: &ExtractionMetrics) -> String {
    let mut out = String::from("Case Factor Extraction\n");
    out.push_str("n  | exact-match | given-relevant\n");
    for n in sizes_in(metrics.per_n.keys().cloned()) {
        let cell = &metrics.per_n[&n.to_string()];
        out.push_str(&format!(
            "{n:<2} | {:>11} | {:>14}\n",
            cell.exact_match.display(),
            cell.exact_match_given_relevant.display(),
        ));
    }
    out
}
