//! Ground-truth oracle backend.
//!
//! The oracle knows, for every scenario text, exactly which factor subset the
//! text expresses. It answers the five rendered prompt shapes
//! deterministically: coverage by an exact subset test, extraction by
//! intersecting the truth with the listed candidates, generation by running
//! the template composer, and the two prediction shapes by reasoning
//! symbolically over the truth table. A pipeline wired to the oracle is the
//! everything-works-perfectly upper bound, and it runs without any network.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use serde_json::Value;
use thiserror::Error;

use crate::aacbr::aacbr_outcome;
use crate::backend::{Backend, BackendError};
use crate::model::{Case, CaseBase, FactorDomain, FactorId, NewCase, Outcome};
use crate::prompts::{self, detect_shape, PromptShape};

/// A scenario text was registered twice with different factor subsets.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("scenario text already registered with a different subset: `{text}`")]
pub struct ScenarioCollision {
    pub text: String,
}

/// Shared map from scenario text to its ground-truth factor subset.
///
/// Cloning shares the underlying table, so the data generator and the oracle
/// can be wired to the same truth.
#[derive(Clone, Default)]
pub struct TruthTable {
    inner: Arc<RwLock<HashMap<String, BTreeSet<FactorId>>>>,
}

impl TruthTable {
    pub fn new() -> Self {
        TruthTable::default()
    }

    /// Registers a scenario text. Re-registering with the same subset is a
    /// no-op; a different subset is a collision.
    pub fn register(&self, text: &str, subset: BTreeSet<FactorId>) -> Result<(), ScenarioCollision> {
        let mut table = self.inner.write().expect("truth table lock");
        match table.get(text) {
            Some(existing) if existing != &subset => Err(ScenarioCollision { text: text.to_string() }),
            Some(_) => Ok(()),
            None => {
                table.insert(text.to_string(), subset);
                Ok(())
            }
        }
    }

    pub fn lookup(&self, text: &str) -> Option<BTreeSet<FactorId>> {
        self.inner.read().expect("truth table lock").get(text).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("truth table lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Deterministic stand-in for the language model, backed by a truth table.
#[derive(Clone)]
pub struct OracleBackend {
    domain: FactorDomain,
    table: TruthTable,
    gen_seed: u64,
}

impl OracleBackend {
    pub fn new(domain: FactorDomain, table: TruthTable) -> Self {
        OracleBackend {
            domain,
            table,
            gen_seed: 0,
        }
    }

    /// Seed for scenario texts composed in answer to generation prompts.
    pub fn with_gen_seed(mut self, seed: u64) -> Self {
        self.gen_seed = seed;
        self
    }

    pub fn truth_table(&self) -> &TruthTable {
        &self.table
    }

    pub fn domain(&self) -> &FactorDomain {
        &self.domain
    }

    fn truth_for(&self, description: &str) -> Result<BTreeSet<FactorId>, BackendError> {
        self.table.lookup(description).ok_or_else(|| {
            let mut short: String = description.chars().take(60).collect();
            if short.len() < description.len() {
                short.push('…');
            }
            BackendError::UnknownScenario(short)
        })
    }

    fn ids_for(&self, sentences: &[String]) -> Result<BTreeSet<FactorId>, BackendError> {
        sentences
            .iter()
            .map(|s| {
                self.domain
                    .match_sentence(s)
                    .map(|f| f.id.clone())
                    .ok_or_else(|| BackendError::MalformedPrompt(format!("unknown factor sentence `{s}`")))
            })
            .collect()
    }

    fn answer_coverage(&self, prompt: &str) -> Result<String, BackendError> {
        let (sentences, description) = parse_coverage_prompt(prompt)?;
        let listed = self.ids_for(&sentences)?;
        let truth = self.truth_for(&description)?;
        Ok(if truth.is_subset(&listed) { "YES" } else { "NO" }.to_string())
    }

    fn answer_extraction(&self, prompt: &str) -> Result<String, BackendError> {
        let (description, candidates) = parse_extraction_prompt(prompt)?;
        self.ids_for(&candidates)?;
        let truth = self.truth_for(&description)?;
        // keep candidate order so the reply is reproducible
        let kept: Vec<&String> = candidates
            .iter()
            .filter(|s| {
                self.domain
                    .match_sentence(s)
                    .map(|f| truth.contains(&f.id))
                    .unwrap_or(false)
            })
            .collect();
        Ok(serde_json::to_string(&kept).expect("sentence list serializes"))
    }

    fn answer_generation(&self, prompt: &str) -> Result<String, BackendError> {
        let included = parse_generation_prompt(prompt)?;
        let subset = self.ids_for(&included)?;
        if subset.is_empty() {
            return Err(BackendError::MalformedPrompt("empty included factor set".into()));
        }
        let seed = crate::datagen::scenario_seed(self.gen_seed, &subset);
        let scenario = crate::datagen::compose_template_scenario(&self.domain, &subset, seed, &self.table);
        Ok(scenario.description)
    }

    fn answer_prediction(&self, prompt: &str) -> Result<String, BackendError> {
        let parsed = parse_predict_prompt(prompt)?;
        let mut cases = Vec::new();
        for entry in parsed.previous {
            let factors = match entry.payload {
                PreviousPayload::Description(text) => self.truth_for(&text)?,
                PreviousPayload::Sentences(sentences) => self.ids_for(&sentences)?,
            };
            cases.push(Case {
                factors,
                outcome: entry.outcome,
            });
        }
        let case_base = CaseBase::new(cases)
            .map_err(|e| BackendError::Other(format!("previous cases are inconsistent: {e}")))?;
        let new_case = NewCase {
            factors: self.ids_for(&parsed.new_sentences)?,
        };
        let verdict = aacbr_outcome(&case_base, parsed.default, &new_case);
        Ok(format!(
            "Working through the precedents dialectically, the predicted outcome for the new case is '{}'.",
            verdict.outcome
        ))
    }

    fn answer_conclusion(&self, prompt: &str) -> Result<String, BackendError> {
        let response = parse_conclude_prompt(prompt)?;
        let has_zero = response.contains("'0'");
        let has_one = response.contains("'1'");
        Ok(match (has_zero, has_one) {
            (true, false) => "0".to_string(),
            (false, true) => "1".to_string(),
            _ => "mixed".to_string(),
        })
    }
}

impl Backend for OracleBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        match detect_shape(prompt) {
            Some(PromptShape::DetermineCoverage) => self.answer_coverage(prompt),
            Some(PromptShape::ExtractFactors) => self.answer_extraction(prompt),
            Some(PromptShape::GenerateScenario) => self.answer_generation(prompt),
            Some(PromptShape::Predict) => self.answer_prediction(prompt),
            Some(PromptShape::Conclude) => self.answer_conclusion(prompt),
            None => Err(BackendError::UnrecognizedPromptShape),
        }
    }

    fn identity(&self) -> String {
        "oracle".to_string()
    }
}

fn anchors_err(which: &str) -> BackendError {
    BackendError::MalformedPrompt(format!("missing {which} anchors"))
}

fn parse_json_strings(payload: &str) -> Result<Vec<String>, BackendError> {
    serde_json::from_str(payload.trim())
        .map_err(|e| BackendError::MalformedPrompt(format!("expected a JSON string array: {e}")))
}

pub(crate) fn parse_coverage_prompt(prompt: &str) -> Result<(Vec<String>, String), BackendError> {
    let list = prompts::slice_between(prompt, "Here is the factor list: \n    ", "\nHere is the case description: ")
        .ok_or_else(|| anchors_err("factor list"))?;
    let description = prompts::slice_between_last(
        prompt,
        "Here is the case description: \n    ",
        "\nAnswer this question: does the factor list cover the case?",
    )
    .ok_or_else(|| anchors_err("case description"))?;
    Ok((parse_json_strings(list)?, description.to_string()))
}

pub(crate) fn parse_extraction_prompt(prompt: &str) -> Result<(String, Vec<String>), BackendError> {
    let description = prompts::slice_between(prompt, "Description: ", "\nAll possible factors: ")
        .ok_or_else(|| anchors_err("description"))?;
    let list = prompts::slice_between(prompt, "\nAll possible factors: ", "\nIdentify and return ONLY")
        .ok_or_else(|| anchors_err("candidate list"))?;
    Ok((description.to_string(), parse_json_strings(list)?))
}

pub(crate) fn parse_generation_prompt(prompt: &str) -> Result<Vec<String>, BackendError> {
    let list = prompts::slice_between(
        prompt,
        "The set of factors that should be covered in the generated scenario:\n    ",
        "\nThe set of factors that should NOT be covered",
    )
    .ok_or_else(|| anchors_err("included factor list"))?;
    parse_json_strings(list)
}

pub(crate) enum PreviousPayload {
    Description(String),
    Sentences(Vec<String>),
}

pub(crate) struct PreviousEntry {
    pub payload: PreviousPayload,
    pub outcome: Outcome,
}

pub(crate) struct ParsedPredict {
    pub previous: Vec<PreviousEntry>,
    pub new_sentences: Vec<String>,
    pub default: Outcome,
}

pub(crate) fn parse_predict_prompt(prompt: &str) -> Result<ParsedPredict, BackendError> {
    let previous_json = prompts::slice_between(
        prompt,
        "Here are the previous cases you will be working with.\n    ",
        "\nAnd this is the new case to analyze:",
    )
    .ok_or_else(|| anchors_err("previous case list"))?;
    let new_json = prompts::slice_between(
        prompt,
        "And this is the new case to analyze:\n    ",
        "\nThe default outcome is '",
    )
    .ok_or_else(|| anchors_err("new case list"))?;
    let default_str = prompts::slice_between(prompt, "The default outcome is '", "'")
        .ok_or_else(|| anchors_err("default outcome"))?;
    let default = Outcome::parse(default_str)
        .ok_or_else(|| BackendError::MalformedPrompt(format!("bad default outcome `{default_str}`")))?;

    let items: Vec<Value> = serde_json::from_str(previous_json.trim())
        .map_err(|e| BackendError::MalformedPrompt(format!("previous case list: {e}")))?;
    let mut previous = Vec::new();
    for item in items {
        let outcome = item
            .get("outcome")
            .and_then(Value::as_str)
            .and_then(Outcome::parse)
            .ok_or_else(|| BackendError::MalformedPrompt("previous case without outcome".into()))?;
        let payload = if let Some(text) = item.get("description").and_then(Value::as_str) {
            PreviousPayload::Description(text.to_string())
        } else if let Some(list) = item.get("factors").and_then(Value::as_array) {
            let sentences = list
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| BackendError::MalformedPrompt("non-string factor sentence".into()))?;
            PreviousPayload::Sentences(sentences)
        } else {
            return Err(BackendError::MalformedPrompt(
                "previous case needs `description` or `factors`".into(),
            ));
        };
        previous.push(PreviousEntry { payload, outcome });
    }

    Ok(ParsedPredict {
        previous,
        new_sentences: parse_json_strings(new_json)?,
        default,
    })
}

pub(crate) fn parse_conclude_prompt(prompt: &str) -> Result<String, BackendError> {
    prompts::slice_between_last(
        prompt,
        "INSTRUCTIONS: Here is the response:\n",
        "\nWhat is the predicted outcome from this response",
    )
    .map(str::to_string)
    .ok_or_else(|| anchors_err("first response"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::credit_domain;
    use crate::prompts::PromptSet;

    fn ids(names: &[&str]) -> BTreeSet<FactorId> {
        names.iter().map(|n| FactorId::from(*n)).collect()
    }

    fn oracle_with(texts: &[(&str, &[&str])]) -> OracleBackend {
        let table = TruthTable::new();
        for (text, subset) in texts {
            table.register(text, ids(subset)).unwrap();
        }
        OracleBackend::new(credit_domain(), table)
    }

    fn sentences(domain: &FactorDomain, names: &[&str]) -> Vec<String> {
        domain.sentences_for(&ids(names))
    }

    #[test]
    fn coverage_is_a_subset_test() {
        let oracle = oracle_with(&[("The applicant is brand new to borrowing.", &["n4"])]);
        let set = PromptSet::default();
        let d = credit_domain();

        let yes = set
            .render_determine_coverage(
                &sentences(&d, &["n4", "p5"]),
                "The applicant is brand new to borrowing.",
            )
            .unwrap();
        assert_eq!(oracle.complete(&yes).unwrap(), "YES");

        let no = set
            .render_determine_coverage(&sentences(&d, &["n4"]), "The applicant is brand new to borrowing.")
            .unwrap();
        // the same scenario against a narrower list stays YES only if truth fits
        assert_eq!(oracle.complete(&no).unwrap(), "YES");

        let wider_truth = oracle_with(&[("Long story.", &["p2", "n3", "n4"])]);
        let not_covered = set
            .render_determine_coverage(&sentences(&d, &["n4", "p5"]), "Long story.")
            .unwrap();
        assert_eq!(wider_truth.complete(&not_covered).unwrap(), "NO");
    }

    #[test]
    fn extraction_returns_truth_intersected_with_candidates() {
        let oracle = oracle_with(&[("Long story.", &["p2", "n3", "n4"])]);
        let d = credit_domain();
        let prompt = PromptSet::default()
            .render_extract_factors("Long story.", &sentences(&d, &["n4", "p5"]))
            .unwrap();
        let reply = oracle.complete(&prompt).unwrap();
        let got: Vec<String> = serde_json::from_str(&reply).unwrap();
        assert_eq!(got, vec!["limited credit history".to_string()]);
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        let oracle = oracle_with(&[]);
        let d = credit_domain();
        let prompt = PromptSet::default()
            .render_determine_coverage(&sentences(&d, &["n4"]), "Never registered.")
            .unwrap();
        assert!(matches!(
            oracle.complete(&prompt).unwrap_err(),
            BackendError::UnknownScenario(_)
        ));
    }

    #[test]
    fn unrecognized_prompts_are_rejected() {
        let oracle = oracle_with(&[]);
        assert!(matches!(
            oracle.complete("What is the meaning of life?").unwrap_err(),
            BackendError::UnrecognizedPromptShape
        ));
    }

    #[test]
    fn generation_composes_and_registers_a_scenario() {
        let oracle = oracle_with(&[]).with_gen_seed(7);
        let d = credit_domain();
        let included = sentences(&d, &["p1", "n2"]);
        let excluded = sentences(&d, &["p2", "p3", "p4", "p5", "n1", "n3", "n4", "n5"]);
        let prompt = PromptSet::default()
            .render_generate_scenario(&included, &excluded)
            .unwrap();
        let text = oracle.complete(&prompt).unwrap();
        assert_eq!(oracle.truth_table().lookup(&text), Some(ids(&["p1", "n2"])));
        // idempotent: the same request composes the same text
        assert_eq!(oracle.complete(&prompt).unwrap(), text);
    }

    #[test]
    fn prediction_answers_with_the_symbolic_outcome() {
        let oracle = oracle_with(&[
            ("Case one.", &["n4"]),
            ("Case two.", &["p2", "n3", "n4"]),
        ]);
        let d = credit_domain();
        let previous = prompts::render_previous_case_list(&[
            prompts::PreviousCaseText::Raw {
                description: "Case one.".into(),
                outcome: Outcome::Zero,
            },
            prompts::PreviousCaseText::Raw {
                description: "Case two.".into(),
                outcome: Outcome::One,
            },
        ]);
        let set = PromptSet::default();
        for default in Outcome::BOTH {
            for instructed in [false, true] {
                let prompt = set
                    .render_predict(&previous, &sentences(&d, &["n4", "p5"]), default, instructed)
                    .unwrap();
                let first = oracle.complete(&prompt).unwrap();
                assert!(first.contains("'0'"), "expected rejection, got: {first}");
                let conclude = set.render_conclude(&first).unwrap();
                assert_eq!(oracle.complete(&conclude).unwrap(), "0");
            }
        }
    }

    #[test]
    fn conclusion_reports_mixed_when_ambiguous() {
        let oracle = oracle_with(&[]);
        let set = PromptSet::default();
        let both = set.render_conclude("could be '0' or maybe '1'").unwrap();
        assert_eq!(oracle.complete(&both).unwrap(), "mixed");
        let neither = set.render_conclude("no idea").unwrap();
        assert_eq!(oracle.complete(&neither).unwrap(), "mixed");
    }

    #[test]
    fn truth_table_rejects_conflicting_registration() {
        let table = TruthTable::new();
        table.register("text", ids(&["p1"])).unwrap();
        table.register("text", ids(&["p1"])).unwrap();
        assert!(table.register("text", ids(&["p2"])).is_err());
    }
}
