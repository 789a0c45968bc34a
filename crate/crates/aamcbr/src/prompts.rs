//! Prompt templates and rendering.
//!
//! The six templates are embedded verbatim (including their original spacing)
//! and can be overridden from external text files; substitution uses
//! `{placeholder}` syntax. Inserted values are never re-scanned, so braces in
//! scenario text cannot inject placeholders.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::Outcome;

// Several template lines end in a significant trailing space; the templates
// are assembled line by line so the spaces sit mid-line in this source.

/// Scenario generation: produce a description covering exactly the included
/// factors. Placeholders: `included_factor_list`, `excluded_factor_list`.
pub const GENERATE_SCENARIO: &str = concat!(
    "TASK: \n",
    "Your task is to generate an example of credit card application scenario that covers a specified set of factors and excludes another specified set of factors.\n",
    "INSTRUCTIONS: \n",
    "You will be provided with a specified set of factors that should be covered in the generated scenario and another specified set of factors that should NOT be covered in the generated scenario.\n",
    "The set of factors that should be covered in the generated scenario:\n",
    "    {included_factor_list}\n",
    "The set of factors that should NOT be covered in the generated scenario:\n",
    "    {excluded_factor_list}\n",
    "OUTPUT FORMATTING: Generate the scenario in one concise description. Do NOT explicitly use the same words as those in factors. Do NOT include an outcome whether the credit card is accepted or rejected.",
);

/// Factor extraction from a scenario description. Placeholders:
/// `description`, `all_factor_sentences`.
pub const EXTRACT_FACTORS: &str = concat!(
    "TASK: \n",
    "Your task is to extract factors from a description of a credit card application scenario.\n",
    "INSTRUCTIONS: \n",
    "You will be provided with a description of a credit card application scenario and a list of all possible factor sentences.\n",
    "Description: {description}\n",
    "All possible factors: {all_factor_sentences}\n",
    "Identify and return ONLY the factor sentences from the provided list that are explicitly present or clearly implied in the description.\n",
    "OUTPUT FORMATTING: a JSON array of the extracted factor sentences. If no factors are found, return [].",
);

/// Case-coverage determination: does a factor list cover a case description?
/// Placeholders: `factor_list`, `case_description`.
pub const DETERMINE_COVERAGE: &str = concat!(
    "TASK: \n",
    "Your task is to determine whether the factor list covers the case.\n",
    "INSTRUCTIONS: \n",
    "You will be provided with a factor list and a case description.\n",
    "Here is the factor list: \n",
    "    {factor_list}\n",
    "Here is the case description: \n",
    "    {case_description}\n",
    "Answer this question: does the factor list cover the case?\n",
    "OUTPUT FORMATTING: 'YES' or 'NO'",
);

/// Outcome prediction without argumentative guidance. Placeholders:
/// `previous_case_list`, `new_case_list`, `default_outcome`.
pub const PREDICT_NOT_INSTRUCTED: &str = concat!(
    "TASK: \n",
    "You are an expert Case-Based Reasoning (CBR) system. Your task is to predict the outcome for a new case based on given previous cases.\n",
    "INSTRUCTIONS: \n",
    "You will be provided with previous cases, a new case, and a default outcome.\n",
    "Here are the previous cases you will be working with.\n",
    "    {previous_case_list}\n",
    "And this is the new case to analyze:\n",
    "    {new_case_list}\n",
    "The default outcome is '{default_outcome}'\n",
    "Based on the previous cases provided, what is the most likely outcome for this new case?",
);

/// Final paragraph of [`PREDICT_NOT_INSTRUCTED`]; the instructed variant
/// replaces exactly this text with [`INSTRUCTED_STEPS`].
pub const PREDICT_FINAL_QUESTION: &str =
    "Based on the previous cases provided, what is the most likely outcome for this new case?";

/// Dispute-tree style guidance spliced into the instructed prediction
/// prompt. Placeholders: `default_outcome`, `opponent_outcome`.
pub const INSTRUCTED_STEPS: &str = "Please do NOT consider the positiveness and negativeness of factors.
You will use a dialectical process between a proponent and an opponent.
Your decision-making process should follow these steps:
1. The proponent starts by asserting a default claim with empty factors and the default outcome '{default_outcome}'
2. The opponent can challenge the proponent's claim if they can identify a previous case that meets the following criteria:
    - with all factors covered by the new case
    - with the outcome '{opponent_outcome}'
    - If the challenging previous case's factors are NOT covered by the proponent's claimed case, then the opponent CANNOT challenge with this previous case (this is a STRICT condition).
3. The proponent can defend against the opponent's rebuttal if they can identify a previous case that meets the following criteria:
  - with all factors covered by the new case
  - with the outcome '{default_outcome}'
  - If the defending previous case's factors are NOT covered by the opponent's claimed case, then the proponent CANNOT defend with this previous case  (this is a STRICT condition).
4. After considering all possible argumentative paths:
  - If the proponent cannot uphold their initial claim through this process (meaning there is no winning path for them), then the predicted outcome for the new case will be '{opponent_outcome}'
  - Otherwise, the predicted outcome for the new case will be  '{default_outcome}'
According to the steps provided, what is the predicted outcome for the new case?";

/// Two-step conclusion extraction from a free-form first response.
/// Placeholders: `first_response`, `outcome0`, `outcome1`.
pub const CONCLUDE_OUTCOME: &str = "TASK: Your task is to conclude the predicted outcome from the response.
INSTRUCTIONS: Here is the response:
{first_response}
What is the predicted outcome from this response (answer 'mixed' if the predicted outcome cannot be concluded)?
OUTPUT FORMATTING: '{outcome0}' or '{outcome1}' or 'mixed'.";

// Sentinel phrases unique to one template each; backends that simulate the
// language model use them to recognise the prompt shape.
pub const SENTINEL_GENERATE: &str =
    "generate an example of credit card application scenario";
pub const SENTINEL_EXTRACT: &str =
    "Your task is to extract factors from a description";
pub const SENTINEL_COVERAGE: &str = "does the factor list cover the case?";
pub const SENTINEL_PREDICT: &str =
    "You are an expert Case-Based Reasoning (CBR) system";
pub const SENTINEL_CONCLUDE: &str =
    "conclude the predicted outcome from the response";

/// Which template a rendered prompt came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptShape {
    GenerateScenario,
    ExtractFactors,
    DetermineCoverage,
    Predict,
    Conclude,
}

/// Recognise a rendered prompt by its template sentinel.
///
/// Conclusion prompts embed an arbitrary first response, so their sentinel is
/// checked first; every other sentinel phrase can only occur in its own
/// template.
pub fn detect_shape(prompt: &str) -> Option<PromptShape> {
    if prompt.starts_with("TASK: Your task is to conclude") && prompt.contains(SENTINEL_CONCLUDE) {
        Some(PromptShape::Conclude)
    } else if prompt.contains(SENTINEL_COVERAGE) {
        Some(PromptShape::DetermineCoverage)
    } else if prompt.contains(SENTINEL_EXTRACT) {
        Some(PromptShape::ExtractFactors)
    } else if prompt.contains(SENTINEL_GENERATE) {
        Some(PromptShape::GenerateScenario)
    } else if prompt.contains(SENTINEL_PREDICT) {
        Some(PromptShape::Predict)
    } else {
        None
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum PromptError {
    #[error("template placeholder `{{{0}}}` has no value")]
    MissingPlaceholder(String),
    #[error("malformed template: unterminated `{{` at byte {0}")]
    Unterminated(usize),
}

/// Substitute `{placeholder}` tokens. Every placeholder in the template must
/// have a value; values are inserted raw.
pub fn render(template: &str, vars: &BTreeMap<&str, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let end = template[i + 1..]
                .find('}')
                .map(|off| i + 1 + off)
                .ok_or(PromptError::Unterminated(i))?;
            let key = &template[i + 1..end];
            let value = vars
                .get(key)
                .ok_or_else(|| PromptError::MissingPlaceholder(key.to_string()))?;
            out.push_str(value);
            i = end + 1;
        } else {
            // advance one full UTF-8 character
            let ch_len = template[i..].chars().next().map(char::len_utf8).unwrap_or(1);
            out.push_str(&template[i..i + ch_len]);
            i += ch_len;
        }
    }
    Ok(out)
}

/// The active set of templates; defaults to the built-ins, overridable per
/// template from a directory of text files.
#[derive(Clone, Debug)]
pub struct PromptSet {
    pub generate_scenario: String,
    pub extract_factors: String,
    pub determine_coverage: String,
    pub predict_not_instructed: String,
    pub predict_instructed: String,
    pub conclude_outcome: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            generate_scenario: GENERATE_SCENARIO.to_string(),
            extract_factors: EXTRACT_FACTORS.to_string(),
            determine_coverage: DETERMINE_COVERAGE.to_string(),
            predict_not_instructed: PREDICT_NOT_INSTRUCTED.to_string(),
            predict_instructed: PREDICT_NOT_INSTRUCTED.replace(PREDICT_FINAL_QUESTION, INSTRUCTED_STEPS),
            conclude_outcome: CONCLUDE_OUTCOME.to_string(),
        }
    }
}

impl PromptSet {
    /// Load overrides from `<dir>/<name>.txt`; missing files keep the
    /// built-in text. Recognised names: `generate_scenario`,
    /// `extract_factors`, `determine_coverage`, `predict_not_instructed`,
    /// `predict_instructed`, `conclude_outcome`.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut set = PromptSet::default();
        let load = |name: &str, slot: &mut String| -> io::Result<()> {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = fs::read_to_string(&path)?;
            }
            Ok(())
        };
        load("generate_scenario", &mut set.generate_scenario)?;
        load("extract_factors", &mut set.extract_factors)?;
        load("determine_coverage", &mut set.determine_coverage)?;
        load("predict_not_instructed", &mut set.predict_not_instructed)?;
        load("predict_instructed", &mut set.predict_instructed)?;
        load("conclude_outcome", &mut set.conclude_outcome)?;
        Ok(set)
    }

    pub fn render_generate_scenario(
        &self,
        included_sentences: &[String],
        excluded_sentences: &[String],
    ) -> Result<String, PromptError> {
        let vars = BTreeMap::from([
            ("included_factor_list", to_json_list(included_sentences)),
            ("excluded_factor_list", to_json_list(excluded_sentences)),
        ]);
        render(&self.generate_scenario, &vars)
    }

    pub fn render_extract_factors(
        &self,
        description: &str,
        all_factor_sentences: &[String],
    ) -> Result<String, PromptError> {
        let vars = BTreeMap::from([
            ("description", description.to_string()),
            ("all_factor_sentences", to_json_list(all_factor_sentences)),
        ]);
        render(&self.extract_factors, &vars)
    }

    pub fn render_determine_coverage(
        &self,
        factor_sentences: &[String],
        case_description: &str,
    ) -> Result<String, PromptError> {
        let vars = BTreeMap::from([
            ("factor_list", to_json_list(factor_sentences)),
            ("case_description", case_description.to_string()),
        ]);
        render(&self.determine_coverage, &vars)
    }

    pub fn render_predict(
        &self,
        previous_case_list: &str,
        new_case_sentences: &[String],
        default: Outcome,
        instructed: bool,
    ) -> Result<String, PromptError> {
        let template = if instructed {
            &self.predict_instructed
        } else {
            &self.predict_not_instructed
        };
        let vars = BTreeMap::from([
            ("previous_case_list", previous_case_list.to_string()),
            ("new_case_list", to_json_list(new_case_sentences)),
            ("default_outcome", default.to_string()),
            ("opponent_outcome", default.complement().to_string()),
        ]);
        render(template, &vars)
    }

    pub fn render_conclude(&self, first_response: &str) -> Result<String, PromptError> {
        let vars = BTreeMap::from([
            ("first_response", first_response.to_string()),
            ("outcome0", Outcome::Zero.to_string()),
            ("outcome1", Outcome::One.to_string()),
        ]);
        render(&self.conclude_outcome, &vars)
    }
}

/// One previous case as presented to a single-prompt baseline: either the
/// raw scenario text or its factor sentences, plus the stated outcome.
#[derive(Clone, Debug)]
pub enum PreviousCaseText {
    Raw { description: String, outcome: Outcome },
    Factorized { sentences: Vec<String>, outcome: Outcome },
}

/// Renders previous cases as a JSON array, one object per case.
pub fn render_previous_case_list(cases: &[PreviousCaseText]) -> String {
    let items: Vec<serde_json::Value> = cases
        .iter()
        .map(|c| match c {
            PreviousCaseText::Raw { description, outcome } => {
                serde_json::json!({"description": description, "outcome": outcome})
            }
            PreviousCaseText::Factorized { sentences, outcome } => {
                serde_json::json!({"factors": sentences, "outcome": outcome})
            }
        })
        .collect();
    serde_json::to_string(&items).expect("previous case list serializes")
}

fn to_json_list(items: &[String]) -> String {
    serde_json::to_string(items).expect("string list serializes")
}

/// The text between two anchors, searching forward for both.
pub(crate) fn slice_between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let s = text.find(start)? + start.len();
    let e = s + text[s..].find(end)?;
    Some(&text[s..e])
}

/// The text between a forward-searched start anchor and the *last*
/// occurrence of the end anchor; used where the payload is free text.
pub(crate) fn slice_between_last<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let s = text.find(start)? + start.len();
    let e = text.rfind(end)?;
    if e < s {
        return None;
    }
    Some(&text[s..e])
}
