//! Agentic factorization of non-factorized previous cases.
//!
//! One agent is attached to each previous case, held only as text plus its
//! known outcome. The agent first determines whether the new case's factors
//! cover the situation in the text; if they do not (or the answer cannot be
//! parsed), the agent refuses and contributes nothing further, so the raw
//! text never reaches the reasoner. For covered cases the agent extracts
//! which of the new case's factors the text implies, yielding a factorized
//! previous case. The surviving factorized cases are assembled into a case
//! base and decided symbolically.
//!
//! Privacy is structural: the only data crossing from this layer into the
//! reasoner is relevance booleans, factor-id sets and outcomes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::aacbr::{aacbr_outcome, CbrVerdict};
use crate::backend::{Backend, BackendError};
use crate::model::{Case, CaseBase, FactorDomain, FactorId, NewCase, Outcome};
use crate::prompts::PromptSet;

/// Orchestration knobs.
#[derive(Clone, Debug)]
pub struct AgentConfig {
    /// Re-asks after an unparseable reply, up to this many extra attempts.
    pub parse_retries: u32,
    /// Upper bound on concurrently running per-case agents.
    pub concurrency: usize,
    pub prompts: PromptSet,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            parse_retries: 3,
            concurrency: 8,
            prompts: PromptSet::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Retried,
    Failed,
}

/// The coverage answer for one previous case. `relevant` is meaningful only
/// when `parse_status` is not `Failed`; a failed parse conservatively counts
/// as a refusal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub previous_case_index: usize,
    pub relevant: bool,
    pub raw_response: String,
    pub parse_status: ParseStatus,
}

/// A previous case re-expressed through the new case's factors. Carries no
/// text by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizedCase {
    pub previous_case_index: usize,
    pub factors: BTreeSet<FactorId>,
    pub outcome: Outcome,
}

/// Everything the pipeline produced for one (previous cases, new case,
/// default) run.
#[derive(Clone, Debug, Serialize)]
pub struct AamResult {
    pub verdict: CbrVerdict,
    pub relevance: Vec<RelevanceVerdict>,
    pub factorized: Vec<FactorizedCase>,
    /// Indices of factorized cases removed because the same factor set came
    /// back with both outcomes.
    pub dropped_conflicts: Vec<usize>,
    /// Relevant cases whose extraction returned no factors; they enter the
    /// case base as (∅, outcome).
    pub empty_extractions: usize,
    /// Relevant cases whose extraction reply never parsed; they contribute
    /// nothing.
    pub extraction_parse_failures: usize,
    /// Coverage replies that never parsed; treated as refusals.
    pub coverage_parse_failures: usize,
}

/// Extraction output for one case.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub factors: BTreeSet<FactorId>,
    pub parse_status: ParseStatus,
    /// Replies mentioning sentences outside the candidate list are discarded
    /// and counted here.
    pub discarded_sentences: usize,
    pub raw_response: String,
}

fn parse_yes_no(reply: &str) -> Option<bool> {
    let cleaned = reply.trim().trim_matches(['\'', '"', '`', '.']).trim();
    if cleaned.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if cleaned.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

/// Asks whether `new_factor_sentences` cover `case_text`, retrying
/// unparseable replies. Backend failures propagate; parse exhaustion yields
/// a failed, not-relevant verdict.
pub fn determine_coverage(
    backend: &dyn Backend,
    prompts: &PromptSet,
    new_factor_sentences: &[String],
    case_text: &str,
    parse_retries: u32,
) -> Result<RelevanceVerdict, BackendError> {
    let prompt = prompts
        .render_determine_coverage(new_factor_sentences, case_text)
        .expect("coverage template renders");
    let mut last_reply = String::new();
    for attempt in 0..=parse_retries {
        let reply = backend.complete(&prompt)?;
        if let Some(answer) = parse_yes_no(&reply) {
            return Ok(RelevanceVerdict {
                previous_case_index: 0,
                relevant: answer,
                raw_response: reply,
                parse_status: if attempt == 0 { ParseStatus::Ok } else { ParseStatus::Retried },
            });
        }
        last_reply = reply;
    }
    Ok(RelevanceVerdict {
        previous_case_index: 0,
        relevant: false,
        raw_response: last_reply,
        parse_status: ParseStatus::Failed,
    })
}

/// Extracts which candidate factors `case_text` implies. The reply is mapped
/// back to factor ids by normalized sentence match and restricted to the
/// candidates; with no candidates there is nothing to ask.
pub fn extract_case_factors(
    backend: &dyn Backend,
    prompts: &PromptSet,
    domain: &FactorDomain,
    candidate_sentences: &[String],
    case_text: &str,
    parse_retries: u32,
) -> Result<Extraction, BackendError> {
    if candidate_sentences.is_empty() {
        return Ok(Extraction {
            factors: BTreeSet::new(),
            parse_status: ParseStatus::Ok,
            discarded_sentences: 0,
            raw_response: String::new(),
        });
    }

    let candidate_ids: BTreeSet<FactorId> = candidate_sentences
        .iter()
        .filter_map(|s| domain.match_sentence(s).map(|f| f.id.clone()))
        .collect();

    let prompt = prompts
        .render_extract_factors(case_text, candidate_sentences)
        .expect("extraction template renders");
    let mut last_reply = String::new();
    for attempt in 0..=parse_retries {
        let reply = backend.complete(&prompt)?;
        if let Some(sentences) = crate::datagen::parse_sentence_array(&reply) {
            let mut factors = BTreeSet::new();
            let mut discarded = 0;
            for sentence in &sentences {
                match domain.match_sentence(sentence) {
                    Some(f) if candidate_ids.contains(&f.id) => {
                        factors.insert(f.id.clone());
                    }
                    _ => discarded += 1,
                }
            }
            return Ok(Extraction {
                factors,
                parse_status: if attempt == 0 { ParseStatus::Ok } else { ParseStatus::Retried },
                discarded_sentences: discarded,
                raw_response: reply,
            });
        }
        last_reply = reply;
    }
    Ok(Extraction {
        factors: BTreeSet::new(),
        parse_status: ParseStatus::Failed,
        discarded_sentences: 0,
        raw_response: last_reply,
    })
}

struct PerCase {
    relevance: RelevanceVerdict,
    extraction: Option<Extraction>,
    error: Option<BackendError>,
}

/// Runs the full agentic pipeline for one new case and default outcome.
///
/// Per-case agents run concurrently up to the configured limit; each agent's
/// two calls stay sequential, and results join in input order, so outcomes
/// are independent of the limit for deterministic backends. Per-case backend
/// failures are captured as refusals without aborting the batch; only a
/// total outage (every case failing with a backend error) is an error.
pub fn run_aam_cbr(
    backend: &dyn Backend,
    domain: &FactorDomain,
    previous: &[(String, Outcome)],
    new_case: &NewCase,
    default: Outcome,
    config: &AgentConfig,
) -> Result<AamResult, BackendError> {
    debug_assert!(domain.validate_subset(&new_case.factors).is_ok());
    let new_sentences = domain.sentences_for(&new_case.factors);
    let limit = if backend.single_flight() { 1 } else { config.concurrency };

    let mut per_case = parallel_map_indexed(previous.len(), limit, |i| {
        let (text, _outcome) = &previous[i];
        let relevance =
            match determine_coverage(backend, &config.prompts, &new_sentences, text, config.parse_retries) {
                Ok(v) => v,
                Err(e) => {
                    return PerCase {
                        relevance: RelevanceVerdict {
                            previous_case_index: i,
                            relevant: false,
                            raw_response: format!("backend error: {e}"),
                            parse_status: ParseStatus::Failed,
                        },
                        extraction: None,
                        error: Some(e),
                    }
                }
            };
        if !relevance.relevant {
            return PerCase {
                relevance,
                extraction: None,
                error: None,
            };
        }
        match extract_case_factors(
            backend,
            &config.prompts,
            domain,
            &new_sentences,
            text,
            config.parse_retries,
        ) {
            Ok(extraction) => PerCase {
                relevance,
                extraction: Some(extraction),
                error: None,
            },
            Err(e) => PerCase {
                relevance,
                extraction: None,
                error: Some(e),
            },
        }
    });

    if !per_case.is_empty() && per_case.iter().all(|c| c.error.is_some()) {
        return Err(per_case
            .into_iter()
            .find_map(|c| c.error)
            .expect("all cases errored"));
    }

    let mut relevance = Vec::with_capacity(per_case.len());
    let mut factorized = Vec::new();
    let mut empty_extractions = 0;
    let mut extraction_parse_failures = 0;
    let mut coverage_parse_failures = 0;

    for (i, case) in per_case.iter_mut().enumerate() {
        case.relevance.previous_case_index = i;
        if case.relevance.parse_status == ParseStatus::Failed {
            coverage_parse_failures += 1;
        }
        if let Some(extraction) = &case.extraction {
            match extraction.parse_status {
                ParseStatus::Failed => extraction_parse_failures += 1,
                _ => {
                    if extraction.factors.is_empty() {
                        empty_extractions += 1;
                    }
                    factorized.push(FactorizedCase {
                        previous_case_index: i,
                        factors: extraction.factors.clone(),
                        outcome: previous[i].1,
                    });
                }
            }
        }
        relevance.push(case.relevance.clone());
    }

    // same factor set with both outcomes: remove every involved case,
    // side-neutrally
    let mut outcomes_by_set: BTreeMap<&BTreeSet<FactorId>, BTreeSet<Outcome>> = BTreeMap::new();
    for f in &factorized {
        outcomes_by_set.entry(&f.factors).or_default().insert(f.outcome);
    }
    let conflicting: BTreeSet<BTreeSet<FactorId>> = outcomes_by_set
        .into_iter()
        .filter(|(_, os)| os.len() > 1)
        .map(|(fs, _)| fs.clone())
        .collect();
    let dropped_conflicts: Vec<usize> = factorized
        .iter()
        .filter(|f| conflicting.contains(&f.factors))
        .map(|f| f.previous_case_index)
        .collect();
    let surviving: Vec<Case> = factorized
        .iter()
        .filter(|f| !conflicting.contains(&f.factors))
        .map(|f| Case {
            factors: f.factors.clone(),
            outcome: f.outcome,
        })
        .collect();

    let case_base = CaseBase::new(surviving).expect("conflict removal leaves a consistent set");
    let verdict = aacbr_outcome(&case_base, default, new_case);

    Ok(AamResult {
        verdict,
        relevance,
        factorized,
        dropped_conflicts,
        empty_extractions,
        extraction_parse_failures,
        coverage_parse_failures,
    })
}

/// Runs `f(0..count)` on up to `limit` worker threads, returning results in
/// index order.
pub(crate) fn parallel_map_indexed<T, F>(count: usize, limit: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if count == 0 {
        return Vec::new();
    }
    let limit = limit.clamp(1, count);
    if limit == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..limit {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let value = f(i);
                *slots[i].lock().expect("result slot") = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot").expect("worker filled slot"))
        .collect()
}
