//! Scenario and test-set generation.
//!
//! Two scenario paths exist. The default is a deterministic phrase-bank
//! composer: every credit factor has three paraphrases, so a subset of
//! factors becomes a short narrative mentioning a paraphrase for exactly
//! those factors, and the composed text is registered in the shared truth
//! table as a side effect. The optional live path asks a backend to write the
//! scenario and keeps it only if extracting factors back over the full
//! domain reproduces exactly the requested subset, regenerating up to a
//! configurable number of attempts before skipping the subset.
//!
//! Test sets draw previous cases from the scenario pool and assign outcomes
//! under the polarity constraints; new cases are uniform subset draws of
//! fixed sizes, the largest being the whole domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::{Backend, BackendError};
use crate::backends::oracle::{ScenarioCollision, TruthTable};
use crate::model::{FactorDomain, FactorId, NewCase, Outcome, Polarity};
use crate::prompts::PromptSet;

#[derive(Error, Debug)]
pub enum DatagenError {
    #[error("included factor set must be non-empty")]
    EmptyIncluded,
    #[error("included and excluded sets must partition the domain")]
    InvalidPartition,
    #[error("scenario pool too small: need {needed} distinct scenarios, have {available}")]
    InsufficientPool { needed: usize, available: usize },
    #[error("unknown factor id `{0}`")]
    UnknownFactor(FactorId),
    #[error(transparent)]
    Collision(#[from] ScenarioCollision),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioSource {
    #[serde(rename = "llm-generated")]
    LlmGenerated,
    #[serde(rename = "template-composed")]
    TemplateComposed,
}

/// A factor subset plus a text that expresses exactly that subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub subset: BTreeSet<FactorId>,
    pub description: String,
    pub source: ScenarioSource,
    #[serde(default = "one", skip_serializing)]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}

/// Outcome of one generation request.
#[derive(Clone, Debug)]
pub enum GenerationResult {
    Accepted(Scenario),
    /// Verification kept failing; the subset is skipped.
    Skipped { subset: BTreeSet<FactorId>, attempts: u32 },
}

/// At most one scenario per subset, plus the subsets that were skipped.
#[derive(Clone, Debug, Default)]
pub struct ScenarioPool {
    pub scenarios: BTreeMap<BTreeSet<FactorId>, Scenario>,
    pub skipped: Vec<BTreeSet<FactorId>>,
}

impl ScenarioPool {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, subset: &BTreeSet<FactorId>) -> Option<&Scenario> {
        self.scenarios.get(subset)
    }
}

// ---------------------------------------------------------------------------
// Template composer
// ---------------------------------------------------------------------------

// Three paraphrases per credit factor. None reuses the factor's own wording,
// mirroring the generation instructions.
const PARAPHRASES: [(&str, [&str; 3]); 10] = [
    ("p1", [
        "The applicant's monthly repayments amount to a small fraction of earnings.",
        "Existing obligations take up very little of the applicant's monthly pay.",
        "What the applicant owes each month is dwarfed by what comes in.",
    ]),
    ("p2", [
        "The applicant has held the same position for well over a decade.",
        "Steady work at one employer stretches back many years.",
        "The applicant's career shows an unbroken stretch of continuous work.",
    ]),
    ("p3", [
        "Every installment on the applicant's current obligations has arrived on schedule.",
        "Records show the applicant's ongoing repayments are never behind.",
        "The applicant's active accounts show a flawless repayment record.",
    ]),
    ("p4", [
        "The application lists substantial property and savings holdings.",
        "The applicant reports considerable wealth in real estate and investments.",
        "A large portfolio of property and savings accompanies the application.",
    ]),
    ("p5", [
        "The applicant has banked happily with this institution for years.",
        "A long and cordial account history ties the applicant to this bank.",
        "The institution counts the applicant among its valued long-time customers.",
    ]),
    ("n1", [
        "Several lenders have pulled the applicant's file in the past few weeks.",
        "The applicant's report shows a flurry of freshly submitted loan requests.",
        "Many institutions checked the applicant's record over the last month.",
    ]),
    ("n2", [
        "The applicant's record includes bills settled well past their due dates.",
        "Past statements show several installments that never arrived on time.",
        "Overdue notices appear repeatedly in the applicant's file.",
    ]),
    ("n3", [
        "The applicant's earnings fall short of what the requested line demands.",
        "Monthly pay looks too meagre to support the obligations sought.",
        "The declared wages are plainly inadequate for this product.",
    ]),
    ("n4", [
        "The applicant opened a first borrowing account only months ago.",
        "Very few past accounts appear on the applicant's record.",
        "The applicant's borrowing record is thin and recent.",
    ]),
    ("n5", [
        "The applicant only recently became old enough to sign contracts.",
        "The applicant is barely into adulthood.",
        "The date of birth on the application is strikingly recent.",
    ]),
];

const OPENERS: [&str; 3] = [
    "{name} submits an application for a new credit card.",
    "{name} walks into a branch and applies for a credit card.",
    "{name} fills out a credit card application online.",
];

const CLOSERS: [&str; 3] = [
    "A decision on the application is pending.",
    "The bank will review the file in due course.",
    "The application now awaits assessment.",
];

const NAMES: [&str; 8] = ["Alex", "Sam", "Jordan", "Taylor", "Morgan", "Casey", "Riley", "Jamie"];

fn paraphrases_for(id: &FactorId) -> Option<&'static [&'static str; 3]> {
    PARAPHRASES
        .iter()
        .find(|(pid, _)| *pid == id.as_str())
        .map(|(_, texts)| texts)
}

/// Stable fingerprint of a subset, independent of process and run.
fn subset_fingerprint(subset: &BTreeSet<FactorId>) -> u64 {
    let joined: Vec<&str> = subset.iter().map(|f| f.as_str()).collect();
    let digest = Sha256::digest(joined.join(",").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Per-subset composition seed derived from a pool seed.
pub fn scenario_seed(pool_seed: u64, subset: &BTreeSet<FactorId>) -> u64 {
    splitmix64(pool_seed ^ subset_fingerprint(subset))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Composes a deterministic scenario text mentioning a paraphrase for exactly
/// the factors in `subset` (domain order), framed by neutral filler, and
/// registers the text in the truth table.
///
/// Same subset and seed always compose the same text. Factors outside the
/// built-in credit paraphrase bank fall back to their canonical sentence.
pub fn compose_template_scenario(
    domain: &FactorDomain,
    subset: &BTreeSet<FactorId>,
    seed: u64,
    table: &TruthTable,
) -> Scenario {
    assert!(!subset.is_empty(), "scenarios describe non-empty subsets");
    domain.validate_subset(subset).expect("subset drawn from the domain");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = NAMES[rng.gen_range(0..NAMES.len())];
    let opener = OPENERS[rng.gen_range(0..OPENERS.len())].replace("{name}", name);

    let mut parts = vec![opener];
    for factor in domain.factors() {
        if !subset.contains(&factor.id) {
            continue;
        }
        match paraphrases_for(&factor.id) {
            Some(texts) => parts.push(texts[rng.gen_range(0..texts.len())].to_string()),
            None => parts.push(format!("Notably: {}.", factor.sentence.trim_end_matches('.'))),
        }
    }
    parts.push(CLOSERS[rng.gen_range(0..CLOSERS.len())].to_string());
    let description = parts.join(" ");

    table
        .register(&description, subset.clone())
        .expect("distinct subsets compose distinct texts");

    Scenario {
        subset: subset.clone(),
        description,
        source: ScenarioSource::TemplateComposed,
        attempts: 1,
    }
}

/// Enumerates every non-empty subset of the domain and composes one template
/// scenario per subset. For a 10-factor domain that is 1023 scenarios.
pub fn build_template_pool(domain: &FactorDomain, seed: u64, table: &TruthTable) -> ScenarioPool {
    let ids: Vec<FactorId> = domain.ids().cloned().collect();
    let mut pool = ScenarioPool::default();
    for mask in 1u64..(1u64 << ids.len()) {
        let subset: BTreeSet<FactorId> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| id.clone())
            .collect();
        let scenario = compose_template_scenario(domain, &subset, scenario_seed(seed, &subset), table);
        pool.scenarios.insert(subset, scenario);
    }
    pool
}

// ---------------------------------------------------------------------------
// Backend-driven generation with verification
// ---------------------------------------------------------------------------

/// Asks the backend for a scenario covering exactly `included`, verifying by
/// extracting factors back over the full domain. Regenerates on mismatch up
/// to `max_attempts` times, then reports the subset as skipped.
pub fn generate_scenario(
    backend: &dyn Backend,
    domain: &FactorDomain,
    prompts: &PromptSet,
    included: &BTreeSet<FactorId>,
    excluded: &BTreeSet<FactorId>,
    max_attempts: u32,
) -> Result<GenerationResult, DatagenError> {
    if included.is_empty() {
        return Err(DatagenError::EmptyIncluded);
    }
    if !included.is_disjoint(excluded)
        || included.union(excluded).cloned().collect::<BTreeSet<_>>() != domain.full_set()
    {
        return Err(DatagenError::InvalidPartition);
    }

    let included_sentences = domain.sentences_for(included);
    let excluded_sentences = domain.sentences_for(excluded);
    let all_sentences = domain.all_sentences();

    for attempt in 1..=max_attempts {
        let prompt = prompts
            .render_generate_scenario(&included_sentences, &excluded_sentences)
            .expect("generation template renders");
        let description = backend.complete(&prompt)?;

        let verify_prompt = prompts
            .render_extract_factors(&description, &all_sentences)
            .expect("extraction template renders");
        let reply = backend.complete(&verify_prompt)?;
        let extracted = match parse_sentence_array(&reply) {
            Some(sentences) => sentences
                .iter()
                .filter_map(|s| domain.match_sentence(s).map(|f| f.id.clone()))
                .collect::<BTreeSet<_>>(),
            None => continue, // unverifiable reply burns the attempt
        };

        if &extracted == included {
            return Ok(GenerationResult::Accepted(Scenario {
                subset: included.clone(),
                description,
                source: ScenarioSource::LlmGenerated,
                attempts: attempt,
            }));
        }
    }

    Ok(GenerationResult::Skipped {
        subset: included.clone(),
        attempts: max_attempts,
    })
}

/// Lenient JSON-array-of-strings parse: direct, or the bracketed substring.
pub(crate) fn parse_sentence_array(reply: &str) -> Option<Vec<String>> {
    let trimmed = reply.trim();
    if let Ok(v) = serde_json::from_str::<Vec<String>>(trimmed) {
        return Some(v);
    }
    let start = trimmed.find('[')?;
    let end = trimmed.rfind(']')?;
    if end < start {
        return None;
    }
    serde_json::from_str(&trimmed[start..=end]).ok()
}

/// Enumerates every non-empty subset and generates a verified scenario per
/// subset through the backend.
pub fn build_generated_pool(
    backend: &dyn Backend,
    domain: &FactorDomain,
    prompts: &PromptSet,
    max_attempts: u32,
) -> Result<ScenarioPool, DatagenError> {
    let ids: Vec<FactorId> = domain.ids().cloned().collect();
    let full = domain.full_set();
    let mut pool = ScenarioPool::default();
    for mask in 1u64..(1u64 << ids.len()) {
        let included: BTreeSet<FactorId> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| id.clone())
            .collect();
        let excluded: BTreeSet<FactorId> = full.difference(&included).cloned().collect();
        match generate_scenario(backend, domain, prompts, &included, &excluded, max_attempts)? {
            GenerationResult::Accepted(s) => {
                pool.scenarios.insert(included, s);
            }
            GenerationResult::Skipped { subset, .. } => pool.skipped.push(subset),
        }
    }
    Ok(pool)
}

// ---------------------------------------------------------------------------
// Test sets
// ---------------------------------------------------------------------------

/// One previous case reference: pool subset plus assigned outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviousCase {
    pub subset: Vec<FactorId>,
    pub outcome: Outcome,
}

impl PreviousCase {
    pub fn subset_set(&self) -> BTreeSet<FactorId> {
        self.subset.iter().cloned().collect()
    }
}

/// Ten previous scenario-cases plus five undecided new cases of growing size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSet {
    pub seed: u64,
    pub previous: Vec<PreviousCase>,
    pub new_cases: Vec<Vec<FactorId>>,
}

impl TestSet {
    pub fn new_case(&self, index: usize) -> NewCase {
        NewCase::new(self.new_cases[index].iter().cloned())
    }
}

const PREVIOUS_PER_SET: usize = 10;

/// Draws `count` test sets from the pool, reproducibly from `seed`.
///
/// Outcome constraints: all-negative subsets get outcome 0, all-positive get
/// outcome 1, mixed subsets get a seeded fair coin. Previous cases are drawn
/// without replacement by default; with replacement, a repeated scenario
/// keeps its first assigned outcome. New-case sizes span the top five subset
/// sizes of the domain, the largest being the full domain.
pub fn generate_test_sets(
    pool: &ScenarioPool,
    domain: &FactorDomain,
    count: usize,
    seed: u64,
    with_replacement: bool,
) -> Result<Vec<TestSet>, DatagenError> {
    if !with_replacement && pool.len() < PREVIOUS_PER_SET {
        return Err(DatagenError::InsufficientPool {
            needed: PREVIOUS_PER_SET,
            available: pool.len(),
        });
    }
    if pool.is_empty() {
        return Err(DatagenError::InsufficientPool {
            needed: 1,
            available: 0,
        });
    }

    let keys: Vec<&BTreeSet<FactorId>> = pool.scenarios.keys().collect();
    let domain_ids: Vec<FactorId> = domain.ids().cloned().collect();
    let smallest_new = domain_ids.len().saturating_sub(4);

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = Vec::with_capacity(count);
    for _ in 0..count {
        let set_seed = master.gen::<u64>();
        let mut rng = ChaCha8Rng::seed_from_u64(set_seed);

        let chosen: Vec<&BTreeSet<FactorId>> = if with_replacement {
            (0..PREVIOUS_PER_SET)
                .map(|_| keys[rng.gen_range(0..keys.len())])
                .collect()
        } else {
            sample(&mut rng, keys.len(), PREVIOUS_PER_SET)
                .iter()
                .map(|i| keys[i])
                .collect()
        };

        let mut assigned: BTreeMap<&BTreeSet<FactorId>, Outcome> = BTreeMap::new();
        let mut previous = Vec::with_capacity(PREVIOUS_PER_SET);
        for subset in chosen {
            let outcome = *assigned
                .entry(subset)
                .or_insert_with(|| constrained_outcome(domain, subset, &mut rng));
            previous.push(PreviousCase {
                subset: domain.sort_ids(subset),
                outcome,
            });
        }

        let mut new_cases = Vec::with_capacity(5);
        for size in smallest_new..=domain_ids.len() {
            let picked = sample(&mut rng, domain_ids.len(), size);
            let subset: BTreeSet<FactorId> = picked.iter().map(|i| domain_ids[i].clone()).collect();
            new_cases.push(domain.sort_ids(&subset));
        }

        sets.push(TestSet {
            seed: set_seed,
            previous,
            new_cases,
        });
    }
    Ok(sets)
}

fn constrained_outcome(domain: &FactorDomain, subset: &BTreeSet<FactorId>, rng: &mut ChaCha8Rng) -> Outcome {
    let polarities: BTreeSet<Polarity> = subset
        .iter()
        .filter_map(|id| domain.get(id).map(|f| f.polarity))
        .collect();
    if polarities == BTreeSet::from([Polarity::Negative]) {
        return Outcome::Zero;
    }
    if polarities == BTreeSet::from([Polarity::Positive]) {
        return Outcome::One;
    }
    if rng.gen_bool(0.5) {
        Outcome::One
    } else {
        Outcome::Zero
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PoolLine {
    subset: Vec<FactorId>,
    description: String,
    source: ScenarioSource,
}

/// Writes the pool as JSON lines: `{"subset":[…],"description":"…","source":"…"}`.
pub fn save_pool(pool: &ScenarioPool, domain: &FactorDomain, path: &Path) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    for scenario in pool.scenarios.values() {
        let line = PoolLine {
            subset: domain.sort_ids(&scenario.subset),
            description: scenario.description.clone(),
            source: scenario.source,
        };
        writeln!(file, "{}", serde_json::to_string(&line).expect("pool line serializes"))?;
    }
    Ok(())
}

/// Reads a pool file, optionally registering each scenario's subset as truth.
pub fn load_pool(
    path: &Path,
    domain: &FactorDomain,
    table: Option<&TruthTable>,
) -> Result<ScenarioPool, DatagenError> {
    let file = fs::File::open(path)?;
    let mut pool = ScenarioPool::default();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PoolLine = serde_json::from_str(&line)?;
        let subset: BTreeSet<FactorId> = parsed.subset.into_iter().collect();
        for id in &subset {
            if !domain.contains(id) {
                return Err(DatagenError::UnknownFactor(id.clone()));
            }
        }
        if let Some(table) = table {
            table.register(&parsed.description, subset.clone())?;
        }
        pool.scenarios.insert(
            subset.clone(),
            Scenario {
                subset,
                description: parsed.description,
                source: parsed.source,
                attempts: 1,
            },
        );
    }
    Ok(pool)
}

/// Writes one `testset_NNN.json` per test set under `dir`.
pub fn save_test_sets(sets: &[TestSet], dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (i, set) in sets.iter().enumerate() {
        let path = dir.join(format!("testset_{i:03}.json"));
        fs::write(path, serde_json::to_string_pretty(set).expect("test set serializes"))?;
    }
    Ok(())
}

/// Reads every `testset_*.json` under `dir`, in filename order.
pub fn load_test_sets(dir: &Path) -> Result<Vec<TestSet>, DatagenError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("testset_") && n.ends_with(".json"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    let mut sets = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path)?;
        sets.push(serde_json::from_str(&text)?);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::credit_domain;

    fn ids(names: &[&str]) -> BTreeSet<FactorId> {
        names.iter().map(|n| FactorId::from(*n)).collect()
    }

    #[test]
    fn composition_is_deterministic_and_registers_truth() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let a = compose_template_scenario(&domain, &ids(&["n4"]), 11, &table);
        let b = compose_template_scenario(&domain, &ids(&["n4"]), 11, &table);
        assert_eq!(a.description, b.description);
        assert_eq!(table.lookup(&a.description), Some(ids(&["n4"])));
        assert_eq!(a.source, ScenarioSource::TemplateComposed);
    }

    #[test]
    fn composition_mentions_exactly_the_subset_paraphrases() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let s = compose_template_scenario(&domain, &ids(&["p1", "n2"]), 3, &table);
        let mentioned = |id: &str| {
            paraphrases_for(&FactorId::from(id))
                .unwrap()
                .iter()
                .any(|p| s.description.contains(p))
        };
        assert!(mentioned("p1"));
        assert!(mentioned("n2"));
        for other in ["p2", "p3", "p4", "p5", "n1", "n3", "n4", "n5"] {
            assert!(!mentioned(other), "unexpected paraphrase for {other}");
        }
    }

    #[test]
    fn full_domain_subset_mentions_all_ten() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let s = compose_template_scenario(&domain, &domain.full_set(), 5, &table);
        for (id, _) in PARAPHRASES {
            assert!(
                paraphrases_for(&FactorId::from(id)).unwrap().iter().any(|p| s.description.contains(p)),
                "missing paraphrase for {id}"
            );
        }
    }

    #[test]
    fn template_pool_covers_all_nonempty_subsets() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let pool = build_template_pool(&domain, 1, &table);
        assert_eq!(pool.len(), 1023);
        assert_eq!(table.len(), 1023);
        assert!(pool.skipped.is_empty());
    }

    #[test]
    fn generation_through_the_oracle_verifies_on_first_attempt() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let oracle = crate::backends::OracleBackend::new(domain.clone(), table);
        let included = ids(&["p1", "n2"]);
        let excluded: BTreeSet<FactorId> = domain.full_set().difference(&included).cloned().collect();
        let result = generate_scenario(&oracle, &domain, &PromptSet::default(), &included, &excluded, 10).unwrap();
        match result {
            GenerationResult::Accepted(s) => {
                assert_eq!(s.subset, included);
                assert_eq!(s.attempts, 1);
                assert_eq!(s.source, ScenarioSource::LlmGenerated);
            }
            GenerationResult::Skipped { .. } => panic!("oracle generation must verify"),
        }
    }

    #[test]
    fn empty_included_set_is_rejected() {
        let domain = credit_domain();
        let oracle = crate::backends::OracleBackend::new(domain.clone(), TruthTable::new());
        let err = generate_scenario(
            &oracle,
            &domain,
            &PromptSet::default(),
            &BTreeSet::new(),
            &domain.full_set(),
            10,
        )
        .unwrap_err();
        assert!(matches!(err, DatagenError::EmptyIncluded));
    }

    #[test]
    fn non_partition_is_rejected() {
        let domain = credit_domain();
        let oracle = crate::backends::OracleBackend::new(domain.clone(), TruthTable::new());
        let err = generate_scenario(
            &oracle,
            &domain,
            &PromptSet::default(),
            &ids(&["p1"]),
            &ids(&["p1", "p2"]),
            10,
        )
        .unwrap_err();
        assert!(matches!(err, DatagenError::InvalidPartition));
    }

    #[test]
    fn stubborn_backend_exhausts_attempts_and_skips() {
        struct FixedStory;
        impl Backend for FixedStory {
            fn complete(&self, prompt: &str) -> Result<String, BackendError> {
                // wrong description, and extraction always returns nothing
                if prompt.contains("extract factors") {
                    Ok("[]".to_string())
                } else {
                    Ok("A stubborn, factor-free story.".to_string())
                }
            }
            fn identity(&self) -> String {
                "fixed".to_string()
            }
        }
        let domain = credit_domain();
        let included = ids(&["p1"]);
        let excluded: BTreeSet<FactorId> = domain.full_set().difference(&included).cloned().collect();
        let result =
            generate_scenario(&FixedStory, &domain, &PromptSet::default(), &included, &excluded, 10).unwrap();
        match result {
            GenerationResult::Skipped { subset, attempts } => {
                assert_eq!(subset, included);
                assert_eq!(attempts, 10);
            }
            GenerationResult::Accepted(_) => panic!("must skip"),
        }
    }

    #[test]
    fn test_sets_have_the_required_shape() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let pool = build_template_pool(&domain, 1, &table);
        let sets = generate_test_sets(&pool, &domain, 50, 7, false).unwrap();
        assert_eq!(sets.len(), 50);
        for set in &sets {
            assert_eq!(set.previous.len(), 10);
            assert_eq!(set.new_cases.len(), 5);
            let sizes: Vec<usize> = set.new_cases.iter().map(Vec::len).collect();
            assert_eq!(sizes, vec![6, 7, 8, 9, 10]);
            let full: BTreeSet<FactorId> = set.new_cases[4].iter().cloned().collect();
            assert_eq!(full, domain.full_set());
            // without replacement: all previous subsets distinct
            let distinct: BTreeSet<BTreeSet<FactorId>> =
                set.previous.iter().map(PreviousCase::subset_set).collect();
            assert_eq!(distinct.len(), 10);
        }
    }

    #[test]
    fn outcome_constraints_hold() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let pool = build_template_pool(&domain, 1, &table);
        let sets = generate_test_sets(&pool, &domain, 100, 99, false).unwrap();
        for set in &sets {
            for prev in &set.previous {
                let polarities: BTreeSet<Polarity> = prev
                    .subset
                    .iter()
                    .map(|id| domain.get(id).unwrap().polarity)
                    .collect();
                if polarities == BTreeSet::from([Polarity::Negative]) {
                    assert_eq!(prev.outcome, Outcome::Zero);
                }
                if polarities == BTreeSet::from([Polarity::Positive]) {
                    assert_eq!(prev.outcome, Outcome::One);
                }
            }
        }
    }

    #[test]
    fn with_replacement_repeats_keep_one_outcome() {
        let domain = credit_domain();
        let table = TruthTable::new();
        // tiny pool forces repeats
        let mut pool = ScenarioPool::default();
        for (i, subset) in [ids(&["p1", "n1"]), ids(&["p2", "n2"])].into_iter().enumerate() {
            let s = compose_template_scenario(&domain, &subset, i as u64, &table);
            pool.scenarios.insert(subset, s);
        }
        let sets = generate_test_sets(&pool, &domain, 20, 3, true).unwrap();
        for set in &sets {
            let mut seen: BTreeMap<BTreeSet<FactorId>, Outcome> = BTreeMap::new();
            for prev in &set.previous {
                let entry = seen.entry(prev.subset_set()).or_insert(prev.outcome);
                assert_eq!(*entry, prev.outcome, "repeated scenario changed outcome");
            }
        }
    }

    #[test]
    fn insufficient_pool_is_reported() {
        let domain = credit_domain();
        let pool = ScenarioPool::default();
        assert!(matches!(
            generate_test_sets(&pool, &domain, 1, 0, false).unwrap_err(),
            DatagenError::InsufficientPool { .. }
        ));
    }

    #[test]
    fn pool_files_round_trip_and_register_truth() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let pool = build_template_pool(&domain, 1, &table);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenarios.jsonl");
        save_pool(&pool, &domain, &path).unwrap();

        let fresh_table = TruthTable::new();
        let loaded = load_pool(&path, &domain, Some(&fresh_table)).unwrap();
        assert_eq!(loaded.len(), pool.len());
        assert_eq!(fresh_table.len(), 1023);
        for (subset, scenario) in &pool.scenarios {
            assert_eq!(loaded.get(subset).unwrap().description, scenario.description);
        }

        // schema check on one line
        let first_line = std::io::BufRead::lines(BufReader::new(fs::File::open(&path).unwrap()))
            .next()
            .unwrap()
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(&first_line).unwrap();
        assert!(v.get("subset").is_some() && v.get("description").is_some() && v.get("source").is_some());
    }

    #[test]
    fn test_set_files_round_trip_byte_identically() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let pool = build_template_pool(&domain, 1, &table);
        let sets = generate_test_sets(&pool, &domain, 5, 21, false).unwrap();

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        save_test_sets(&sets, dir_a.path()).unwrap();
        let again = generate_test_sets(&pool, &domain, 5, 21, false).unwrap();
        save_test_sets(&again, dir_b.path()).unwrap();

        for i in 0..5 {
            let name = format!("testset_{i:03}.json");
            let a = fs::read(dir_a.path().join(&name)).unwrap();
            let b = fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "file {name} differs between identical runs");
        }

        let loaded = load_test_sets(dir_a.path()).unwrap();
        assert_eq!(loaded, sets);
    }

    #[test]
    fn subset_serialization_uses_domain_order() {
        let domain = credit_domain();
        let table = TruthTable::new();
        let s = compose_template_scenario(&domain, &ids(&["n2", "p1"]), 0, &table);
        let mut pool = ScenarioPool::default();
        pool.scenarios.insert(s.subset.clone(), s);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        save_pool(&pool, &domain, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(r#""subset":["p1","n2"]"#));
    }
}
