//! Core domain types: factors, cases, case bases and outcomes.
//!
//! A *factor* is an atomic reasoning dimension with a canonical sentence and a
//! polarity tag. A *situation* is a set of factor ids, a *case* pairs a
//! situation with a binary outcome, and a *case base* is a finite,
//! outcome-consistent set of cases. Polarity is metadata for dataset
//! construction and display only; nothing in the reasoning engine reads it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Short symbolic identifier of a factor, e.g. `p1` or `n3`.
///
/// Ids are the canonical keys throughout the engine; sentences are
/// display/prompt payloads.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactorId(String);

impl FactorId {
    pub fn new(id: impl Into<String>) -> Self {
        FactorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FactorId {
    fn from(s: &str) -> Self {
        FactorId(s.to_string())
    }
}

/// Whether a factor favours the positive or the negative outcome.
///
/// Metadata only: it steers synthetic outcome assignment and display, never
/// the argumentation semantics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// One reasoning dimension: id, canonical sentence, polarity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub id: FactorId,
    pub sentence: String,
    pub polarity: Polarity,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum DomainError {
    #[error("factor domain must not be empty")]
    Empty,
    #[error("duplicate factor id `{0}`")]
    DuplicateId(FactorId),
    #[error("duplicate factor sentence `{0}`")]
    DuplicateSentence(String),
    #[error("unknown factor id `{0}`")]
    UnknownFactor(FactorId),
}

/// The ordered universe of factors an experiment reasons over.
///
/// Passed explicitly everywhere rather than held as a global, so alternative
/// domains can be loaded from file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDomain {
    factors: Vec<Factor>,
}

impl FactorDomain {
    pub fn new(factors: Vec<Factor>) -> Result<Self, DomainError> {
        if factors.is_empty() {
            return Err(DomainError::Empty);
        }
        let mut ids = BTreeSet::new();
        let mut sentences = BTreeSet::new();
        for f in &factors {
            if !ids.insert(f.id.clone()) {
                return Err(DomainError::DuplicateId(f.id.clone()));
            }
            if !sentences.insert(normalize_sentence(&f.sentence)) {
                return Err(DomainError::DuplicateSentence(f.sentence.clone()));
            }
        }
        Ok(FactorDomain { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn get(&self, id: &FactorId) -> Option<&Factor> {
        self.factors.iter().find(|f| &f.id == id)
    }

    pub fn contains(&self, id: &FactorId) -> bool {
        self.get(id).is_some()
    }

    pub fn position(&self, id: &FactorId) -> Option<usize> {
        self.factors.iter().position(|f| &f.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &FactorId> {
        self.factors.iter().map(|f| &f.id)
    }

    /// All factor ids as a set (the full situation).
    pub fn full_set(&self) -> BTreeSet<FactorId> {
        self.ids().cloned().collect()
    }

    /// Orders a subset of ids by their position in the domain.
    pub fn sort_ids(&self, subset: &BTreeSet<FactorId>) -> Vec<FactorId> {
        let mut out: Vec<FactorId> = subset.iter().cloned().collect();
        out.sort_by_key(|id| self.position(id).unwrap_or(usize::MAX));
        out
    }

    /// Canonical sentences for a subset, in domain order.
    pub fn sentences_for(&self, subset: &BTreeSet<FactorId>) -> Vec<String> {
        self.factors
            .iter()
            .filter(|f| subset.contains(&f.id))
            .map(|f| f.sentence.clone())
            .collect()
    }

    pub fn all_sentences(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.sentence.clone()).collect()
    }

    /// Maps a sentence back to its factor, tolerating case, surrounding
    /// whitespace and trailing punctuation.
    pub fn match_sentence(&self, sentence: &str) -> Option<&Factor> {
        let wanted = normalize_sentence(sentence);
        self.factors
            .iter()
            .find(|f| normalize_sentence(&f.sentence) == wanted)
    }

    pub fn validate_subset(&self, subset: &BTreeSet<FactorId>) -> Result<(), DomainError> {
        for id in subset {
            if !self.contains(id) {
                return Err(DomainError::UnknownFactor(id.clone()));
            }
        }
        Ok(())
    }

    /// The same domain with every polarity label inverted. Downstream
    /// reasoning must be bit-identical under this transformation.
    pub fn with_flipped_polarities(&self) -> FactorDomain {
        FactorDomain {
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    id: f.id.clone(),
                    sentence: f.sentence.clone(),
                    polarity: f.polarity.flipped(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({ "factors": self.factors }))
            .expect("domain serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct File {
            factors: Vec<Factor>,
        }
        let file: File = serde_json::from_str(text)?;
        FactorDomain::new(file.factors).map_err(serde::de::Error::custom)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json_string())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Lowercase, trim, and drop trailing punctuation. Used wherever model echo
/// of a canonical sentence must be mapped back to a factor.
pub fn normalize_sentence(s: &str) -> String {
    s.trim()
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .trim()
        .to_lowercase()
}

/// The built-in credit-card application factor domain: five positive and
/// five negative factors.
pub fn credit_domain() -> FactorDomain {
    let mk = |id: &str, sentence: &str, polarity: Polarity| Factor {
        id: FactorId::new(id),
        sentence: sentence.to_string(),
        polarity,
    };
    FactorDomain::new(vec![
        mk("p1", "low debt-to-income ratio", Polarity::Positive),
        mk("p2", "long and stable employment history", Polarity::Positive),
        mk("p3", "consistent payment history on existing loans", Polarity::Positive),
        mk("p4", "significant assets declared", Polarity::Positive),
        mk("p5", "positive relationship with the bank", Polarity::Positive),
        mk("n1", "high number of recent credit inquiries.", Polarity::Negative),
        mk("n2", "missed or late payments history", Polarity::Negative),
        mk("n3", "insufficient income", Polarity::Negative),
        mk("n4", "limited credit history", Polarity::Negative),
        mk("n5", "young age", Polarity::Negative),
    ])
    .expect("built-in domain is valid")
}

/// Binary case outcome. `0` reads as rejection and `1` as approval in the
/// credit domain, but the engine only ever relies on the two being distinct.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    /// The other outcome. An involution: `o.complement().complement() == o`.
    pub fn complement(self) -> Outcome {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Zero => "0",
            Outcome::One => "1",
        }
    }

    pub fn parse(s: &str) -> Option<Outcome> {
        match s.trim() {
            "0" => Some(Outcome::Zero),
            "1" => Some(Outcome::One),
            _ => None,
        }
    }

    pub const BOTH: [Outcome; 2] = [Outcome::Zero, Outcome::One];
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Outcome::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("outcome must be \"0\" or \"1\", got {s:?}")))
    }
}

/// A decided case: a situation (set of factor ids) plus its outcome.
///
/// Set semantics throughout: equality ignores insertion order and duplicates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Case {
    pub factors: BTreeSet<FactorId>,
    pub outcome: Outcome,
}

impl Case {
    pub fn new(factors: impl IntoIterator<Item = FactorId>, outcome: Outcome) -> Self {
        Case {
            factors: factors.into_iter().collect(),
            outcome,
        }
    }
}

/// An undecided case: just a situation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct NewCase {
    pub factors: BTreeSet<FactorId>,
}

impl NewCase {
    pub fn new(factors: impl IntoIterator<Item = FactorId>) -> Self {
        NewCase {
            factors: factors.into_iter().collect(),
        }
    }
}

/// Raised when two cases share a factor set but disagree on the outcome.
/// Carries every conflicting factor set.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyViolation {
    pub conflicts: Vec<BTreeSet<FactorId>>,
}

impl fmt::Display for ConsistencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "outcome-inconsistent case base: {} factor set(s) carry both outcomes: {:?}",
            self.conflicts.len(),
            self.conflicts
        )
    }
}

/// A finite, outcome-consistent set of cases.
///
/// Construction is the consistency check: duplicate `(factors, outcome)`
/// pairs collapse to one case, and any factor set carrying both outcomes is
/// rejected with the full conflict list. Inconsistent inputs are never
/// silently repaired here; repair policy for agent-derived case bases lives
/// in the agent layer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseBase {
    cases: BTreeSet<Case>,
}

impl CaseBase {
    pub fn new(cases: impl IntoIterator<Item = Case>) -> Result<Self, ConsistencyViolation> {
        let cases: BTreeSet<Case> = cases.into_iter().collect();
        let mut outcomes: BTreeMap<&BTreeSet<FactorId>, BTreeSet<Outcome>> = BTreeMap::new();
        for c in &cases {
            outcomes.entry(&c.factors).or_default().insert(c.outcome);
        }
        let conflicts: Vec<BTreeSet<FactorId>> = outcomes
            .into_iter()
            .filter(|(_, os)| os.len() > 1)
            .map(|(fs, _)| fs.clone())
            .collect();
        if conflicts.is_empty() {
            Ok(CaseBase { cases })
        } else {
            Err(ConsistencyViolation { conflicts })
        }
    }

    pub fn empty() -> Self {
        CaseBase::default()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn cases(&self) -> &BTreeSet<Case> {
        &self.cases
    }

    pub fn iter(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter()
    }

    pub fn contains(&self, case: &Case) -> bool {
        self.cases.contains(case)
    }

    /// The sub-case-base of cases whose situation is covered by the new case.
    pub fn relevant_to(&self, new_case: &NewCase) -> CaseBase {
        CaseBase {
            cases: self
                .cases
                .iter()
                .filter(|c| c.factors.is_subset(&new_case.factors))
                .cloned()
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> BTreeSet<FactorId> {
        names.iter().map(|n| FactorId::from(*n)).collect()
    }

    #[test]
    fn complement_is_involution() {
        assert_eq!(Outcome::Zero.complement(), Outcome::One);
        assert_eq!(Outcome::One.complement(), Outcome::Zero);
        for o in Outcome::BOTH {
            assert_eq!(o.complement().complement(), o);
        }
    }

    #[test]
    fn outcome_serializes_as_string() {
        assert_eq!(serde_json::to_string(&Outcome::Zero).unwrap(), "\"0\"");
        let o: Outcome = serde_json::from_str("\"1\"").unwrap();
        assert_eq!(o, Outcome::One);
        assert!(serde_json::from_str::<Outcome>("\"2\"").is_err());
    }

    #[test]
    fn credit_domain_has_the_ten_canonical_factors() {
        let d = credit_domain();
        assert_eq!(d.len(), 10);
        let positives = d.factors().iter().filter(|f| f.polarity == Polarity::Positive).count();
        assert_eq!(positives, 5);
        let expected = [
            ("p1", "low debt-to-income ratio"),
            ("p2", "long and stable employment history"),
            ("p3", "consistent payment history on existing loans"),
            ("p4", "significant assets declared"),
            ("p5", "positive relationship with the bank"),
            ("n1", "high number of recent credit inquiries."),
            ("n2", "missed or late payments history"),
            ("n3", "insufficient income"),
            ("n4", "limited credit history"),
            ("n5", "young age"),
        ];
        for ((id, sentence), factor) in expected.iter().zip(d.factors()) {
            assert_eq!(factor.id, FactorId::from(*id));
            assert_eq!(factor.sentence, *sentence);
        }
    }

    #[test]
    fn domain_json_round_trip() {
        let d = credit_domain();
        let text = d.to_json_string();
        let back = FactorDomain::from_json_str(&text).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn domain_rejects_duplicates_and_empty() {
        assert_eq!(FactorDomain::new(vec![]).unwrap_err(), DomainError::Empty);
        let f = Factor {
            id: "a".into(),
            sentence: "one".into(),
            polarity: Polarity::Positive,
        };
        let mut g = f.clone();
        g.sentence = "two".into();
        assert!(matches!(
            FactorDomain::new(vec![f.clone(), g]).unwrap_err(),
            DomainError::DuplicateId(_)
        ));
        let mut h = f.clone();
        h.id = "b".into();
        assert!(matches!(
            FactorDomain::new(vec![f, h]).unwrap_err(),
            DomainError::DuplicateSentence(_)
        ));
    }

    #[test]
    fn sentence_matching_normalizes() {
        let d = credit_domain();
        assert_eq!(d.match_sentence("  Limited Credit History. ").unwrap().id, "n4".into());
        assert_eq!(d.match_sentence("high number of recent credit inquiries").unwrap().id, "n1".into());
        assert!(d.match_sentence("owns a yacht").is_none());
    }

    #[test]
    fn case_equality_ignores_insertion_order() {
        let a = Case::new(ids(&["n4", "p2", "n3"]), Outcome::One);
        let b = Case::new(ids(&["p2", "n3", "n4"]), Outcome::One);
        assert_eq!(a, b);
    }

    #[test]
    fn case_base_accepts_the_worked_example() {
        let cb = CaseBase::new([
            Case::new(ids(&["n4"]), Outcome::Zero),
            Case::new(ids(&["p2", "n3", "n4"]), Outcome::One),
        ])
        .unwrap();
        assert_eq!(cb.len(), 2);
    }

    #[test]
    fn empty_case_base_is_consistent() {
        assert_eq!(CaseBase::new([]).unwrap().len(), 0);
    }

    #[test]
    fn case_base_rejects_conflicting_outcomes() {
        let err = CaseBase::new([
            Case::new(ids(&["n4"]), Outcome::Zero),
            Case::new(ids(&["n4"]), Outcome::One),
        ])
        .unwrap_err();
        assert_eq!(err.conflicts, vec![ids(&["n4"])]);
    }

    #[test]
    fn case_base_collapses_duplicates() {
        let cb = CaseBase::new([
            Case::new(ids(&["n4"]), Outcome::Zero),
            Case::new(ids(&["n4"]), Outcome::Zero),
        ])
        .unwrap();
        assert_eq!(cb.len(), 1);
    }

    #[test]
    fn relevant_to_filters_by_subset() {
        let cb = CaseBase::new([
            Case::new(ids(&["n4"]), Outcome::Zero),
            Case::new(ids(&["p2", "n3", "n4"]), Outcome::One),
        ])
        .unwrap();
        let pruned = cb.relevant_to(&NewCase::new(ids(&["n4", "p5"])));
        assert_eq!(pruned.len(), 1);
        assert!(pruned.contains(&Case::new(ids(&["n4"]), Outcome::Zero)));
    }

    #[test]
    fn flipped_polarities_touch_only_polarity() {
        let d = credit_domain();
        let flipped = d.with_flipped_polarities();
        for (a, b) in d.factors().iter().zip(flipped.factors()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.sentence, b.sentence);
            assert_eq!(a.polarity.flipped(), b.polarity);
        }
    }
}
