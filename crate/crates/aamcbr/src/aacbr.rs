//! Case-based reasoning over abstract argumentation.
//!
//! Given a case base Γ, a default outcome and a new case N, the reasoner
//! builds the corresponding argumentation framework:
//!
//! 1. one argument per case in Γ, plus the default argument (∅, default) and
//!    the new-case argument (N, ?);
//! 2. a case attacks another iff their outcomes differ, the attacker's
//!    situation strictly contains the target's (specificity), and no case in
//!    Γ with the attacker's outcome sits strictly between the two
//!    (concision);
//! 3. the new-case argument attacks every case whose situation it does not
//!    cover (irrelevance); nothing attacks the new-case argument.
//!
//! The outcome for N is the default outcome iff the default argument belongs
//! to the grounded extension, and its complement otherwise.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aaf::{AAFramework, ArgId, Argument, GroundedExtension};
use crate::model::{Case, CaseBase, FactorId, NewCase, Outcome};

/// Where a framework node came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeOrigin {
    /// The default argument (∅, default outcome).
    Default,
    /// The undecided new-case argument (N, ?).
    NewCase,
    /// A previous case from the case base.
    Previous(Case),
}

/// The argumentation framework for a (case base, default, new case) triple,
/// with provenance for every node.
#[derive(Clone, Debug, Serialize)]
pub struct CbrFramework {
    pub framework: AAFramework,
    pub node_map: BTreeMap<ArgId, NodeOrigin>,
    pub default_id: ArgId,
    pub new_id: ArgId,
}

impl CbrFramework {
    /// DOT rendering with the grounded members highlighted.
    pub fn to_dot(&self) -> String {
        self.framework.to_dot(Some(&self.framework.grounded()))
    }
}

/// The decision for a new case, carrying the extension for explanation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbrVerdict {
    pub outcome: Outcome,
    pub default: Outcome,
    pub default_in_grounded: bool,
    pub grounded: GroundedExtension,
    /// Display labels of the grounded members, sorted.
    pub grounded_labels: Vec<String>,
}

impl CbrVerdict {
    /// CLI-facing JSON: outcome, default, membership flag and the grounded
    /// member labels.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome,
            "default": self.default,
            "default_in_grounded": self.default_in_grounded,
            "grounded": self.grounded_labels,
        })
    }
}

/// Stable node id: hash of the sorted factor ids plus the outcome tag, so
/// frameworks are reproducible across runs.
fn node_id(factors: &BTreeSet<FactorId>, tag: &str) -> ArgId {
    let joined: Vec<&str> = factors.iter().map(|f| f.as_str()).collect();
    let mut hasher = Sha256::new();
    hasher.update(joined.join(","));
    hasher.update("|");
    hasher.update(tag);
    ArgId::new(hex::encode(&hasher.finalize()[..6]))
}

fn node_label(factors: &BTreeSet<FactorId>, tag: &str) -> String {
    if factors.is_empty() {
        format!("(∅,{tag})")
    } else {
        let joined: Vec<&str> = factors.iter().map(|f| f.as_str()).collect();
        format!("({{{}}},{tag})", joined.join(","))
    }
}

/// The case-attack test: different outcomes, strict specificity, and no
/// concision witness in the case base strictly between target and attacker.
///
/// Both sides may be the default argument, modelled as a case with an empty
/// factor set; the concision witness ranges over the case base only.
pub fn case_attacks(attacker: &Case, target: &Case, case_base: &CaseBase) -> bool {
    attacker.outcome != target.outcome
        && target.factors.is_subset(&attacker.factors)
        && target.factors != attacker.factors
        && !case_base.iter().any(|z| {
            z.outcome == attacker.outcome
                && target.factors.is_subset(&z.factors)
                && target.factors != z.factors
                && z.factors.is_subset(&attacker.factors)
                && z.factors != attacker.factors
        })
}

/// True iff the new case does not cover the previous case's situation, in
/// which case the new-case argument attacks it.
pub fn is_irrelevant(previous: &Case, new_case: &NewCase) -> bool {
    !previous.factors.is_subset(&new_case.factors)
}

/// Builds the framework for (case base, default, new case).
///
/// Arguments are the set union of the case base, the default argument and
/// the new-case argument, so a previous case identical to the default
/// argument collapses into a single node.
pub fn build_framework(case_base: &CaseBase, default: Outcome, new_case: &NewCase) -> CbrFramework {
    let default_case = Case::new([], default);
    let mut participants: BTreeSet<Case> = case_base.cases().clone();
    participants.insert(default_case.clone());

    let mut arguments = Vec::new();
    let mut node_map = BTreeMap::new();
    let mut id_of: BTreeMap<&Case, ArgId> = BTreeMap::new();

    for case in &participants {
        let id = node_id(&case.factors, case.outcome.as_str());
        let origin = if *case == default_case {
            NodeOrigin::Default
        } else {
            NodeOrigin::Previous(case.clone())
        };
        let label = if *case == default_case {
            format!("default: {}", node_label(&case.factors, case.outcome.as_str()))
        } else {
            node_label(&case.factors, case.outcome.as_str())
        };
        arguments.push(Argument::new(id.as_str(), label));
        node_map.insert(id.clone(), origin);
        id_of.insert(case, id);
    }

    let new_id = node_id(&new_case.factors, "?");
    arguments.push(Argument::new(new_id.as_str(), node_label(&new_case.factors, "?")));
    node_map.insert(new_id.clone(), NodeOrigin::NewCase);

    let mut attacks = BTreeSet::new();
    for x in &participants {
        for y in &participants {
            if case_attacks(x, y, case_base) {
                attacks.insert((id_of[x].clone(), id_of[y].clone()));
            }
        }
    }
    for y in case_base.iter() {
        if is_irrelevant(y, new_case) {
            attacks.insert((new_id.clone(), id_of[y].clone()));
        }
    }

    let default_id = node_id(&default_case.factors, default.as_str());
    let framework = AAFramework::new(arguments, attacks).expect("construction yields valid ids");
    CbrFramework {
        framework,
        node_map,
        default_id,
        new_id,
    }
}

/// Decides the new case: the default outcome iff the default argument is in
/// the grounded extension of the corresponding framework.
pub fn aacbr_outcome(case_base: &CaseBase, default: Outcome, new_case: &NewCase) -> CbrVerdict {
    let cbr = build_framework(case_base, default, new_case);
    let grounded = cbr.framework.grounded();
    let default_in_grounded = grounded.members.contains(&cbr.default_id);
    let outcome = if default_in_grounded { default } else { default.complement() };
    let mut grounded_labels: Vec<String> = grounded
        .members
        .iter()
        .map(|id| cbr.framework.argument(id).expect("member exists").label.clone())
        .collect();
    grounded_labels.sort();
    CbrVerdict {
        outcome,
        default,
        default_in_grounded,
        grounded,
        grounded_labels,
    }
}

/// Which side of the dispute a node argues for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisputeRole {
    Proponent,
    Opponent,
}

impl DisputeRole {
    fn other(self) -> DisputeRole {
        match self {
            DisputeRole::Proponent => DisputeRole::Opponent,
            DisputeRole::Opponent => DisputeRole::Proponent,
        }
    }
}

/// One node of the explanation tree.
#[derive(Clone, Debug, Serialize)]
pub struct DisputeNode {
    pub arg: ArgId,
    pub label: String,
    pub role: DisputeRole,
    pub winning: bool,
    /// Set when this attacker is itself defeated by the new-case argument
    /// (its situation is not covered by the new case); such branches are
    /// pruned rather than expanded.
    pub defeated_by_new_case: bool,
    pub children: Vec<DisputeNode>,
}

/// Alternating proponent/opponent explanation tree rooted at the default
/// argument.
#[derive(Clone, Debug, Serialize)]
pub struct DisputeTree {
    pub root: DisputeNode,
}

impl DisputeTree {
    pub fn root_wins(&self) -> bool {
        self.root.winning
    }

    /// Indented text rendering for terminals and logs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        render_node(&self.root, 0, &mut out);
        out
    }
}

fn render_node(node: &DisputeNode, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    let role = match node.role {
        DisputeRole::Proponent => "P",
        DisputeRole::Opponent => "O",
    };
    let status = if node.winning { "wins" } else { "loses" };
    let note = if node.defeated_by_new_case {
        " [defeated by the new case]"
    } else {
        ""
    };
    out.push_str(&format!("{indent}{} [{role}] {status}{note}\n", node.label));
    for child in &node.children {
        render_node(child, depth + 1, out);
    }
}

/// Builds the explanation tree for (case base, default, new case).
///
/// The root is the default argument; children of a node are its attackers,
/// with attackers defeated by the new-case argument shown as pruned leaves.
/// The root is marked winning iff the default argument is grounded, so the
/// tree verdict always agrees with [`aacbr_outcome`].
pub fn dispute_tree(case_base: &CaseBase, default: Outcome, new_case: &NewCase) -> DisputeTree {
    let cbr = build_framework(case_base, default, new_case);
    let grounded = cbr.framework.grounded();
    // acyclic by strict-superset attacks, so |Γ|+1 bounds any dispute path;
    // the guard only matters for pathological inputs
    let max_depth = case_base.len() + 1;
    let mut path = BTreeSet::new();
    let root = expand(
        &cbr,
        &grounded,
        &cbr.default_id.clone(),
        DisputeRole::Proponent,
        0,
        max_depth,
        &mut path,
    );
    DisputeTree { root }
}

fn expand(
    cbr: &CbrFramework,
    grounded: &GroundedExtension,
    id: &ArgId,
    role: DisputeRole,
    depth: usize,
    max_depth: usize,
    path: &mut BTreeSet<ArgId>,
) -> DisputeNode {
    let label = cbr.framework.argument(id).expect("node exists").label.clone();
    let attackers: Vec<ArgId> = cbr.framework.attackers_of(id).into_iter().cloned().collect();
    let defeated_by_new_case = attackers.contains(&cbr.new_id);
    let mut children = Vec::new();
    if !defeated_by_new_case && depth < max_depth && !path.contains(id) {
        path.insert(id.clone());
        for attacker in &attackers {
            if attacker == &cbr.new_id {
                continue;
            }
            children.push(expand(cbr, grounded, attacker, role.other(), depth + 1, max_depth, path));
        }
        path.remove(id);
    }
    DisputeNode {
        arg: id.clone(),
        label,
        role,
        winning: grounded.members.contains(id),
        defeated_by_new_case,
        children,
    }
}
