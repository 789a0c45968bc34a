//! Generic abstract argumentation frameworks and grounded semantics.
//!
//! A framework is a set of arguments plus a binary attack relation. The
//! grounded extension is computed by Kleene iteration of the defence
//! operator: the first layer holds the unattacked arguments, and each
//! following layer holds every argument the previous layer defends, until a
//! fixpoint. The frameworks built by the case-based reasoner stay tiny, so
//! the iterative construction wins on clarity and keeps the layer trace for
//! explanations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque node identifier, unique within a framework.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgId(String);

impl ArgId {
    pub fn new(id: impl Into<String>) -> Self {
        ArgId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ArgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArgId {
    fn from(s: &str) -> Self {
        ArgId(s.to_string())
    }
}

/// An argument node: identifier plus display payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub id: ArgId,
    pub label: String,
}

impl Argument {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Argument {
            id: ArgId::new(id),
            label: label.into(),
        }
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum AafError {
    #[error("duplicate argument id `{0}`")]
    DuplicateArgument(ArgId),
    #[error("unknown argument `{0}`")]
    UnknownArgument(ArgId),
}

/// An abstract argumentation framework: arguments plus attack edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AAFramework {
    arguments: Vec<Argument>,
    attacks: BTreeSet<(ArgId, ArgId)>,
}

impl AAFramework {
    /// Builds a framework, validating that ids are unique and that both
    /// endpoints of every attack exist. Duplicate edges collapse; self
    /// attacks are permitted.
    pub fn new(
        arguments: Vec<Argument>,
        attacks: impl IntoIterator<Item = (ArgId, ArgId)>,
    ) -> Result<Self, AafError> {
        let mut seen = BTreeSet::new();
        for a in &arguments {
            if !seen.insert(a.id.clone()) {
                return Err(AafError::DuplicateArgument(a.id.clone()));
            }
        }
        let mut edge_set = BTreeSet::new();
        for (from, to) in attacks {
            if !seen.contains(&from) {
                return Err(AafError::UnknownArgument(from));
            }
            if !seen.contains(&to) {
                return Err(AafError::UnknownArgument(to));
            }
            edge_set.insert((from, to));
        }
        Ok(AAFramework {
            arguments,
            attacks: edge_set,
        })
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn attacks(&self) -> &BTreeSet<(ArgId, ArgId)> {
        &self.attacks
    }

    pub fn contains(&self, id: &ArgId) -> bool {
        self.arguments.iter().any(|a| &a.id == id)
    }

    pub fn argument(&self, id: &ArgId) -> Option<&Argument> {
        self.arguments.iter().find(|a| &a.id == id)
    }

    pub fn attackers_of(&self, id: &ArgId) -> BTreeSet<&ArgId> {
        self.attacks
            .iter()
            .filter(|(_, to)| to == id)
            .map(|(from, _)| from)
            .collect()
    }

    pub fn is_attacked(&self, id: &ArgId) -> bool {
        self.attacks.iter().any(|(_, to)| to == id)
    }

    /// Computes the grounded extension with its construction trace.
    ///
    /// Deterministic for a given framework regardless of input ordering, and
    /// total: every framework has exactly one grounded extension.
    pub fn grounded(&self) -> GroundedExtension {
        let attackers: BTreeMap<&ArgId, BTreeSet<&ArgId>> = self
            .arguments
            .iter()
            .map(|a| (&a.id, self.attackers_of(&a.id)))
            .collect();

        let unattacked: BTreeSet<ArgId> = self
            .arguments
            .iter()
            .filter(|a| attackers[&a.id].is_empty())
            .map(|a| a.id.clone())
            .collect();

        let mut layers = vec![unattacked];
        loop {
            let current = layers.last().expect("at least one layer");
            // defended(a) ⟺ every attacker of a is itself attacked by the
            // current layer
            let next: BTreeSet<ArgId> = self
                .arguments
                .iter()
                .filter(|a| {
                    attackers[&a.id]
                        .iter()
                        .all(|b| attackers[*b].iter().any(|c| current.contains(c)))
                })
                .map(|a| a.id.clone())
                .collect();
            if &next == current {
                break;
            }
            layers.push(next);
        }

        GroundedExtension {
            members: layers.last().expect("at least one layer").clone(),
            layers,
        }
    }

    /// Membership test consistent with [`AAFramework::grounded`].
    pub fn is_in_grounded(&self, id: &ArgId) -> Result<bool, AafError> {
        if !self.contains(id) {
            return Err(AafError::UnknownArgument(id.clone()));
        }
        Ok(self.grounded().members.contains(id))
    }

    /// GraphViz DOT rendering; grounded members get a doubled, filled node.
    pub fn to_dot(&self, grounded: Option<&GroundedExtension>) -> String {
        let mut out = String::from("digraph aaf {\n  rankdir=LR;\n  node [shape=box];\n");
        for a in &self.arguments {
            let accepted = grounded.is_some_and(|g| g.members.contains(&a.id));
            let style = if accepted {
                ", peripheries=2, style=filled, fillcolor=lightgrey"
            } else {
                ""
            };
            out.push_str(&format!(
                "  \"{}\" [label=\"{}\"{}];\n",
                dot_escape(a.id.as_str()),
                dot_escape(&a.label),
                style
            ));
        }
        for (from, to) in &self.attacks {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                dot_escape(from.as_str()),
                dot_escape(to.as_str())
            ));
        }
        out.push_str("}\n");
        out
    }

    /// JSON export: arguments, attack pairs and the grounded member ids.
    pub fn export_json(&self, grounded: &GroundedExtension) -> serde_json::Value {
        serde_json::json!({
            "arguments": self.arguments,
            "attacks": self.attacks.iter()
                .map(|(a, b)| serde_json::json!([a, b]))
                .collect::<Vec<_>>(),
            "grounded": grounded.members,
        })
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The grounded extension plus the layer trace of its construction.
///
/// `layers[0]` holds the unattacked arguments and each later layer holds what
/// the previous one defends; layers grow monotonically and `members` equals
/// the final (fixpoint) layer, hence the union of all layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedExtension {
    pub members: BTreeSet<ArgId>,
    pub layers: Vec<BTreeSet<ArgId>>,
}

impl GroundedExtension {
    pub fn contains(&self, id: &ArgId) -> bool {
        self.members.contains(id)
    }
}
