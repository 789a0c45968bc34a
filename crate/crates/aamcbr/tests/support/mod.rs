//! Shared test support: an exhaustive-subset grounded oracle and seeded
//! random instance generators.
#![allow(dead_code)] // each test target compiles its own copy
//!
//! The oracle is intentionally independent of the engine under test: it
//! enumerates all 2^|A| argument subsets with bitmask arithmetic, keeps the
//! complete ones (conflict-free, self-defending, containing everything they
//! defend) and returns the unique ⊆-least of them.

use std::collections::BTreeSet;

use aamcbr::aaf::{AAFramework, ArgId, Argument};
use aamcbr::model::{Case, CaseBase, FactorId, NewCase, Outcome};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Least complete extension by exhaustive enumeration. Panics above 16
/// arguments; the tests stay well below that.
pub fn brute_force_grounded(framework: &AAFramework) -> BTreeSet<ArgId> {
    let args: Vec<&ArgId> = framework.arguments().iter().map(|a| &a.id).collect();
    let n = args.len();
    assert!(n <= 16, "exhaustive oracle is for tiny frameworks");
    let index_of = |id: &ArgId| args.iter().position(|a| *a == id).expect("endpoint exists");

    let mut attacks_of = vec![0u32; n];
    let mut attackers_of = vec![0u32; n];
    for (from, to) in framework.attacks() {
        attacks_of[index_of(from)] |= 1 << index_of(to);
        attackers_of[index_of(to)] |= 1 << index_of(from);
    }

    let mut complete = Vec::new();
    for set in 0u32..(1 << n) {
        let mut attacked = 0u32;
        for i in 0..n {
            if set & (1 << i) != 0 {
                attacked |= attacks_of[i];
            }
        }
        if attacked & set != 0 {
            continue; // not conflict-free
        }
        // complete ⟺ for every argument: defended exactly when inside
        let is_complete = (0..n).all(|i| {
            let defended = attackers_of[i] & !attacked == 0;
            let inside = set & (1 << i) != 0;
            defended == inside
        });
        if is_complete {
            complete.push(set);
        }
    }

    let least = complete
        .iter()
        .copied()
        .find(|candidate| complete.iter().all(|other| candidate & !other == 0))
        .expect("every framework has a least complete extension");

    (0..n)
        .filter(|i| least & (1 << i) != 0)
        .map(|i| args[i].clone())
        .collect()
}

/// Seeded random framework with up to `max_args` arguments and the given
/// edge probability; self-attacks allowed.
pub fn random_framework(rng: &mut ChaCha8Rng, max_args: usize, edge_prob: f64) -> AAFramework {
    let n = rng.gen_range(1..=max_args);
    let arguments: Vec<Argument> = (0..n).map(|i| Argument::new(format!("a{i}"), format!("a{i}"))).collect();
    let mut attacks = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.gen::<f64>() < edge_prob {
                attacks.push((ArgId::new(format!("a{i}")), ArgId::new(format!("a{j}"))));
            }
        }
    }
    AAFramework::new(arguments, attacks).expect("generated ids are valid")
}

/// Seeded random (case base, default, new case) triple over a small factor
/// universe.
pub fn random_cbr_instance(
    rng: &mut ChaCha8Rng,
    max_factors: usize,
    max_cases: usize,
) -> (CaseBase, Outcome, NewCase) {
    let universe: Vec<FactorId> = (0..max_factors).map(|i| FactorId::new(format!("f{i}"))).collect();
    let random_subset = |rng: &mut ChaCha8Rng| -> BTreeSet<FactorId> {
        universe.iter().filter(|_| rng.gen::<bool>()).cloned().collect()
    };

    let mut by_factors: std::collections::BTreeMap<BTreeSet<FactorId>, Outcome> = Default::default();
    let case_count = rng.gen_range(0..=max_cases);
    for _ in 0..case_count {
        let factors = random_subset(rng);
        let outcome = if rng.gen::<bool>() { Outcome::One } else { Outcome::Zero };
        by_factors.entry(factors).or_insert(outcome); // first wins: keeps consistency
    }
    let case_base = CaseBase::new(
        by_factors
            .into_iter()
            .map(|(factors, outcome)| Case { factors, outcome }),
    )
    .expect("first-wins assignment is consistent");

    let default = if rng.gen::<bool>() { Outcome::One } else { Outcome::Zero };
    let new_case = NewCase {
        factors: random_subset(rng),
    };
    (case_base, default, new_case)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
