//! Coverage determination under seeded flip noise.
//!
//! Shows the bias the coverage-probability law predicts: as the new case
//! shrinks, truly relevant previous cases become exponentially rarer
//! (2^(n−|F|)), so even a modest flip rate floods the retrieved set with
//! false positives and precision collapses while accuracy stays flat.
//!
//! Run: `cargo run --example noisy_experiment`

use aamcbr::agents::AgentConfig;
use aamcbr::backends::{NoisyOracleBackend, OracleBackend, TruthTable};
use aamcbr::datagen::{build_template_pool, generate_test_sets};
use aamcbr::experiments::{relevance_probability, run_coverage_experiment};
use aamcbr::model::credit_domain;

fn main() {
    let domain = credit_domain();
    let table = TruthTable::new();
    let pool = build_template_pool(&domain, 7, &table);
    let test_sets = generate_test_sets(&pool, &domain, 40, 8, false).expect("pool suffices");

    let noisy = NoisyOracleBackend::new(OracleBackend::new(domain.clone(), table), 0.15, 0.0, 0.0, 99);
    let run = run_coverage_experiment(&noisy, &domain, &pool, &test_sets, &AgentConfig::default())
        .expect("offline run succeeds");

    println!("{} coverage decisions under flip rate 0.15\n", run.records.len());
    println!("n  | accuracy | precision | relevant-rate | 2^(n-10)");
    let mut sizes: Vec<usize> = run.metrics.per_n.keys().map(|k| k.parse().unwrap()).collect();
    sizes.sort_unstable();
    for n in sizes {
        let cell = &run.metrics.per_n[&n.to_string()];
        println!(
            "{n:<2} | {:>8} | {:>9} | {:>13} | {:.4}",
            cell.accuracy.display(),
            cell.precision.display(),
            cell.relevant_rate.display(),
            relevance_probability(n, domain.len()),
        );
    }
}
