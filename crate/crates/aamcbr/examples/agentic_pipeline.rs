//! Per-case agents factorizing text-only previous cases.
//!
//! Three previous cases exist only as prose plus a known outcome. For each
//! one, an agent determines whether the new applicant's factors cover it;
//! covered cases get their factors extracted, the rest refuse and stay
//! private. The surviving factorized cases are decided symbolically. The
//! language model is played by the deterministic ground-truth oracle, so the
//! whole example runs offline.
//!
//! Run: `cargo run --example agentic_pipeline`

use aamcbr::agents::{run_aam_cbr, AgentConfig};
use aamcbr::backends::{OracleBackend, TruthTable};
use aamcbr::datagen::compose_template_scenario;
use aamcbr::model::{credit_domain, NewCase, Outcome};

fn main() {
    let domain = credit_domain();
    let table = TruthTable::new();

    // compose three scenario texts; the composer registers their ground
    // truth in the table that also powers the oracle
    let previous: Vec<(String, Outcome)> = [
        (vec!["n4"], Outcome::Zero),                // limited history → rejected
        (vec!["p2", "n3", "n4"], Outcome::One),     // long employment outweighed the rest
        (vec!["n1", "n2", "n5"], Outcome::Zero),    // young, overdue to many inquiries
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (ids, outcome))| {
        let subset = ids.into_iter().map(Into::into).collect();
        let scenario = compose_template_scenario(&domain, &subset, 90 + i as u64, &table);
        (scenario.description, outcome)
    })
    .collect();

    for (i, (text, outcome)) in previous.iter().enumerate() {
        println!("previous case {i} (outcome '{outcome}'): {text}");
    }

    let applicant = NewCase::new(["n4".into(), "p5".into()]);
    println!("\nnew applicant factors: {:?}", applicant.factors);

    let oracle = OracleBackend::new(domain.clone(), table);
    let result = run_aam_cbr(
        &oracle,
        &domain,
        &previous,
        &applicant,
        Outcome::Zero,
        &AgentConfig::default(),
    )
    .expect("offline run succeeds");

    println!();
    for verdict in &result.relevance {
        println!(
            "agent {}: relevant={} (reply {:?})",
            verdict.previous_case_index, verdict.relevant, verdict.raw_response
        );
    }
    println!("\nfactorized cases reaching the reasoner (no text crosses this line):");
    for case in &result.factorized {
        println!(
            "  case {} → factors {:?}, outcome '{}'",
            case.previous_case_index, case.factors, case.outcome
        );
    }
    println!("\ndecided outcome: '{}'", result.verdict.outcome);
    println!("grounded extension: {:?}", result.verdict.grounded_labels);
}
