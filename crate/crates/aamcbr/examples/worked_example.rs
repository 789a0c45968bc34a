//! The two-precedent credit example, decided under both default outcomes.
//!
//! Case base: ({n4}, reject) and ({p2,n3,n4}, approve). New applicant:
//! {n4, p5}. The decision is "reject" regardless of which default is
//! assumed. Prints the constructed frameworks as DOT, the grounded
//! extensions, and the dispute-tree explanations.
//!
//! Run: `cargo run --example worked_example`

use aamcbr::aacbr::{aacbr_outcome, build_framework, dispute_tree};
use aamcbr::model::{Case, CaseBase, NewCase, Outcome};

fn main() {
    let case_base = CaseBase::new([
        Case::new(["n4".into()], Outcome::Zero),
        Case::new(["p2".into(), "n3".into(), "n4".into()], Outcome::One),
    ])
    .expect("example cases are outcome-consistent");
    let applicant = NewCase::new(["n4".into(), "p5".into()]);

    for default in Outcome::BOTH {
        println!("=== default outcome '{default}' ===\n");

        let cbr = build_framework(&case_base, default, &applicant);
        println!("{}", cbr.to_dot());

        let verdict = aacbr_outcome(&case_base, default, &applicant);
        println!("grounded extension: {:?}", verdict.grounded_labels);
        println!(
            "default argument {} the grounded extension",
            if verdict.default_in_grounded { "is in" } else { "is NOT in" }
        );
        println!("decided outcome: '{}'\n", verdict.outcome);

        println!("dispute tree:");
        println!("{}", dispute_tree(&case_base, default, &applicant).to_text());
    }

    println!("verdict as JSON:");
    let verdict = aacbr_outcome(&case_base, Outcome::Zero, &applicant);
    println!("{}", serde_json::to_string_pretty(&verdict.to_json()).unwrap());
}
