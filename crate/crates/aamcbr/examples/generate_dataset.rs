//! Build the full synthetic dataset: 1023 composed scenarios (one per
//! non-empty factor subset) and a handful of test sets, written as files.
//!
//! Run: `cargo run --example generate_dataset`

use aamcbr::backends::TruthTable;
use aamcbr::datagen::{build_template_pool, generate_test_sets, save_pool, save_test_sets};
use aamcbr::model::credit_domain;

fn main() {
    let out = std::env::temp_dir().join("aamcbr_dataset");
    std::fs::create_dir_all(&out).expect("temp dir is writable");

    let domain = credit_domain();
    let table = TruthTable::new();
    let pool = build_template_pool(&domain, 42, &table);
    println!("composed {} scenarios ({} registered as ground truth)", pool.len(), table.len());

    let sample = pool.get(&["p1".into(), "n2".into()].into_iter().collect()).unwrap();
    println!("\nscenario for {{p1,n2}}:\n  {}\n", sample.description);

    let pool_path = out.join("scenarios.jsonl");
    save_pool(&pool, &domain, &pool_path).expect("pool writes");
    println!("wrote {}", pool_path.display());

    let sets = generate_test_sets(&pool, &domain, 5, 43, false).expect("pool is large enough");
    let sets_dir = out.join("testsets");
    save_test_sets(&sets, &sets_dir).expect("test sets write");
    println!("wrote {} test sets under {}", sets.len(), sets_dir.display());

    let first = &sets[0];
    println!("\ntest set 0 (seed {}):", first.seed);
    for prev in &first.previous {
        println!("  previous {:?} → '{}'", prev.subset, prev.outcome);
    }
    for new_case in &first.new_cases {
        println!("  new case ({} factors): {:?}", new_case.len(), new_case);
    }
}
