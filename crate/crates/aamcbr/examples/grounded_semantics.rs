//! The generic argumentation engine on its own: build a framework, compute
//! the grounded extension with its layer trace, and export DOT and JSON.
//!
//! Run: `cargo run --example grounded_semantics`

use aamcbr::aaf::{AAFramework, ArgId, Argument};

fn main() {
    // a -> b -> c, d <-> e: a defends c; the mutual attack leaves d,e out
    let framework = AAFramework::new(
        ["a", "b", "c", "d", "e"]
            .into_iter()
            .map(|id| Argument::new(id, format!("claim {id}")))
            .collect(),
        [("a", "b"), ("b", "c"), ("d", "e"), ("e", "d")]
            .into_iter()
            .map(|(x, y)| (ArgId::from(x), ArgId::from(y))),
    )
    .expect("valid framework");

    let grounded = framework.grounded();
    for (i, layer) in grounded.layers.iter().enumerate() {
        println!("layer {i}: {layer:?}");
    }
    println!("grounded members: {:?}", grounded.members);
    for id in ["a", "c", "d"] {
        println!("is {id} grounded? {}", framework.is_in_grounded(&id.into()).unwrap());
    }

    println!("\nDOT:\n{}", framework.to_dot(Some(&grounded)));
    println!(
        "JSON:\n{}",
        serde_json::to_string_pretty(&framework.export_json(&grounded)).unwrap()
    );
}
