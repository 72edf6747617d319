//! Builtin scenarios, embedded from the repository's `scenarios/` directory.

use crate::scenario::Scenario;

const BUILTINS: [(&str, &str); 3] = [
    (
        "rotation-algebra",
        include_str!("../../../scenarios/rotation-algebra.json"),
    ),
    (
        "translation-flow",
        include_str!("../../../scenarios/translation-flow.json"),
    ),
    (
        "singular-hamiltonian",
        include_str!("../../../scenarios/singular-hamiltonian.json"),
    ),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|b| b.0 == name).map(|b| b.1)
}

pub fn listing(verbose: bool) -> String {
    let mut out = String::new();
    for (name, text) in BUILTINS {
        let sc = Scenario::parse(text).expect("builtin scenarios are valid");
        out.push_str(&format!("{name:<22}{}\n", sc.description));
        if verbose {
            for e in &sc.experiments {
                out.push_str(&format!("    {:<28}{}\n", e.name(), e.kind()));
            }
        }
    }
    out
}
