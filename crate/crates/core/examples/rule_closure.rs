//! Parses a rule file, saturates it and prints a few closures.
//!
//! cargo run --example rule_closure

use synergy::rules::{parse_rules, RuleSet, DEFAULT_RULES};

fn main() {
    let parsed = parse_rules(DEFAULT_RULES).expect("shipped rules parse");
    let rules = parsed.saturate();
    println!("{} rules, {} after saturation", parsed.len(), rules.len());
    for r in rules.rules().iter().take(6) {
        println!("  {r}");
    }

    for seed in [&["G(r1)", "G(r2)"][..], &["C3(a,b,c)", "G(a)", "G(b)"], &["R(a,c)", "R(b,c)"]] {
        let seed: Vec<_> = seed.iter().map(|s| rules.types().parse_instance(s).unwrap()).collect();
        let closure = rules.closure(&seed);
        let names: Vec<String> = closure.iter().map(ToString::to_string).collect();
        let shown: Vec<String> = seed.iter().map(ToString::to_string).collect();
        println!("C({}) = {{{}}}", shown.join(", "), names.join(", "));
    }

    // Without the centroid rules the same seed stops at positions.
    let positions = RuleSet::position_rules();
    let seed = ["G(r1)".parse().unwrap(), "G(r2)".parse().unwrap()];
    println!("position rules only: {} instances", positions.closure(&seed).len());
}
