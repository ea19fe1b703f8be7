//! Builds the leveled inference graph of a conflicting setting and prints
//! it as DOT.
//!
//! cargo run --example inference_graph > graph.dot

use synergy::compat::build_graph;
use synergy::model::{ConstraintSet, MtmrSetting, Referent};
use synergy::rules::RuleSet;

fn main() {
    let rules = RuleSet::default_rules();
    let tasks = [
        ConstraintSet::symbolic("S1", ["G(r1)".parse().unwrap(), "G(r2)".parse().unwrap()]).unwrap(),
        ConstraintSet::symbolic("S2", ["R(r1,r2)".parse().unwrap()]).unwrap(),
        ConstraintSet::symbolic("S3", ["C2(r2,r3)".parse().unwrap()]).unwrap(),
    ];
    let setting = MtmrSetting::new(["r1", "r2", "r3"].map(Referent::vehicle), tasks).unwrap();
    let graph = build_graph(&setting, &rules);
    eprintln!(
        "{} nodes over {} levels, {} duplicates skipped, {} conflicts",
        graph.len(),
        graph.levels().len(),
        graph.duplicates_skipped(),
        graph.conflicts().len()
    );
    print!("{}", graph.to_dot());
}
