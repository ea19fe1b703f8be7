//! Checks a few settings and prints verdicts with witnesses.
//!
//! cargo run --example compatibility

use std::collections::BTreeSet;

use synergy::compat::{check_compat, Witness};
use synergy::model::{ConstraintSet, InformationInstance, MtmrSetting, Referent};
use synergy::rules::RuleSet;

fn setting(referents: &[&str], tasks: &[&[&str]]) -> MtmrSetting {
    let sets = tasks.iter().enumerate().map(|(i, t)| {
        ConstraintSet::symbolic(format!("S{}", i + 1), t.iter().map(|s| s.parse().unwrap())).unwrap()
    });
    let referents = referents.iter().map(|id| {
        if id.starts_with('t') {
            Referent::target(*id)
        } else {
            Referent::vehicle(*id)
        }
    });
    MtmrSetting::new(referents, sets.collect::<Vec<_>>()).unwrap()
}

fn show(set: &BTreeSet<InformationInstance>) -> String {
    let items: Vec<String> = set.iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

fn main() {
    let rules = RuleSet::default_rules();
    let cases = [
        ("shared vehicle", setting(&["v1", "v2", "v3", "t"], &[&["R(v1,t)", "G(t)"], &["C3(v1,v2,v3)"]])),
        ("fixed pair", setting(&["r1", "r2"], &[&["G(r1)", "G(r2)"], &["R(r1,r2)"]])),
        ("two monitors", setting(&["v1", "t1", "t2"], &[&["R(v1,t1)", "G(t1)"], &["R(v1,t2)", "G(t2)"]])),
        ("same target", setting(&["v1", "v2", "t"], &[&["R(v1,t)", "G(t)"], &["R(v2,t)", "G(t)"]])),
    ];
    for (name, s) in &cases {
        let v = check_compat(s, &rules);
        print!("{name:<15} {:<13}", if v.compatible { "compatible" } else { "incompatible" });
        match &v.witness {
            None => println!(),
            Some(Witness::Overlap { instance, first_task, second_task }) => {
                println!("{instance} pinned by {first_task} and {second_task}")
            }
            Some(w @ Witness::Inference { instance, existing, candidate }) => {
                println!("{instance} from {} and {}", show(existing), show(candidate));
                assert!(w.verify(s, &rules));
            }
        }
    }
}
