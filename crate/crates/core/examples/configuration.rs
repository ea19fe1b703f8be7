//! Solves for vehicle positions from valued constraints.
//!
//! cargo run --example configuration

use std::collections::HashMap;

use synergy::model::Constraint;
use synergy::rules::RuleSet;
use synergy::solver::solve_configuration;

fn pin(inst: &str, v: [f64; 2]) -> Constraint {
    Constraint::valued(inst.parse().unwrap(), v.to_vec())
}

fn main() {
    let rules = RuleSet::default_rules();
    let fixed: HashMap<String, [f64; 2]> = [("t".to_string(), [30.0, 10.0])].into();
    let pins = [
        pin("C3(v1,v2,v3)", [0.0, 0.0]),
        pin("R(v3,t)", [-5.0, 0.0]),
        pin("G(t)", [30.0, 10.0]),
    ];
    // v1 and v2 are free along one line; the minimum-norm pick puts them
    // on the same point. The scenario stepper starts from a prior instead.
    let c = solve_configuration(&pins, &fixed, &rules).expect("compatible pins");
    for (id, p) in &c.positions {
        println!("{id}: ({:.3}, {:.3})", p[0], p[1]);
    }
    println!("max residual {:.2e}", c.max_residual);

    let bad = [pin("G(r1)", [0.0, 0.0]), pin("G(r2)", [4.0, 0.0]), pin("R(r1,r2)", [1.0, 1.0])];
    match solve_configuration(&bad, &HashMap::new(), &rules) {
        Ok(_) => unreachable!(),
        Err(e) => println!("{e}"),
    }
}
