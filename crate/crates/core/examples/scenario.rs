//! Steps the shipped scenarios and prints a few positions per run.
//!
//! cargo run --release --example scenario -- [seed]

use synergy::rules::RuleSet;
use synergy::scenario::{simulate, Scenario};

const SCENARIOS: [(&str, &str, u64); 2] = [
    ("fig1", include_str!("../scenarios/fig1.json"), 200),
    ("convoy", include_str!("../scenarios/convoy.json"), 300),
];

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(0, |a| a.parse().expect("seed"));
    let rules = RuleSet::default_rules();
    for (name, text, ticks) in SCENARIOS {
        let scenario = Scenario::from_json(text).expect("shipped scenario");
        let states = simulate(&scenario, &rules, seed, ticks).expect("compatible every tick");
        let worst = states.iter().map(|s| s.max_residual).fold(0.0, f64::max);
        println!("{name}: {ticks} ticks, worst residual {worst:.2e}");
        for s in states.iter().step_by(ticks as usize / 4) {
            let row: Vec<String> = s
                .positions
                .iter()
                .map(|(id, p)| format!("{id}=({:.1},{:.1})", p[0], p[1]))
                .collect();
            println!("  tick {:3}: {}", s.tick, row.join(" "));
        }
    }
}
