//! Runs every experiment mode with a few iterations and prints summaries.
//!
//! cargo run --release --example experiment -- [iters] [seed]

use synergy::experiment::{run_experiment, ExperimentConfig, Mode};
use synergy::rules::RuleSet;

fn main() {
    let mut args = std::env::args().skip(1);
    let iters: usize = args.next().map_or(10, |a| a.parse().expect("iters"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));
    let rules = RuleSet::default_rules();
    for mode in Mode::ALL {
        let mut config = ExperimentConfig::new(mode);
        config.iters = iters;
        let report = run_experiment(&config, &rules, seed);
        let s = report.summary();
        println!(
            "{mode:<20} baseline {:6.2} ±{:5.2}  synergy {:6.2} ±{:5.2}  ratio {:.2}  violations {}",
            s.baseline.overall.mean,
            s.baseline.pooled_std,
            s.synergy.overall.mean,
            s.synergy.pooled_std,
            s.ratio(),
            s.dominance_violations
        );
    }
    let mut config = ExperimentConfig::new(Mode::Fig4Ratio);
    config.iters = 1;
    let gaps = run_experiment(&config, &rules, seed).gaps();
    println!("ratio sweep gaps (centroids 0..=25): {gaps:?}");
}
