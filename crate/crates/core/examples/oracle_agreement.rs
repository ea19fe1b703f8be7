//! Cross-checks the graph algorithm against both oracles on random settings.
//!
//! cargo run --release --example oracle_agreement -- [count] [seed] [max_tasks]

use std::time::{Duration, Instant};

use synergy::compat::{check_compat, oracle_numeric, oracle_theorem1};
use synergy::rules::RuleSet;
use synergy::tasks::{random_setting, RandomSettingParams};

fn main() {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map_or(1000, |a| a.parse().expect("count"));
    let base: u64 = args.next().map_or(0, |a| a.parse().expect("seed"));
    let rules = RuleSet::default_rules();
    let mut params = RandomSettingParams::default();
    if let Some(t) = args.next() {
        params.max_tasks = t.parse().expect("max_tasks");
        params.max_instances = 12;
    }

    let (mut theorem_agree, mut numeric_agree, mut incompatible) = (0, 0, 0);
    let mut graph_time = Duration::ZERO;
    for seed in base..base + count {
        let setting = random_setting(seed, &params);
        let t = Instant::now();
        let verdict = check_compat(&setting, &rules);
        graph_time += t.elapsed();
        let brute = oracle_theorem1(&setting, &rules).expect("settings stay under the guard");
        let numeric = oracle_numeric(&setting, &rules, seed).expect("uniform dimensions");
        incompatible += usize::from(!verdict.compatible);
        if brute.compatible == verdict.compatible {
            theorem_agree += 1;
        } else {
            println!("theorem1 disagrees on seed {seed}: graph={} {:?}", verdict.compatible, setting.tasks());
        }
        if numeric.compatible == verdict.compatible {
            numeric_agree += 1;
        } else {
            println!(
                "numeric disagrees on seed {seed}: graph={} residual={:.3e} {:?}",
                verdict.compatible,
                numeric.max_residual,
                setting.tasks().iter().map(|t| t.instances().map(|i| i.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>()
            );
        }
    }
    println!("settings: {count}, incompatible: {incompatible}");
    println!("agreement with brute force: {theorem_agree}/{count}");
    println!("agreement with numeric oracle: {numeric_agree}/{count}");
    println!("graph time: {graph_time:?}");
}
