//! Draws seeded random settings from the task library.
//!
//! cargo run --example random_settings -- [seed]

use synergy::compat::check_compat;
use synergy::rules::RuleSet;
use synergy::tasks::{make_centroid, make_comm, make_monitoring, random_setting, write_task_list, RandomSettingParams, TaskKind, TaskSpec};
use synergy::model::Referent;

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(0, |a| a.parse().expect("seed"));
    let (v1, v2, v3) = (Referent::vehicle("v1"), Referent::vehicle("v2"), Referent::vehicle("v3"));
    let t = Referent::target("t");
    for set in [
        make_monitoring("watch", &v1, &t).unwrap(),
        make_centroid("hold", &[&v3, &v1, &v2]).unwrap(),
        make_comm("relay", &v3, &t, &v2).unwrap(),
    ] {
        let insts: Vec<String> = set.instances().map(ToString::to_string).collect();
        println!("{}: {}", set.task_id(), insts.join(", "));
    }
    let specs = [
        TaskSpec::new("watch", TaskKind::Monitoring, ["v1", "t"]),
        TaskSpec::new("hold", TaskKind::Centroid3, ["v1", "v2", "v3"]).with_anchor("base"),
    ];
    println!("{}", write_task_list(&specs));

    let rules = RuleSet::default_rules();
    let params = RandomSettingParams::default();
    for s in seed..seed + 5 {
        let setting = random_setting(s, &params);
        let tasks: Vec<String> = setting
            .tasks()
            .iter()
            .map(|t| t.instances().map(ToString::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        let verdict = check_compat(&setting, &rules);
        println!("seed {s}: [{}] -> {}", tasks.join(" | "), verdict.compatible);
    }
}
