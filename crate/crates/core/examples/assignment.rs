//! Offers one task stream to both policies and prints who took what.
//!
//! cargo run --example assignment

use synergy::assign::{assign_baseline, assign_synergy, TaskOffer};
use synergy::model::Referent;
use synergy::rules::RuleSet;

fn main() {
    let rules = RuleSet::default_rules();
    let vehicles: Vec<Referent> = (1..=4).map(|i| Referent::vehicle(format!("v{i}"))).collect();
    let offers = [
        TaskOffer::centroid("hold-a", 3, Some("base0".into())),
        TaskOffer::monitoring("watch-1", Referent::target("t1")),
        TaskOffer::monitoring("watch-2", Referent::target("t2")),
        TaskOffer::centroid("hold-b", 2, Some("base1".into())),
        TaskOffer::monitoring("watch-3", Referent::target("t3")),
        TaskOffer::monitoring("watch-4", Referent::target("t4")),
    ];
    for (name, state) in [
        ("baseline", assign_baseline(&offers, &vehicles)),
        ("synergy", assign_synergy(&offers, &vehicles, &rules)),
    ] {
        println!("{name}: {} of {} tasks", state.assigned(), offers.len());
        for a in &state.accepted {
            println!("  {:<8} {}", a.spec.task_id, a.spec.participants.join(","));
        }
    }
}
