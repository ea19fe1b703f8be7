//! Compatibility of simultaneously active constraint sets.
//!
//! [`check_compat`] builds the leveled inference graph bottom-up and stops
//! at the first instance reachable from two footprints whose intersection
//! no longer determines it. The oracles decide the same question by brute
//! force and numerically.

mod graph;
mod oracle;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{InformationInstance, MtmrSetting};
use crate::rules::RuleSet;

pub use graph::{build_graph, GraphNode, InferenceGraph};
pub use oracle::{
    oracle_numeric, oracle_numeric_valued, oracle_theorem1, oracle_theorem1_with_limit,
    random_values, NumericVerdict, OracleError, RESIDUAL_TOLERANCE, THEOREM1_LIMIT,
};

/// Why a setting is incompatible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Two tasks pin the same instance.
    Overlap {
        instance: InformationInstance,
        first_task: String,
        second_task: String,
    },
    /// Both sets infer `instance`; their intersection does not.
    Inference {
        instance: InformationInstance,
        existing: BTreeSet<InformationInstance>,
        candidate: BTreeSet<InformationInstance>,
    },
}

impl Witness {
    pub fn instance(&self) -> &InformationInstance {
        match self {
            Witness::Overlap { instance, .. } | Witness::Inference { instance, .. } => instance,
        }
    }

    /// Re-derives the witness from scratch.
    pub fn verify(&self, setting: &MtmrSetting, rules: &RuleSet) -> bool {
        match self {
            Witness::Overlap {
                instance,
                first_task,
                second_task,
            } => {
                let canon = Canonical::new(setting, rules);
                let pins = |id: &str| {
                    canon
                        .tasks
                        .iter()
                        .filter(|(t, _)| t == id)
                        .map(|(_, insts)| insts.iter().filter(|i| *i == instance).count())
                        .sum::<usize>()
                };
                if first_task == second_task {
                    pins(first_task) >= 2
                } else {
                    pins(first_task) >= 1 && pins(second_task) >= 1
                }
            }
            Witness::Inference {
                instance,
                existing,
                candidate,
            } => {
                rules.infers(existing, instance)
                    && rules.infers(candidate, instance)
                    && !rules.infers(existing.intersection(candidate), instance)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatVerdict {
    pub compatible: bool,
    pub witness: Option<Witness>,
    pub levels_built: usize,
}

impl CompatVerdict {
    pub(crate) fn compatible(levels_built: usize) -> Self {
        CompatVerdict {
            compatible: true,
            witness: None,
            levels_built,
        }
    }

    pub(crate) fn incompatible(witness: Witness, levels_built: usize) -> Self {
        CompatVerdict {
            compatible: false,
            witness: Some(witness),
            levels_built,
        }
    }
}

/// Task instances with symmetric positions sorted, so that `M(b,a,c)` and
/// `M(a,b,c)` count as one instance.
pub(crate) struct Canonical {
    pub tasks: Vec<(String, Vec<InformationInstance>)>,
}

impl Canonical {
    /// # Panics
    ///
    /// If an instance does not match a type declared by `rules`.
    pub fn new(setting: &MtmrSetting, rules: &RuleSet) -> Self {
        let tasks = setting
            .tasks()
            .iter()
            .map(|t| {
                let insts = t
                    .instances()
                    .map(|i| {
                        rules
                            .types()
                            .resolve(i)
                            .unwrap_or_else(|e| panic!("task {}: {e}", t.task_id()))
                    })
                    .collect();
                (t.task_id().to_string(), insts)
            })
            .collect();
        Canonical { tasks }
    }

    /// Union of all task instances, in first-appearance order.
    pub fn instances(&self) -> Vec<InformationInstance> {
        let mut seen = BTreeSet::new();
        self.tasks
            .iter()
            .flat_map(|(_, insts)| insts)
            .filter(|i| seen.insert(*i))
            .cloned()
            .collect()
    }

    /// The first instance pinned twice, scanning tasks and constraints in
    /// order. A task can collide with itself once symmetric arguments are
    /// sorted.
    pub fn overlap(&self) -> Option<Witness> {
        for (i, (task, insts)) in self.tasks.iter().enumerate() {
            for (k, inst) in insts.iter().enumerate() {
                let later = insts[k + 1..].iter().map(|x| (task, x)).chain(
                    self.tasks[i + 1..]
                        .iter()
                        .flat_map(|(t, xs)| xs.iter().map(move |x| (t, x))),
                );
                for (other, x) in later {
                    if x == inst {
                        return Some(Witness::Overlap {
                            instance: inst.clone(),
                            first_task: task.clone(),
                            second_task: other.clone(),
                        });
                    }
                }
            }
        }
        None
    }
}

/// Decides whether every task's constraints can hold at once.
///
/// # Panics
///
/// If `rules` is not saturated or the setting uses a type the rules do not
/// declare.
pub fn check_compat(setting: &MtmrSetting, rules: &RuleSet) -> CompatVerdict {
    rules.assert_saturated();
    let canon = Canonical::new(setting, rules);
    if let Some(w) = canon.overlap() {
        return CompatVerdict::incompatible(w, 0);
    }
    let graph = graph::build(&canon, rules, true);
    let levels = graph.levels().len();
    match graph.conflicts().first() {
        Some(w) => CompatVerdict::incompatible(w.clone(), levels),
        None => CompatVerdict::compatible(levels),
    }
}
