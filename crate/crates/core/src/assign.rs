//! Greedy instantaneous task assignment.
//!
//! The baseline treats vehicles as single-tasking. The synergy policy lets
//! coalitions overlap as long as the accumulated setting stays compatible.

use std::collections::BTreeSet;

use crate::compat::check_compat;
use crate::model::{ConstraintSet, MtmrSetting, Referent};
use crate::rules::RuleSet;
use crate::tasks::{TaskKind, TaskSpec};

/// A task waiting for a coalition. Monitoring offers name their target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskOffer {
    pub task_id: String,
    pub kind: TaskKind,
    pub target: Option<Referent>,
    pub anchor: Option<String>,
}

impl TaskOffer {
    pub fn monitoring(task_id: impl Into<String>, target: Referent) -> Self {
        TaskOffer {
            task_id: task_id.into(),
            kind: TaskKind::Monitoring,
            target: Some(target),
            anchor: None,
        }
    }

    pub fn centroid(task_id: impl Into<String>, members: usize, anchor: Option<String>) -> Self {
        let kind = if members == 2 { TaskKind::Centroid2 } else { TaskKind::Centroid3 };
        TaskOffer {
            task_id: task_id.into(),
            kind,
            target: None,
            anchor,
        }
    }

    pub fn comm(task_id: impl Into<String>) -> Self {
        TaskOffer {
            task_id: task_id.into(),
            kind: TaskKind::CommMaintenance,
            target: None,
            anchor: None,
        }
    }

    /// Binds the offer to a coalition, given in the order produced by
    /// [`coalitions`].
    pub fn bind(&self, coalition: &[&Referent]) -> TaskSpec {
        let mut participants: Vec<String> = coalition.iter().map(|r| r.id.clone()).collect();
        if let Some(t) = &self.target {
            participants.push(t.id.clone());
        }
        TaskSpec {
            task_id: self.task_id.clone(),
            kind: self.kind,
            participants,
            anchor: self.anchor.clone(),
        }
    }
}

/// Candidate coalitions for `kind` over `vehicles`, lowest indices first.
/// Communication coalitions list the endpoints first and the relay last,
/// trying each member of a triple as relay in index order.
pub fn coalitions(kind: TaskKind, vehicles: usize) -> Vec<Vec<usize>> {
    let k = kind.vehicles();
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..k).collect();
    if k > vehicles {
        return out;
    }
    loop {
        if kind == TaskKind::CommMaintenance {
            for relay in 0..k {
                let mut c: Vec<usize> = combo.iter().copied().enumerate().filter(|&(i, _)| i != relay).map(|(_, v)| v).collect();
                c.push(combo[relay]);
                out.push(c);
            }
        } else {
            out.push(combo.clone());
        }
        // next k-combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < vehicles - k + i {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Accepted {
    pub spec: TaskSpec,
    pub constraints: ConstraintSet,
}

#[derive(Debug, Clone, Default)]
pub struct AssignmentState {
    pub accepted: Vec<Accepted>,
    /// Vehicles already serving a task; tracked by the baseline only.
    pub busy: BTreeSet<String>,
    /// Union of accepted tasks; tracked by the synergy policy only.
    pub setting: MtmrSetting,
}

impl AssignmentState {
    pub fn assigned(&self) -> usize {
        self.accepted.len()
    }
}

fn extra_referents(offer: &TaskOffer) -> Vec<Referent> {
    offer.target.iter().cloned().collect()
}

fn constraints_for(offer: &TaskOffer, coalition: &[&Referent]) -> (TaskSpec, ConstraintSet) {
    let spec = offer.bind(coalition);
    let mut referents: Vec<Referent> = coalition.iter().map(|r| (*r).clone()).collect();
    referents.extend(extra_referents(offer));
    let set = spec
        .constraint_set(&referents)
        .expect("offers bind vehicles to vehicle slots");
    (spec, set)
}

/// Single-tasking greedy assignment.
#[derive(Debug, Clone, Default)]
pub struct BaselineAssigner {
    vehicles: Vec<Referent>,
    state: AssignmentState,
}

impl BaselineAssigner {
    pub fn new(vehicles: &[Referent]) -> Self {
        BaselineAssigner {
            vehicles: vehicles.to_vec(),
            state: AssignmentState::default(),
        }
    }

    /// Accepts the offer with the lowest free coalition, if any.
    pub fn offer(&mut self, offer: &TaskOffer) -> bool {
        let free: Vec<&Referent> = self
            .vehicles
            .iter()
            .filter(|v| !self.state.busy.contains(&v.id))
            .collect();
        let Some(pick) = coalitions(offer.kind, free.len()).into_iter().next() else {
            return false;
        };
        let coalition: Vec<&Referent> = pick.iter().map(|&i| free[i]).collect();
        let (spec, constraints) = constraints_for(offer, &coalition);
        self.state.busy.extend(coalition.iter().map(|v| v.id.clone()));
        self.state.accepted.push(Accepted { spec, constraints });
        true
    }

    pub fn state(&self) -> &AssignmentState {
        &self.state
    }

    pub fn into_state(self) -> AssignmentState {
        self.state
    }
}

/// Greedy assignment that lets coalitions share vehicles while the union of
/// accepted tasks stays compatible.
#[derive(Debug, Clone)]
pub struct SynergyAssigner<'r> {
    vehicles: Vec<Referent>,
    rules: &'r RuleSet,
    state: AssignmentState,
}

impl<'r> SynergyAssigner<'r> {
    pub fn new(vehicles: &[Referent], rules: &'r RuleSet) -> Self {
        rules.assert_saturated();
        let setting = MtmrSetting::new(vehicles.to_vec(), []).expect("vehicle ids are distinct");
        SynergyAssigner {
            vehicles: vehicles.to_vec(),
            rules,
            state: AssignmentState {
                setting,
                ..AssignmentState::default()
            },
        }
    }

    /// Accepts the offer with the first coalition that keeps the
    /// accumulated setting compatible.
    pub fn offer(&mut self, offer: &TaskOffer) -> bool {
        let extra = extra_referents(offer);
        for pick in coalitions(offer.kind, self.vehicles.len()) {
            let coalition: Vec<&Referent> = pick.iter().map(|&i| &self.vehicles[i]).collect();
            let (spec, constraints) = constraints_for(offer, &coalition);
            let candidate = self.state.setting.with_task(constraints.clone(), &extra);
            if check_compat(&candidate, self.rules).compatible {
                self.state.setting = candidate;
                self.state.accepted.push(Accepted { spec, constraints });
                return true;
            }
        }
        false
    }

    pub fn state(&self) -> &AssignmentState {
        &self.state
    }

    pub fn into_state(self) -> AssignmentState {
        self.state
    }
}

pub fn assign_baseline(offers: &[TaskOffer], vehicles: &[Referent]) -> AssignmentState {
    let mut a = BaselineAssigner::new(vehicles);
    for o in offers {
        a.offer(o);
    }
    a.into_state()
}

pub fn assign_synergy(offers: &[TaskOffer], vehicles: &[Referent], rules: &RuleSet) -> AssignmentState {
    let mut a = SynergyAssigner::new(vehicles, rules);
    for o in offers {
        a.offer(o);
    }
    a.into_state()
}
