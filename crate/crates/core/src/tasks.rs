//! Constraint sets for the monitoring, centroid and communication tasks.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ConstraintSet, InformationInstance, ModelError, MtmrSetting, Referent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Monitoring,
    Centroid2,
    Centroid3,
    CommMaintenance,
}

impl TaskKind {
    pub fn participants(self) -> usize {
        match self {
            TaskKind::Monitoring | TaskKind::Centroid2 => 2,
            TaskKind::Centroid3 | TaskKind::CommMaintenance => 3,
        }
    }

    /// Participants that must be controllable vehicles.
    pub fn vehicles(self) -> usize {
        match self {
            TaskKind::Monitoring => 1,
            k => k.participants(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("{0} is not a controllable vehicle")]
    NotControllable(String),
    #[error("monitoring target {0} must not be a controllable vehicle")]
    ControllableTarget(String),
    #[error("{0} appears twice in one task")]
    DuplicateParticipant(String),
    #[error("{kind:?} takes {expected} participants, got {got}")]
    ParticipantCount { kind: TaskKind, expected: usize, got: usize },
    #[error("unknown referent {0}")]
    UnknownReferent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One task and the referents it binds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub kind: TaskKind,
    pub participants: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
}

impl TaskSpec {
    pub fn new(task_id: impl Into<String>, kind: TaskKind, participants: impl IntoIterator<Item = impl Into<String>>) -> Self {
        TaskSpec {
            task_id: task_id.into(),
            kind,
            participants: participants.into_iter().map(Into::into).collect(),
            anchor: None,
        }
    }

    pub fn with_anchor(mut self, anchor: impl Into<String>) -> Self {
        self.anchor = Some(anchor.into());
        self
    }

    /// Builds the task's constraint set, resolving participants in `referents`.
    pub fn constraint_set(&self, referents: &[Referent]) -> Result<ConstraintSet, TaskError> {
        let found = self
            .participants
            .iter()
            .map(|id| {
                referents
                    .iter()
                    .find(|r| &r.id == id)
                    .ok_or_else(|| TaskError::UnknownReferent(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let expected = self.kind.participants();
        if found.len() != expected {
            return Err(TaskError::ParticipantCount {
                kind: self.kind,
                expected,
                got: found.len(),
            });
        }
        match self.kind {
            TaskKind::Monitoring => make_monitoring(&self.task_id, found[0], found[1]),
            TaskKind::Centroid2 | TaskKind::Centroid3 => make_centroid(&self.task_id, &found),
            TaskKind::CommMaintenance => make_comm(&self.task_id, found[0], found[1], found[2]),
        }
    }
}

fn require_vehicle(r: &Referent) -> Result<(), TaskError> {
    if r.controllable() {
        Ok(())
    } else {
        Err(TaskError::NotControllable(r.id.clone()))
    }
}

fn require_distinct<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<(), TaskError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(TaskError::DuplicateParticipant(id.to_string()));
        }
    }
    Ok(())
}

/// `{R(vehicle,target), G(target)}`.
pub fn make_monitoring(task_id: &str, vehicle: &Referent, target: &Referent) -> Result<ConstraintSet, TaskError> {
    require_vehicle(vehicle)?;
    if target.controllable() {
        return Err(TaskError::ControllableTarget(target.id.clone()));
    }
    require_distinct([vehicle.id.as_str(), target.id.as_str()])?;
    Ok(ConstraintSet::symbolic(
        task_id,
        [
            InformationInstance::new("R", [&vehicle.id, &target.id]),
            InformationInstance::new("G", [&target.id]),
        ],
    )?)
}

/// `{C2(a,b)}` or `{C3(a,b,c)}` with members sorted.
pub fn make_centroid(task_id: &str, vehicles: &[&Referent]) -> Result<ConstraintSet, TaskError> {
    let kind = match vehicles.len() {
        2 => TaskKind::Centroid2,
        3 => TaskKind::Centroid3,
        got => {
            return Err(TaskError::ParticipantCount {
                kind: TaskKind::Centroid3,
                expected: 3,
                got,
            })
        }
    };
    for v in vehicles {
        require_vehicle(v)?;
    }
    require_distinct(vehicles.iter().map(|v| v.id.as_str()))?;
    let mut ids: Vec<&str> = vehicles.iter().map(|v| v.id.as_str()).collect();
    ids.sort_unstable();
    let name = if kind == TaskKind::Centroid2 { "C2" } else { "C3" };
    Ok(ConstraintSet::symbolic(task_id, [InformationInstance::new(name, ids)])?)
}

/// `{M(end1,end2,relay)}` with the endpoints sorted. Only the relay has to
/// be controllable: the endpoints may be a convoy or a ground station.
pub fn make_comm(task_id: &str, end1: &Referent, end2: &Referent, relay: &Referent) -> Result<ConstraintSet, TaskError> {
    require_vehicle(relay)?;
    require_distinct([end1.id.as_str(), end2.id.as_str(), relay.id.as_str()])?;
    let (a, b) = if end1.id <= end2.id { (end1, end2) } else { (end2, end1) };
    Ok(ConstraintSet::symbolic(
        task_id,
        [InformationInstance::new("M", [&a.id, &b.id, &relay.id])],
    )?)
}

/// Parses a JSON array of task records.
pub fn parse_task_list(text: &str) -> Result<Vec<TaskSpec>, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn write_task_list(tasks: &[TaskSpec]) -> String {
    serde_json::to_string_pretty(tasks).expect("task specs serialize")
}

/// Shape of [`random_setting`] draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSettingParams {
    pub min_vehicles: usize,
    pub max_vehicles: usize,
    pub min_tasks: usize,
    pub max_tasks: usize,
    pub max_instances: usize,
}

impl Default for RandomSettingParams {
    fn default() -> Self {
        RandomSettingParams {
            min_vehicles: 3,
            max_vehicles: 6,
            min_tasks: 1,
            max_tasks: 4,
            max_instances: 10,
        }
    }
}

/// A random setting of monitoring, centroid and communication tasks over
/// vehicles `v1..vN`. Monitoring targets are fresh per task.
pub fn random_setting(seed: u64, params: &RandomSettingParams) -> MtmrSetting {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.random_range(params.min_vehicles..=params.max_vehicles);
    let ntasks = rng.random_range(params.min_tasks..=params.max_tasks);
    let vehicles: Vec<Referent> = (1..=nv).map(|i| Referent::vehicle(format!("v{i}"))).collect();
    let mut setting = MtmrSetting::new(vehicles.clone(), []).expect("vehicle ids are distinct");
    let mut targets = 0;
    for t in 0..ntasks {
        let task_id = format!("S{}", t + 1);
        let kind = match rng.random_range(0..3) {
            0 => TaskKind::Monitoring,
            1 if rng.random_bool(0.5) => TaskKind::Centroid2,
            1 => TaskKind::Centroid3,
            _ => TaskKind::CommMaintenance,
        };
        let picked = sample(&mut rng, nv, kind.vehicles().min(nv));
        let members: Vec<&Referent> = picked.iter().map(|i| &vehicles[i]).collect();
        let (set, extra) = match kind {
            TaskKind::Monitoring => {
                targets += 1;
                let target = Referent::target(format!("t{targets}"));
                (make_monitoring(&task_id, members[0], &target), vec![target])
            }
            TaskKind::Centroid2 | TaskKind::Centroid3 => (make_centroid(&task_id, &members), vec![]),
            TaskKind::CommMaintenance => (make_comm(&task_id, members[0], members[1], members[2]), vec![]),
        };
        let set = set.expect("generated participants are valid");
        if setting.total_constraints() + set.len() > params.max_instances {
            break;
        }
        setting.push_task(set, &extra);
    }
    setting
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleSet;

    fn keys(set: &ConstraintSet) -> Vec<String> {
        set.instances().map(|i| i.to_string()).collect()
    }

    #[test]
    fn monitoring() {
        let v1 = Referent::vehicle("v1");
        let t = Referent::target("t");
        assert_eq!(keys(&make_monitoring("m", &v1, &t).unwrap()), ["R(v1,t)", "G(t)"]);
        assert_eq!(
            make_monitoring("m", &t, &v1),
            Err(TaskError::NotControllable("t".into()))
        );
        let v2 = Referent::vehicle("v2");
        let u = Referent::target("u");
        let s = MtmrSetting::new(
            [v1.clone(), v2.clone(), t.clone(), u.clone()],
            [make_monitoring("a", &v1, &t).unwrap(), make_monitoring("b", &v2, &u).unwrap()],
        )
        .unwrap();
        assert!(s.detect_overlap().is_none());
    }

    #[test]
    fn centroid() {
        let v: Vec<Referent> = (1..=3).map(|i| Referent::vehicle(format!("v{i}"))).collect();
        assert_eq!(keys(&make_centroid("c", &[&v[0], &v[1], &v[2]]).unwrap()), ["C3(v1,v2,v3)"]);
        assert_eq!(keys(&make_centroid("c", &[&v[1], &v[0]]).unwrap()), ["C2(v1,v2)"]);
        assert_eq!(
            make_centroid("c", &[&v[0], &v[0]]),
            Err(TaskError::DuplicateParticipant("v1".into()))
        );
        assert!(matches!(
            make_centroid("c", &[&v[0]]),
            Err(TaskError::ParticipantCount { got: 1, .. })
        ));
    }

    #[test]
    fn comm() {
        let v1 = Referent::vehicle("v1");
        let v7 = Referent::vehicle("v7");
        let v8 = Referent::location("v8");
        assert_eq!(keys(&make_comm("k", &v1, &v8, &v7).unwrap()), ["M(v1,v8,v7)"]);
        assert_eq!(keys(&make_comm("k", &v8, &v1, &v7).unwrap()), ["M(v1,v8,v7)"]);
        assert_eq!(
            make_comm("k", &v1, &v1, &v7),
            Err(TaskError::DuplicateParticipant("v1".into()))
        );
        assert_eq!(
            make_comm("k", &v1, &v7, &v8),
            Err(TaskError::NotControllable("v8".into()))
        );
        let rules = RuleSet::default_rules();
        let premises: Vec<InformationInstance> = vec!["R(v1,v7)".parse().unwrap(), "R(v8,v7)".parse().unwrap()];
        assert!(rules.infers(&premises, &"M(v1,v8,v7)".parse().unwrap()));
    }

    #[test]
    fn spec_round_trip() {
        let referents = [Referent::vehicle("v1"), Referent::target("t")];
        let tasks = vec![
            TaskSpec::new("m1", TaskKind::Monitoring, ["v1", "t"]),
            TaskSpec::new("c1", TaskKind::Centroid2, ["v1", "t"]).with_anchor("base"),
        ];
        let text = write_task_list(&tasks);
        assert!(text.contains("\"comm_maintenance\"") || text.contains("\"monitoring\""));
        assert_eq!(parse_task_list(&text).unwrap(), tasks);
        assert_eq!(keys(&tasks[0].constraint_set(&referents).unwrap()), ["R(v1,t)", "G(t)"]);
        assert_eq!(
            tasks[1].constraint_set(&referents),
            Err(TaskError::NotControllable("t".into()))
        );
        assert_eq!(
            TaskSpec::new("x", TaskKind::Monitoring, ["v1", "q"]).constraint_set(&referents),
            Err(TaskError::UnknownReferent("q".into()))
        );
    }

    #[test]
    fn random_settings_respect_bounds() {
        let p = RandomSettingParams::default();
        for seed in 0..200 {
            let s = random_setting(seed, &p);
            let vehicles = s.referents().iter().filter(|r| r.controllable()).count();
            assert!((3..=6).contains(&vehicles));
            assert!((1..=4).contains(&s.tasks().len()));
            assert!(s.total_constraints() <= 10);
            for t in s.tasks() {
                let inst: BTreeSet<_> = t.instances().collect();
                assert_eq!(inst.len(), t.len());
            }
        }
        assert_eq!(random_setting(5, &p), random_setting(5, &p));
    }
}
