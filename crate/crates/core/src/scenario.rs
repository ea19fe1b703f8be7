//! Scenario files and the tick-by-tick stepper.
//!
//! A scenario lists referents, tasks and, optionally, target paths and a
//! schedule of active tasks. Each tick moves the uncontrolled referents,
//! recomputes task values, checks compatibility and solves for vehicle
//! positions. Vehicles teleport to the solution.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compat::{check_compat, Witness};
use crate::conventions::Point;
use crate::model::{Constraint, ConstraintSet, ModelError, MtmrSetting, Referent, ReferentKind};
use crate::rules::RuleSet;
use crate::solver::{solve_near, SolveError};
use crate::tasks::{TaskError, TaskKind, TaskSpec};

pub const DEFAULT_STANDOFF: Point = [-5.0, 0.0];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("tick {tick}: active tasks are incompatible: {witness:?}")]
    Incompatible { tick: u64, witness: Witness },
    #[error("tick {tick}: {error}")]
    Solve { tick: u64, error: SolveError },
    #[error("cannot write trajectory")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioReferent {
    pub id: String,
    pub kind: ReferentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point>,
}

/// Either a task-library spec, whose values the stepper recomputes, or a
/// literal constraint list whose values stay as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTask {
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<TaskKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub participants: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<Constraint>>,
}

impl ScenarioTask {
    fn spec(&self) -> Option<TaskSpec> {
        self.kind.map(|kind| TaskSpec {
            task_id: self.task_id.clone(),
            kind,
            participants: self.participants.clone(),
            anchor: self.anchor.clone(),
        })
    }
}

/// Piecewise-linear path walked at constant speed, then held at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Path2 {
    pub waypoints: Vec<Point>,
    /// Meters per tick.
    pub speed: f64,
    /// Half-width of uniform per-tick jitter, meters.
    #[serde(default)]
    pub noise: f64,
}

impl Path2 {
    pub fn at(&self, tick: u64) -> Point {
        let mut left = self.speed * tick as f64;
        for w in self.waypoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if left <= len && len > 0.0 {
                let f = left / len;
                return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
            }
            left -= len;
        }
        *self.waypoints.last().expect("validated nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub referents: Vec<ScenarioReferent>,
    /// Type names the tasks use; checked against the rule set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<String>,
    pub tasks: Vec<ScenarioTask>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub paths: BTreeMap<String, Path2>,
    /// From each listed tick on, exactly these tasks are active. Without a
    /// schedule every task is always active.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub schedule: BTreeMap<u64, Vec<String>>,
    #[serde(default = "default_standoff")]
    pub standoff: Point,
}

fn default_standoff() -> Point {
    DEFAULT_STANDOFF
}

fn invalid(msg: String) -> ScenarioError {
    ScenarioError::Invalid(msg)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let ids: BTreeSet<&str> = self.referents.iter().map(|r| r.id.as_str()).collect();
        if ids.len() != self.referents.len() {
            return Err(invalid("referent ids must be unique".into()));
        }
        let mut tasks = BTreeSet::new();
        for t in &self.tasks {
            if !tasks.insert(t.task_id.as_str()) {
                return Err(invalid(format!("task `{}` is declared twice", t.task_id)));
            }
            match (t.kind, &t.constraints) {
                (Some(_), None) => {
                    if let Some(a) = &t.anchor {
                        if !ids.contains(a.as_str()) {
                            return Err(invalid(format!("task `{}`: unknown anchor `{a}`", t.task_id)));
                        }
                    }
                }
                (None, Some(_)) if t.participants.is_empty() && t.anchor.is_none() => {}
                _ => {
                    return Err(invalid(format!(
                        "task `{}` needs either `kind` and `participants` or `constraints`",
                        t.task_id
                    )))
                }
            }
        }
        for (id, path) in &self.paths {
            match self.referents.iter().find(|r| &r.id == id) {
                None => return Err(invalid(format!("path for unknown referent `{id}`"))),
                Some(r) if r.kind == ReferentKind::Vehicle => {
                    return Err(invalid(format!("vehicle `{id}` is solved for and cannot follow a path")))
                }
                _ => {}
            }
            if path.waypoints.is_empty() || path.speed.is_nan() || path.speed < 0.0 || path.noise.is_nan() || path.noise < 0.0 {
                return Err(invalid(format!("path for `{id}` needs waypoints and nonnegative speed and noise")));
            }
        }
        for r in &self.referents {
            if r.kind != ReferentKind::Vehicle && r.position.is_none() && !self.paths.contains_key(&r.id) {
                return Err(invalid(format!("uncontrolled referent `{}` needs a position or a path", r.id)));
            }
        }
        for active in self.schedule.values() {
            if let Some(id) = active.iter().find(|id| !tasks.contains(id.as_str())) {
                return Err(invalid(format!("schedule names unknown task `{id}`")));
            }
        }
        Ok(())
    }

    pub fn referent_list(&self) -> Vec<Referent> {
        self.referents.iter().map(|r| Referent::new(&r.id, r.kind)).collect()
    }

    /// Every declared task at once, with spec tasks left symbolic.
    pub fn setting(&self) -> Result<MtmrSetting, ScenarioError> {
        let referents = self.referent_list();
        let sets = self
            .tasks
            .iter()
            .map(|t| self.symbolic_set(t, &referents))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MtmrSetting::new(referents, sets)?)
    }

    fn symbolic_set(&self, task: &ScenarioTask, referents: &[Referent]) -> Result<ConstraintSet, ScenarioError> {
        match (task.spec(), &task.constraints) {
            (Some(spec), _) => Ok(spec.constraint_set(referents)?),
            (None, Some(cs)) => Ok(ConstraintSet::new(&task.task_id, cs.iter().cloned())?),
            (None, None) => unreachable!("validated"),
        }
    }

    /// Checks declared type names against `rules`.
    pub fn check_types(&self, rules: &RuleSet) -> Result<(), ScenarioError> {
        match self.types.iter().find(|t| rules.types().get(t).is_none()) {
            Some(t) => Err(invalid(format!("type `{t}` is not declared by the rule set"))),
            None => Ok(()),
        }
    }

    pub fn active_tasks(&self, tick: u64) -> Vec<&ScenarioTask> {
        match self.schedule.range(..=tick).next_back() {
            Some((_, ids)) => self.tasks.iter().filter(|t| ids.contains(&t.task_id)).collect(),
            None if self.schedule.is_empty() => self.tasks.iter().collect(),
            None => Vec::new(),
        }
    }

    /// Positions of uncontrolled referents at `tick`.
    pub fn uncontrolled_positions(&self, tick: u64, seed: u64) -> HashMap<String, Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(tick);
        let mut out = HashMap::new();
        for r in self.referents.iter().filter(|r| r.kind != ReferentKind::Vehicle) {
            let p = match self.paths.get(&r.id) {
                Some(path) => {
                    let mut p = path.at(tick);
                    if path.noise > 0.0 {
                        p[0] += rng.random_range(-path.noise..=path.noise);
                        p[1] += rng.random_range(-path.noise..=path.noise);
                    }
                    p
                }
                None => r.position.expect("validated"),
            };
            out.insert(r.id.clone(), p);
        }
        out
    }

    pub fn initial_positions(&self, seed: u64) -> BTreeMap<String, Point> {
        let moving = self.uncontrolled_positions(0, seed);
        self.referents
            .iter()
            .map(|r| {
                let p = moving.get(&r.id).copied().or(r.position).unwrap_or([0.0, 0.0]);
                (r.id.clone(), p)
            })
            .collect()
    }
}

/// Positions after one tick and the valued constraints they satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioState {
    pub tick: u64,
    pub positions: BTreeMap<String, Point>,
    pub active_constraints: Vec<Constraint>,
    pub max_residual: f64,
}

fn valued_set(
    task: &ScenarioTask,
    set: &ConstraintSet,
    at: &dyn Fn(&str) -> Point,
    standoff: Point,
) -> Result<Vec<Constraint>, ScenarioError> {
    let Some(kind) = task.kind else {
        return Ok(set.constraints().to_vec());
    };
    let values: Vec<Point> = match kind {
        TaskKind::Monitoring => vec![standoff, at(&task.participants[1])],
        TaskKind::Centroid2 | TaskKind::Centroid3 => {
            let anchor = task
                .anchor
                .as_deref()
                .ok_or_else(|| invalid(format!("centroid task `{}` needs an anchor to simulate", task.task_id)))?;
            vec![at(anchor)]
        }
        TaskKind::CommMaintenance => vec![[0.0, 0.0]],
    };
    Ok(set
        .instances()
        .zip(values)
        .map(|(i, v)| Constraint::valued(i.clone(), v.to_vec()))
        .collect())
}

/// Computes the state at `tick`, starting vehicles from `previous`.
pub fn step_scenario(
    scenario: &Scenario,
    rules: &RuleSet,
    seed: u64,
    tick: u64,
    previous: &BTreeMap<String, Point>,
) -> Result<ScenarioState, ScenarioError> {
    let referents = scenario.referent_list();
    let moving = scenario.uncontrolled_positions(tick, seed);
    let at = |id: &str| -> Point {
        moving
            .get(id)
            .or_else(|| previous.get(id))
            .copied()
            .unwrap_or([0.0, 0.0])
    };

    let mut sets = Vec::new();
    let mut constraints = Vec::new();
    for task in scenario.active_tasks(tick) {
        let set = scenario.symbolic_set(task, &referents)?;
        let valued = valued_set(task, &set, &at, scenario.standoff)?;
        constraints.extend(valued.iter().cloned());
        sets.push(ConstraintSet::new(&task.task_id, valued)?);
    }
    let setting = MtmrSetting::new(referents.clone(), sets)?;
    let verdict = check_compat(&setting, rules);
    if let Some(witness) = verdict.witness {
        return Err(ScenarioError::Incompatible { tick, witness });
    }

    let mentioned: BTreeSet<&str> = constraints
        .iter()
        .flat_map(|c| c.instance.referents().iter().map(String::as_str))
        .collect();
    let fixed: HashMap<String, Point> = moving
        .iter()
        .filter(|(id, _)| mentioned.contains(id.as_str()))
        .map(|(id, p)| (id.clone(), *p))
        .collect();
    let prior: HashMap<String, Point> = previous.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let config = if constraints.is_empty() {
        None
    } else {
        Some(solve_near(&constraints, &fixed, rules, Some(&prior)).map_err(|error| ScenarioError::Solve { tick, error })?)
    };

    let mut positions = previous.clone();
    positions.extend(moving);
    let mut max_residual = 0.0;
    if let Some(c) = config {
        positions.extend(c.positions);
        max_residual = c.max_residual;
    }
    Ok(ScenarioState {
        tick,
        positions,
        active_constraints: constraints,
        max_residual,
    })
}

/// Steps ticks `0..ticks` in order.
pub fn simulate(scenario: &Scenario, rules: &RuleSet, seed: u64, ticks: u64) -> Result<Vec<ScenarioState>, ScenarioError> {
    let mut previous = scenario.initial_positions(seed);
    let mut out = Vec::with_capacity(ticks as usize);
    for tick in 0..ticks {
        let state = step_scenario(scenario, rules, seed, tick, &previous)?;
        previous = state.positions.clone();
        out.push(state);
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    tick: u64,
    referent: &'a str,
    x: f64,
    y: f64,
}

/// CSV with columns `tick, referent, x, y`, one row per referent per tick.
pub fn write_trajectory<W: Write>(states: &[ScenarioState], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    for s in states {
        for (id, p) in &s.positions {
            w.serialize(TrajectoryRow {
                tick: s.tick,
                referent: id,
                x: p[0],
                y: p[1],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conventions::evaluate;

    const FIG1: &str = include_str!("../scenarios/fig1.json");
    const CONVOY: &str = include_str!("../scenarios/convoy.json");
    const CONFLICT: &str = include_str!("../scenarios/conflict.json");

    fn satisfied(state: &ScenarioState) -> bool {
        let pos: HashMap<String, Point> = state.positions.iter().map(|(k, v)| (k.clone(), *v)).collect();
        state.active_constraints.iter().all(|c| {
            let got = evaluate(&c.instance, &pos).unwrap();
            got.iter().zip(c.value.as_ref().unwrap()).all(|(a, b)| (a - b).abs() < 1e-6)
        })
    }

    #[test]
    fn path_walks_and_holds() {
        let p = Path2 {
            waypoints: vec![[0.0, 0.0], [3.0, 4.0], [3.0, 0.0]],
            speed: 1.0,
            noise: 0.0,
        };
        assert_eq!(p.at(0), [0.0, 0.0]);
        assert_eq!(p.at(5), [3.0, 4.0]);
        assert_eq!(p.at(7), [3.0, 2.0]);
        assert_eq!(p.at(100), [3.0, 0.0]);
    }

    #[test]
    fn shipped_scenarios_parse() {
        let rules = RuleSet::default_rules();
        for text in [FIG1, CONVOY, CONFLICT] {
            let s = Scenario::from_json(text).unwrap();
            s.check_types(&rules).unwrap();
            s.setting().unwrap();
        }
    }

    #[test]
    fn fig1_shared_vehicle_tracks_target() {
        let rules = RuleSet::default_rules();
        let s = Scenario::from_json(FIG1).unwrap();
        let states = simulate(&s, &rules, 7, 50).unwrap();
        for st in &states {
            assert!(st.max_residual < 1e-6);
            assert!(satisfied(st));
        }
        let first = &states[0].positions;
        let last = &states[49].positions;
        assert_ne!(first["t"], last["t"]);
    }

    #[test]
    fn static_scenario_holds_still() {
        let rules = RuleSet::default_rules();
        let mut s = Scenario::from_json(FIG1).unwrap();
        s.paths.clear();
        for r in &mut s.referents {
            if r.id == "t" {
                r.position = Some([20.0, 5.0]);
            }
        }
        let states = simulate(&s, &rules, 1, 5).unwrap();
        for st in &states[1..] {
            assert_eq!(st.positions, states[0].positions);
        }
    }

    #[test]
    fn schedule_switches_tasks() {
        let s = Scenario::from_json(CONVOY).unwrap();
        let (&join, _) = s.schedule.iter().next_back().unwrap();
        assert!(s.active_tasks(join - 1).len() < s.active_tasks(join).len());
    }

    #[test]
    fn conflict_halts_with_witness() {
        let rules = RuleSet::default_rules();
        let s = Scenario::from_json(CONFLICT).unwrap();
        let err = simulate(&s, &rules, 0, 3).unwrap_err();
        assert!(matches!(err, ScenarioError::Incompatible { tick: 0, .. }), "{err}");
    }

    #[test]
    fn trajectory_is_deterministic() {
        let rules = RuleSet::default_rules();
        let s = Scenario::from_json(FIG1).unwrap();
        let csv = |seed| {
            let mut buf = Vec::new();
            write_trajectory(&simulate(&s, &rules, seed, 10).unwrap(), &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = csv(3);
        assert_eq!(a, csv(3));
        assert!(a.starts_with("tick,referent,x,y\n"));
    }

    #[test]
    fn bad_scenarios_are_rejected() {
        let bad = [
            r#"{"referents":[{"id":"a","kind":"vehicle"},{"id":"a","kind":"vehicle"}],"tasks":[]}"#,
            r#"{"referents":[{"id":"t","kind":"target"}],"tasks":[]}"#,
            r#"{"referents":[],"tasks":[{"task_id":"x"}]}"#,
            r#"{"referents":[],"tasks":[],"schedule":{"0":["nope"]}}"#,
            r#"{"referents":[],"tasks":[],"extra":1}"#,
            r#"{"referents":[{"id":"v","kind":"vehicle"}],"tasks":[],"paths":{"v":{"waypoints":[[0,0]],"speed":1}}}"#,
        ];
        for text in bad {
            assert!(Scenario::from_json(text).is_err(), "{text}");
        }
    }
}
