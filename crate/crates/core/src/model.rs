//! Referents, information types and instances, constraints and MT-MR settings.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed instance `{0}`")]
    MalformedInstance(String),
    #[error("unknown information type `{0}`")]
    UnknownType(String),
    #[error("type `{name}` takes {expected} referents, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("instance `{0}` repeats a referent")]
    RepeatedReferent(String),
    #[error("task `{task}` constrains `{instance}` twice")]
    DuplicateConstraint { task: String, instance: String },
    #[error("constraint on `{instance}` has {found} value components, expected {expected}")]
    ValueDimension {
        instance: String,
        expected: usize,
        found: usize,
    },
    #[error("referent `{0}` is declared more than once")]
    DuplicateReferent(String),
    #[error("referent id must be nonempty")]
    EmptyReferentId,
    #[error("referent `{referent}` used by task `{task}` is not in the referent universe")]
    UnknownReferent { task: String, referent: String },
    #[error("type `{0}` is declared more than once")]
    DuplicateType(String),
    #[error("invalid type declaration for `{0}`")]
    InvalidType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferentKind {
    Vehicle,
    Target,
    Location,
}

/// A named entity that information instances are about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Referent {
    pub id: String,
    pub kind: ReferentKind,
}

impl Referent {
    pub fn new(id: impl Into<String>, kind: ReferentKind) -> Self {
        Referent {
            id: id.into(),
            kind,
        }
    }

    pub fn vehicle(id: impl Into<String>) -> Self {
        Self::new(id, ReferentKind::Vehicle)
    }

    pub fn target(id: impl Into<String>) -> Self {
        Self::new(id, ReferentKind::Target)
    }

    pub fn location(id: impl Into<String>) -> Self {
        Self::new(id, ReferentKind::Location)
    }

    /// Only vehicles have positions we get to choose.
    pub fn controllable(&self) -> bool {
        self.kind == ReferentKind::Vehicle
    }
}

/// Schema shared by all instances of one kind of information.
///
/// `symmetric` lists argument positions (0-based) whose order carries no
/// meaning. Instances are stored with the referents at those positions
/// sorted, so `C2(b,a)` and `C2(a,b)` are the same instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InformationType {
    pub name: String,
    pub arity: usize,
    #[serde(default = "default_dim", alias = "dim")]
    pub value_dim: usize,
    #[serde(default)]
    pub symmetric: Vec<usize>,
}

fn default_dim() -> usize {
    2
}

impl InformationType {
    pub fn new(name: impl Into<String>, arity: usize, value_dim: usize) -> Self {
        InformationType {
            name: name.into(),
            arity,
            value_dim,
            symmetric: Vec::new(),
        }
    }

    /// Marks every argument position as interchangeable.
    pub fn fully_symmetric(mut self) -> Self {
        self.symmetric = (0..self.arity).collect();
        self
    }

    pub fn with_symmetric(mut self, mut positions: Vec<usize>) -> Self {
        positions.sort_unstable();
        positions.dedup();
        self.symmetric = positions;
        self
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ok = !self.name.is_empty()
            && self.arity >= 1
            && self.value_dim >= 1
            && self.symmetric.iter().all(|&p| p < self.arity)
            && self.symmetric.len() != 1;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidType(self.name.clone()))
        }
    }

    /// Sorts the referents sitting at symmetric positions in place.
    pub fn canonicalize<T: Ord + Clone>(&self, referents: &mut [T]) {
        if self.symmetric.len() < 2 {
            return;
        }
        let mut vals: Vec<T> = self.symmetric.iter().map(|&p| referents[p].clone()).collect();
        vals.sort();
        for (&p, v) in self.symmetric.iter().zip(vals) {
            referents[p] = v;
        }
    }
}

/// Lookup table of information types by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeTable {
    types: Vec<InformationType>,
    index: HashMap<String, usize>,
}

impl TypeTable {
    pub fn new(types: impl IntoIterator<Item = InformationType>) -> Result<Self, ModelError> {
        let mut table = TypeTable::default();
        for t in types {
            table.insert(t)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, itype: InformationType) -> Result<usize, ModelError> {
        itype.validate()?;
        if self.index.contains_key(&itype.name) {
            return Err(ModelError::DuplicateType(itype.name));
        }
        let idx = self.types.len();
        self.index.insert(itype.name.clone(), idx);
        self.types.push(itype);
        Ok(idx)
    }

    pub fn get(&self, name: &str) -> Option<&InformationType> {
        self.index.get(name).map(|&i| &self.types[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn by_index(&self, idx: usize) -> &InformationType {
        &self.types[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &InformationType> {
        self.types.iter()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Common value dimension of all types, if they agree.
    pub fn value_dim(&self) -> Option<usize> {
        let first = self.types.first()?.value_dim;
        self.types
            .iter()
            .all(|t| t.value_dim == first)
            .then_some(first)
    }

    /// Validates `raw` against the table and canonicalizes symmetric positions.
    pub fn resolve(&self, raw: &InformationInstance) -> Result<InformationInstance, ModelError> {
        let itype = self
            .get(&raw.type_name)
            .ok_or_else(|| ModelError::UnknownType(raw.type_name.clone()))?;
        if raw.referents.len() != itype.arity {
            return Err(ModelError::Arity {
                name: itype.name.clone(),
                expected: itype.arity,
                found: raw.referents.len(),
            });
        }
        let distinct: HashSet<&String> = raw.referents.iter().collect();
        if distinct.len() != raw.referents.len() {
            return Err(ModelError::RepeatedReferent(raw.canonical_key()));
        }
        let mut referents = raw.referents.clone();
        itype.canonicalize(&mut referents);
        Ok(InformationInstance {
            type_name: raw.type_name.clone(),
            referents,
        })
    }

    /// Parses `"R(v1,t)"` and resolves it against the table.
    pub fn parse_instance(&self, text: &str) -> Result<InformationInstance, ModelError> {
        self.resolve(&text.parse()?)
    }
}

/// A typed label `F(E)` over an ordered list of referent ids.
///
/// Equality respects referent order: `R(a,b) != R(b,a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InformationInstance {
    type_name: String,
    referents: Vec<String>,
}

impl InformationInstance {
    /// Builds an instance verbatim; use [`TypeTable::resolve`] to validate it.
    pub fn new<I, S>(type_name: impl Into<String>, referents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        InformationInstance {
            type_name: type_name.into(),
            referents: referents.into_iter().map(Into::into).collect(),
        }
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn referents(&self) -> &[String] {
        &self.referents
    }

    /// `name(id1,id2,...)`. Injective because ids and names never contain
    /// parentheses or commas.
    pub fn canonical_key(&self) -> String {
        format!("{}({})", self.type_name, self.referents.join(","))
    }
}

impl fmt::Display for InformationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.type_name, self.referents.join(","))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl FromStr for InformationInstance {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::MalformedInstance(s.to_string());
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(bad)?;
        if !s_trim.ends_with(')') {
            return Err(bad());
        }
        let name = s_trim[..open].trim();
        let inner = &s_trim[open + 1..s_trim.len() - 1];
        if !is_ident(name) {
            return Err(bad());
        }
        let referents: Vec<String> = inner.split(',').map(|r| r.trim().to_string()).collect();
        if referents.iter().any(|r| !is_ident(r)) {
            return Err(bad());
        }
        Ok(InformationInstance {
            type_name: name.to_string(),
            referents,
        })
    }
}

impl Serialize for InformationInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical_key())
    }
}

impl<'de> Deserialize<'de> for InformationInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A pin on the value of an information instance. Symbolic checking never
/// looks at `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub instance: InformationInstance,
    #[serde(default)]
    pub value: Option<Vec<f64>>,
}

impl Constraint {
    pub fn symbolic(instance: InformationInstance) -> Self {
        Constraint {
            instance,
            value: None,
        }
    }

    pub fn valued(instance: InformationInstance, value: Vec<f64>) -> Self {
        Constraint {
            instance,
            value: Some(value),
        }
    }
}

/// The constraints one task's coalition must satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    task_id: String,
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(
        task_id: impl Into<String>,
        constraints: impl IntoIterator<Item = Constraint>,
    ) -> Result<Self, ModelError> {
        let task_id = task_id.into();
        let constraints: Vec<Constraint> = constraints.into_iter().collect();
        let mut seen = HashSet::new();
        for c in &constraints {
            if !seen.insert(&c.instance) {
                return Err(ModelError::DuplicateConstraint {
                    task: task_id,
                    instance: c.instance.canonical_key(),
                });
            }
        }
        Ok(ConstraintSet {
            task_id,
            constraints,
        })
    }

    pub fn symbolic(
        task_id: impl Into<String>,
        instances: impl IntoIterator<Item = InformationInstance>,
    ) -> Result<Self, ModelError> {
        Self::new(task_id, instances.into_iter().map(Constraint::symbolic))
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn instances(&self) -> impl Iterator<Item = &InformationInstance> {
        self.constraints.iter().map(|c| &c.instance)
    }

    pub fn contains(&self, instance: &InformationInstance) -> bool {
        self.instances().any(|i| i == instance)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Replaces constraint values, keeping instances and order.
    pub fn with_values(&self, values: &[Option<Vec<f64>>]) -> Self {
        let constraints = self
            .constraints
            .iter()
            .zip(values)
            .map(|(c, v)| Constraint {
                instance: c.instance.clone(),
                value: v.clone(),
            })
            .collect();
        ConstraintSet {
            task_id: self.task_id.clone(),
            constraints,
        }
    }
}

/// Two tasks constraining the same instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub first_task: String,
    pub second_task: String,
    pub instance: InformationInstance,
}

/// All tasks active at once, each with independently chosen values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MtmrSetting {
    tasks: Vec<ConstraintSet>,
    referents: Vec<Referent>,
}

impl MtmrSetting {
    pub fn new(
        referents: impl IntoIterator<Item = Referent>,
        tasks: impl IntoIterator<Item = ConstraintSet>,
    ) -> Result<Self, ModelError> {
        let referents: Vec<Referent> = referents.into_iter().collect();
        let mut ids = HashSet::new();
        for r in &referents {
            if r.id.is_empty() {
                return Err(ModelError::EmptyReferentId);
            }
            if !ids.insert(r.id.as_str()) {
                return Err(ModelError::DuplicateReferent(r.id.clone()));
            }
        }
        let tasks: Vec<ConstraintSet> = tasks.into_iter().collect();
        for task in &tasks {
            for inst in task.instances() {
                if let Some(missing) = inst.referents().iter().find(|r| !ids.contains(r.as_str())) {
                    return Err(ModelError::UnknownReferent {
                        task: task.task_id.clone(),
                        referent: missing.clone(),
                    });
                }
            }
        }
        Ok(MtmrSetting { tasks, referents })
    }

    pub fn tasks(&self) -> &[ConstraintSet] {
        &self.tasks
    }

    pub fn referents(&self) -> &[Referent] {
        &self.referents
    }

    pub fn referent(&self, id: &str) -> Option<&Referent> {
        self.referents.iter().find(|r| r.id == id)
    }

    /// Union of all task instances, in first-appearance order.
    pub fn instances(&self) -> Vec<InformationInstance> {
        let mut seen = HashSet::new();
        self.tasks
            .iter()
            .flat_map(|t| t.instances())
            .filter(|i| seen.insert(*i))
            .cloned()
            .collect()
    }

    pub fn instance_set(&self) -> BTreeSet<InformationInstance> {
        self.tasks.iter().flat_map(|t| t.instances()).cloned().collect()
    }

    pub fn total_constraints(&self) -> usize {
        self.tasks.iter().map(ConstraintSet::len).sum()
    }

    /// Adds a task, growing the referent universe with any new referents.
    pub fn push_task(&mut self, task: ConstraintSet, referents: &[Referent]) {
        for r in referents {
            if !self.referents.iter().any(|x| x.id == r.id) {
                self.referents.push(r.clone());
            }
        }
        self.tasks.push(task);
    }

    pub fn with_task(&self, task: ConstraintSet, referents: &[Referent]) -> Self {
        let mut next = self.clone();
        next.push_task(task, referents);
        next
    }

    /// Returns the first pair of tasks sharing an instance, scanning tasks in
    /// order and each task's constraints in order.
    pub fn detect_overlap(&self) -> Option<Overlap> {
        for (i, a) in self.tasks.iter().enumerate() {
            for inst in a.instances() {
                if let Some(b) = self.tasks[i + 1..].iter().find(|b| b.contains(inst)) {
                    return Some(Overlap {
                        first_task: a.task_id.clone(),
                        second_task: b.task_id.clone(),
                        instance: inst.clone(),
                    });
                }
            }
        }
        None
    }
}
