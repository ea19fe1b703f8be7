//! Linear inference rules over information types.
//!
//! A rule file declares types and then lists rules, one per line:
//!
//! ```text
//! type G/1 dim 2
//! type R/2 dim 2
//! G(Y) <- G(X) + R(Y,X)
//! R(X,Y) <- -1*R(Y,X)
//! ```
//!
//! Each rule states that the value of the head equals the weighted sum of
//! the values of its premises (plus an optional constant offset). Rules must
//! be [saturated](RuleSet::saturate) before they are used for inference.

pub(crate) mod engine;
mod parse;
mod saturate;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{InformationInstance, InformationType, ModelError, Referent, TypeTable};

pub use parse::parse_rules;

/// Upper bound on distinct variables per rule.
pub const MAX_VARIABLES: usize = 8;

/// The shipped rule set: the three relative/global position rules plus
/// centroid and communication-maintenance rules.
pub const DEFAULT_RULES: &str = include_str!("../../rules/default.rules");

/// Only the three relative/global position rules.
pub const POSITION_RULES: &str = include_str!("../../rules/table1.rules");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{name}` takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("zero coefficient on `{0}`")]
    ZeroCoefficient(String),
    #[error("pattern `{0}` appears more than once")]
    DuplicatePattern(String),
    #[error("variable `{0}` in the head does not appear in any premise")]
    FreeVariable(String),
    #[error("pattern `{0}` repeats a variable")]
    RepeatedVariable(String),
    #[error("rule mixes value dimensions")]
    DimensionMismatch,
    #[error("rule uses more than {MAX_VARIABLES} variables")]
    TooManyVariables,
    #[error("rule has no premises")]
    NoPremises,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Rule-file error with a 1-based source position (0 when not tied to a line).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct RuleError {
    pub line: usize,
    pub column: usize,
    pub kind: RuleErrorKind,
}

impl RuleError {
    pub(crate) fn at(line: usize, column: usize, kind: RuleErrorKind) -> Self {
        RuleError { line, column, kind }
    }
}

impl From<RuleErrorKind> for RuleError {
    fn from(kind: RuleErrorKind) -> Self {
        RuleError::at(0, 0, kind)
    }
}

/// `F(X, Y, ...)` with variables in the argument slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RulePattern {
    pub type_name: String,
    pub slots: Vec<String>,
}

impl RulePattern {
    pub fn new<I, S>(type_name: impl Into<String>, slots: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RulePattern {
            type_name: type_name.into(),
            slots: slots.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for RulePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.type_name, self.slots.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub pattern: RulePattern,
}

/// `head = sum(coefficient * premise) + offset`, componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRule {
    pub lhs: Vec<Term>,
    pub rhs: RulePattern,
    pub offset: f64,
}

impl InferenceRule {
    pub fn variables(&self) -> BTreeSet<&str> {
        self.lhs
            .iter()
            .flat_map(|t| t.pattern.slots.iter())
            .chain(self.rhs.slots.iter())
            .map(String::as_str)
            .collect()
    }
}

impl fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <-", self.rhs)?;
        for (i, term) in self.lhs.iter().enumerate() {
            let c = term.coefficient;
            match (i, c < 0.0) {
                (0, _) => write!(f, " {}*{}", c, term.pattern)?,
                (_, false) => write!(f, " + {}*{}", c, term.pattern)?,
                (_, true) => write!(f, " - {}*{}", -c, term.pattern)?,
            }
        }
        if self.offset > 0.0 {
            write!(f, " + {}", self.offset)?;
        } else if self.offset < 0.0 {
            write!(f, " - {}", -self.offset)?;
        }
        Ok(())
    }
}

/// A rule with every variable replaced by a referent id.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundRule {
    pub lhs: Vec<(f64, InformationInstance)>,
    pub rhs: InformationInstance,
    pub offset: f64,
}

impl GroundRule {
    pub fn lhs_instances(&self) -> impl Iterator<Item = &InformationInstance> {
        self.lhs.iter().map(|(_, i)| i)
    }

    /// Value of the head given premise values (aligned with `lhs`).
    pub fn evaluate(&self, premises: &[Vec<f64>]) -> Vec<f64> {
        let dim = premises.first().map_or(0, Vec::len);
        (0..dim)
            .map(|k| {
                self.lhs
                    .iter()
                    .zip(premises)
                    .map(|((c, _), v)| c * v[k])
                    .sum::<f64>()
                    + self.offset
            })
            .collect()
    }
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self.lhs.iter().map(|(c, i)| format!("{c}*{i}")).collect();
        write!(f, "{} <- {}", self.rhs, lhs.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CompiledPattern {
    pub ty: u16,
    pub vars: SmallVec<[u8; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CompiledRule {
    pub lhs: Vec<CompiledPattern>,
    pub rhs: CompiledPattern,
    pub nvars: usize,
}

/// A typed collection of rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    types: TypeTable,
    rules: Vec<InferenceRule>,
    saturated: bool,
    compiled: Vec<CompiledRule>,
    // Per type, every way of reordering a stored instance's referents that
    // leaves it the same instance. Identity first.
    symmetries: Vec<Vec<SmallVec<[u8; 4]>>>,
}

impl RuleSet {
    /// Validates and compiles rules. The result is not saturated.
    pub fn new(types: TypeTable, rules: Vec<InferenceRule>) -> Result<Self, RuleError> {
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in &rules {
            compiled.push(compile(&types, rule)?);
        }
        let symmetries = types.iter().map(symmetry_permutations).collect();
        Ok(RuleSet {
            types,
            rules,
            saturated: false,
            compiled,
            symmetries,
        })
    }

    pub fn parse(text: &str) -> Result<Self, RuleError> {
        parse_rules(text)
    }

    /// Parses and saturates the shipped default rules.
    pub fn default_rules() -> Self {
        parse_rules(DEFAULT_RULES)
            .expect("default rule file parses")
            .saturate()
    }

    /// Parses and saturates the three position rules only.
    pub fn position_rules() -> Self {
        parse_rules(POSITION_RULES)
            .expect("position rule file parses")
            .saturate()
    }

    pub fn types(&self) -> &TypeTable {
        &self.types
    }

    pub fn rules(&self) -> &[InferenceRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Adds every algebraically solved variant of every rule, deduplicating
    /// rules that are equal up to variable renaming.
    pub fn saturate(&self) -> RuleSet {
        saturate::saturate(self)
    }

    /// Keys identifying each rule up to variable renaming and premise order.
    pub fn canonical_keys(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .map(|r| saturate::canonical_key(&self.types, r))
            .collect()
    }

    pub(crate) fn compiled(&self) -> &[CompiledRule] {
        &self.compiled
    }

    pub(crate) fn symmetries(&self, ty: u16) -> &[SmallVec<[u8; 4]>] {
        &self.symmetries[ty as usize]
    }

    pub(crate) fn type_index(&self, name: &str) -> Option<u16> {
        self.types.position(name).map(|i| i as u16)
    }

    pub(crate) fn assert_saturated(&self) {
        assert!(
            self.saturated,
            "inference requires a saturated rule set; call RuleSet::saturate first"
        );
    }

    /// Least set containing `seed` and closed under every ground rule.
    ///
    /// Derivations never introduce referents, so the referent universe is
    /// the set of referents appearing in `seed`.
    pub fn closure<'a>(
        &self,
        seed: impl IntoIterator<Item = &'a InformationInstance>,
    ) -> BTreeSet<InformationInstance> {
        self.assert_saturated();
        let seed: Vec<&InformationInstance> = seed.into_iter().collect();
        let ws = engine::Workspace::new(self, seed.iter().copied());
        let facts: Vec<engine::Fact> = seed.iter().filter_map(|i| ws.fact(i)).collect();
        let table = ws.closure(&facts);
        // Instances of unknown types cannot take part in any rule.
        let mut out: BTreeSet<InformationInstance> = table.iter().map(|f| ws.instance(f)).collect();
        out.extend(seed.into_iter().cloned());
        out
    }

    /// Whether the values of `premises` determine the value of `query`.
    pub fn infers<'a>(
        &self,
        premises: impl IntoIterator<Item = &'a InformationInstance>,
        query: &InformationInstance,
    ) -> bool {
        let premises: Vec<&InformationInstance> = premises.into_iter().collect();
        if premises.contains(&query) {
            return true;
        }
        self.closure(premises).contains(query)
    }

    /// Every ground rule over `universe`, under injective substitutions.
    /// Rules whose head coincides with a premise are dropped.
    pub fn instantiate(&self, universe: &[Referent]) -> Vec<GroundRule> {
        let ids: Vec<&str> = {
            let mut v: Vec<&str> = universe.iter().map(|r| r.id.as_str()).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut out = Vec::new();
        for rule in &self.rules {
            let vars: Vec<&str> = rule.variables().into_iter().collect();
            if vars.len() > ids.len() {
                continue;
            }
            let mut assignment: Vec<usize> = Vec::with_capacity(vars.len());
            let mut used = vec![false; ids.len()];
            enumerate_injections(vars.len(), ids.len(), &mut assignment, &mut used, &mut |a| {
                let bind = |p: &RulePattern| -> InformationInstance {
                    let mut refs: Vec<String> = p
                        .slots
                        .iter()
                        .map(|s| {
                            let v = vars.iter().position(|x| x == s).unwrap();
                            ids[a[v]].to_string()
                        })
                        .collect();
                    self.types.get(&p.type_name).unwrap().canonicalize(&mut refs);
                    InformationInstance::new(p.type_name.clone(), refs)
                };
                let rhs = bind(&rule.rhs);
                let lhs: Vec<(f64, InformationInstance)> =
                    rule.lhs.iter().map(|t| (t.coefficient, bind(&t.pattern))).collect();
                if lhs.iter().any(|(_, i)| *i == rhs) {
                    return;
                }
                let distinct: HashSet<&InformationInstance> = lhs.iter().map(|(_, i)| i).collect();
                if distinct.len() != lhs.len() {
                    return;
                }
                out.push(GroundRule {
                    lhs,
                    rhs,
                    offset: rule.offset,
                });
            });
        }
        out
    }

    /// Ground rules whose premises and head all lie in `instances`.
    pub fn ground_rules_within<'a>(
        &self,
        instances: impl IntoIterator<Item = &'a InformationInstance>,
    ) -> Vec<GroundRule> {
        let instances: Vec<&InformationInstance> = instances.into_iter().collect();
        let ws = engine::Workspace::new(self, instances.iter().copied());
        let mut table = ws.table();
        for i in &instances {
            if let Some(f) = ws.fact(i) {
                table.insert(f);
            }
        }
        let mut out = Vec::new();
        ws.for_each_firing(&table, 0, table.len() as u32, |rule, premises, rhs| {
            if table.id(&rhs).is_none() {
                return;
            }
            let src = &self.rules[rule];
            out.push(GroundRule {
                lhs: premises
                    .iter()
                    .zip(&src.lhs)
                    .map(|(&p, t)| (t.coefficient, ws.instance(table.get(p))))
                    .collect(),
                rhs: ws.instance(&rhs),
                offset: src.offset,
            });
        });
        out
    }
}

fn enumerate_injections(
    k: usize,
    n: usize,
    assignment: &mut Vec<usize>,
    used: &mut [bool],
    f: &mut dyn FnMut(&[usize]),
) {
    if assignment.len() == k {
        f(assignment);
        return;
    }
    for i in 0..n {
        if !used[i] {
            used[i] = true;
            assignment.push(i);
            enumerate_injections(k, n, assignment, used, f);
            assignment.pop();
            used[i] = false;
        }
    }
}

fn symmetry_permutations(t: &InformationType) -> Vec<SmallVec<[u8; 4]>> {
    let identity: SmallVec<[u8; 4]> = (0..t.arity as u8).collect();
    if t.symmetric.len() < 2 {
        return vec![identity];
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = Vec::new();
    let mut used = vec![false; t.symmetric.len()];
    let n = t.symmetric.len();
    enumerate_injections(n, n, &mut perm, &mut used, &mut |p| {
        let mut mapping = identity.clone();
        for (i, &j) in p.iter().enumerate() {
            mapping[t.symmetric[i]] = t.symmetric[j] as u8;
        }
        out.push(mapping);
    });
    out
}

fn compile(types: &TypeTable, rule: &InferenceRule) -> Result<CompiledRule, RuleError> {
    if rule.lhs.is_empty() {
        return Err(RuleErrorKind::NoPremises.into());
    }
    let mut vars: Vec<&str> = Vec::new();
    let mut dims = HashSet::new();
    let mut lhs = Vec::with_capacity(rule.lhs.len());
    let mut seen = HashSet::new();
    for term in &rule.lhs {
        if term.coefficient == 0.0 || !term.coefficient.is_finite() {
            return Err(RuleErrorKind::ZeroCoefficient(term.pattern.to_string()).into());
        }
        if !seen.insert(&term.pattern) {
            return Err(RuleErrorKind::DuplicatePattern(term.pattern.to_string()).into());
        }
        lhs.push(compile_pattern(types, &term.pattern, &mut vars, &mut dims, false)?);
    }
    if seen.contains(&rule.rhs) {
        return Err(RuleErrorKind::DuplicatePattern(rule.rhs.to_string()).into());
    }
    let rhs = compile_pattern(types, &rule.rhs, &mut vars, &mut dims, true)?;
    if dims.len() > 1 {
        return Err(RuleErrorKind::DimensionMismatch.into());
    }
    Ok(CompiledRule {
        lhs,
        rhs,
        nvars: vars.len(),
    })
}

fn compile_pattern<'r>(
    types: &TypeTable,
    p: &'r RulePattern,
    vars: &mut Vec<&'r str>,
    dims: &mut HashSet<usize>,
    head: bool,
) -> Result<CompiledPattern, RuleError> {
    let ty = types
        .position(&p.type_name)
        .ok_or_else(|| RuleErrorKind::UnknownType(p.type_name.clone()))?;
    let itype = types.by_index(ty);
    if itype.arity != p.slots.len() {
        return Err(RuleErrorKind::Arity {
            name: p.type_name.clone(),
            expected: itype.arity,
            found: p.slots.len(),
        }
        .into());
    }
    let distinct: HashSet<&String> = p.slots.iter().collect();
    if distinct.len() != p.slots.len() {
        return Err(RuleErrorKind::RepeatedVariable(p.to_string()).into());
    }
    dims.insert(itype.value_dim);
    let mut out = SmallVec::new();
    for s in &p.slots {
        let idx = match vars.iter().position(|v| *v == s.as_str()) {
            Some(i) => i,
            None if head => return Err(RuleErrorKind::FreeVariable(s.clone()).into()),
            None => {
                vars.push(s.as_str());
                vars.len() - 1
            }
        };
        if idx >= MAX_VARIABLES {
            return Err(RuleErrorKind::TooManyVariables.into());
        }
        out.push(idx as u8);
    }
    Ok(CompiledPattern {
        ty: ty as u16,
        vars: out,
    })
}
