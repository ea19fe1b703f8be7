//! Semi-naive forward chaining over interned facts.
//!
//! Referent ids are interned in sorted order, so sorting interned ids agrees
//! with sorting names and symmetric positions canonicalize identically on
//! both sides of the boundary.

use std::collections::HashMap;

use smallvec::SmallVec;

use super::{CompiledPattern, CompiledRule, RuleSet, MAX_VARIABLES};
use crate::model::InformationInstance;

pub(crate) type Sym = u32;

const UNBOUND: Sym = Sym::MAX;
// Index slot used for every symmetric position of a type.
const SYM_SLOT: u8 = u8::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Fact {
    pub ty: u16,
    pub refs: SmallVec<[Sym; 4]>,
}

/// Append-only fact store. Ids are dense and assigned in insertion order,
/// so "facts added before round k" is always an id prefix.
#[derive(Debug, Clone)]
pub(crate) struct FactTable {
    facts: Vec<Fact>,
    ids: HashMap<Fact, u32>,
    by_type: Vec<Vec<u32>>,
    by_ref: HashMap<(u16, u8, Sym), Vec<u32>>,
    sym_masks: Vec<u32>,
}

impl FactTable {
    pub fn for_rules(rules: &RuleSet) -> Self {
        let sym_masks = rules
            .types()
            .iter()
            .map(|t| {
                if t.symmetric.len() < 2 {
                    0
                } else {
                    t.symmetric.iter().fold(0u32, |m, &p| m | (1 << p))
                }
            })
            .collect::<Vec<_>>();
        FactTable {
            facts: Vec::new(),
            ids: HashMap::new(),
            by_type: vec![Vec::new(); sym_masks.len()],
            by_ref: HashMap::new(),
            sym_masks,
        }
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn get(&self, id: u32) -> &Fact {
        &self.facts[id as usize]
    }

    pub fn id(&self, fact: &Fact) -> Option<u32> {
        self.ids.get(fact).copied()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.ids.contains_key(fact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Returns the id and whether the fact was new.
    pub fn insert(&mut self, fact: Fact) -> (u32, bool) {
        if let Some(&id) = self.ids.get(&fact) {
            return (id, false);
        }
        let id = self.facts.len() as u32;
        let mask = self.sym_masks[fact.ty as usize];
        self.by_type[fact.ty as usize].push(id);
        for (slot, &r) in fact.refs.iter().enumerate() {
            let key_slot = if mask & (1 << slot) != 0 { SYM_SLOT } else { slot as u8 };
            self.by_ref.entry((fact.ty, key_slot, r)).or_default().push(id);
        }
        self.ids.insert(fact.clone(), id);
        self.facts.push(fact);
        (id, true)
    }

    fn is_sym_slot(&self, ty: u16, slot: usize) -> bool {
        self.sym_masks[ty as usize] & (1 << slot) != 0
    }
}

/// Per-query interning of referents against a shared rule set.
pub(crate) struct Workspace<'r> {
    rules: &'r RuleSet,
    names: Vec<String>,
    ids: HashMap<String, Sym>,
}

struct Join<'a> {
    rule: &'a CompiledRule,
    pivot: usize,
    old_end: u32,
    new_end: u32,
    binding: [Sym; MAX_VARIABLES],
    premises: [u32; MAX_VARIABLES],
}

impl<'r> Workspace<'r> {
    pub fn new<'a>(rules: &'r RuleSet, instances: impl IntoIterator<Item = &'a InformationInstance>) -> Self {
        let mut names: Vec<String> = instances
            .into_iter()
            .flat_map(|i| i.referents().iter().cloned())
            .collect();
        names.sort_unstable();
        names.dedup();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as Sym))
            .collect();
        Workspace { rules, names, ids }
    }

    pub fn fact(&self, inst: &InformationInstance) -> Option<Fact> {
        let ty = self.rules.type_index(inst.type_name())?;
        let itype = self.rules.types().by_index(ty as usize);
        if itype.arity != inst.referents().len() {
            return None;
        }
        let mut refs: SmallVec<[Sym; 4]> = SmallVec::new();
        for r in inst.referents() {
            refs.push(*self.ids.get(r)?);
        }
        itype.canonicalize(&mut refs);
        Some(Fact { ty, refs })
    }

    pub fn instance(&self, fact: &Fact) -> InformationInstance {
        let itype = self.rules.types().by_index(fact.ty as usize);
        InformationInstance::new(
            itype.name.clone(),
            fact.refs.iter().map(|&r| self.names[r as usize].clone()),
        )
    }

    pub fn table(&self) -> FactTable {
        FactTable::for_rules(self.rules)
    }

    pub fn closure(&self, seeds: &[Fact]) -> FactTable {
        let mut table = self.table();
        for f in seeds {
            table.insert(f.clone());
        }
        self.extend(&mut table, 0);
        table
    }

    /// Closes `table` under the rules, given that facts below `closed_end`
    /// are already closed among themselves.
    pub fn extend(&self, table: &mut FactTable, closed_end: u32) {
        let mut old_end = closed_end;
        loop {
            let new_end = table.len() as u32;
            if old_end == new_end {
                break;
            }
            let mut fresh = Vec::new();
            self.for_each_firing(table, old_end, new_end, |_, _, rhs| {
                if !table.contains(&rhs) {
                    fresh.push(rhs);
                }
            });
            for f in fresh {
                table.insert(f);
            }
            old_end = new_end;
        }
    }

    /// Calls `emit(rule, premises, head)` for every ground rule whose
    /// premises all have ids below `new_end` and at least one at or above
    /// `old_end`. Each such ground firing is reported once per distinct
    /// variable binding, in rule order then pivot order then id order.
    pub fn for_each_firing(
        &self,
        table: &FactTable,
        old_end: u32,
        new_end: u32,
        mut emit: impl FnMut(usize, &[u32], Fact),
    ) {
        for (ri, rule) in self.rules.compiled().iter().enumerate() {
            for pivot in 0..rule.lhs.len() {
                let pat = &rule.lhs[pivot];
                let ids = &table.by_type[pat.ty as usize];
                let start = ids.partition_point(|&id| id < old_end);
                let mut join = Join {
                    rule,
                    pivot,
                    old_end,
                    new_end,
                    binding: [UNBOUND; MAX_VARIABLES],
                    premises: [0; MAX_VARIABLES],
                };
                for &id in &ids[start..] {
                    if id >= new_end {
                        break;
                    }
                    self.try_fact(table, &mut join, pivot, id, &mut |j| {
                        self.advance(table, j, 0, ri, &mut emit)
                    });
                }
            }
        }
    }

    // Unifies lhs[pos] with fact `id` under every symmetry of its type and
    // calls `next` for each consistent extension of the binding.
    fn try_fact(
        &self,
        table: &FactTable,
        join: &mut Join<'_>,
        pos: usize,
        id: u32,
        next: &mut dyn FnMut(&mut Join<'_>),
    ) {
        let pat: &CompiledPattern = &join.rule.lhs[pos];
        let fact = table.get(id);
        let saved = join.binding;
        for perm in self.rules.symmetries(pat.ty) {
            if unify(pat, fact, perm, &mut join.binding, join.rule.nvars) {
                join.premises[pos] = id;
                next(join);
            }
            join.binding = saved;
        }
    }

    fn advance(
        &self,
        table: &FactTable,
        join: &mut Join<'_>,
        pos: usize,
        ri: usize,
        emit: &mut dyn FnMut(usize, &[u32], Fact),
    ) {
        let rule = join.rule;
        let k = rule.lhs.len();
        if pos == k {
            let rhs = self.bind(&rule.rhs, &join.binding);
            let premises = &join.premises[..k];
            if premises.iter().any(|&p| *table.get(p) == rhs) {
                return;
            }
            for i in 1..k {
                if premises[..i].contains(&premises[i]) {
                    return;
                }
            }
            emit(ri, premises, rhs);
            return;
        }
        if pos == join.pivot {
            return self.advance(table, join, pos + 1, ri, emit);
        }
        let limit = if pos < join.pivot { join.old_end } else { join.new_end };
        let pat = &rule.lhs[pos];

        if pat.vars.iter().all(|&v| join.binding[v as usize] != UNBOUND) {
            let fact = self.bind(pat, &join.binding);
            if let Some(id) = table.id(&fact) {
                if id < limit {
                    join.premises[pos] = id;
                    self.advance(table, join, pos + 1, ri, emit);
                }
            }
            return;
        }

        let candidates: &[u32] = {
            let mut best: Option<&[u32]> = None;
            for (slot, &v) in pat.vars.iter().enumerate() {
                let r = join.binding[v as usize];
                if r == UNBOUND {
                    continue;
                }
                let key_slot = if table.is_sym_slot(pat.ty, slot) { SYM_SLOT } else { slot as u8 };
                let list = table
                    .by_ref
                    .get(&(pat.ty, key_slot, r))
                    .map_or(&[][..], Vec::as_slice);
                if best.is_none_or(|b| list.len() < b.len()) {
                    best = Some(list);
                }
            }
            best.unwrap_or(&table.by_type[pat.ty as usize])
        };
        for &id in candidates {
            if id >= limit {
                break;
            }
            self.try_fact(table, join, pos, id, &mut |j| self.advance(table, j, pos + 1, ri, emit));
        }
    }

    fn bind(&self, pat: &CompiledPattern, binding: &[Sym; MAX_VARIABLES]) -> Fact {
        let mut refs: SmallVec<[Sym; 4]> = pat.vars.iter().map(|&v| binding[v as usize]).collect();
        self.rules
            .types()
            .by_index(pat.ty as usize)
            .canonicalize(&mut refs);
        Fact { ty: pat.ty, refs }
    }
}

fn unify(
    pat: &CompiledPattern,
    fact: &Fact,
    perm: &[u8],
    binding: &mut [Sym; MAX_VARIABLES],
    nvars: usize,
) -> bool {
    if pat.ty != fact.ty {
        return false;
    }
    for (slot, &v) in pat.vars.iter().enumerate() {
        let value = fact.refs[perm[slot] as usize];
        let v = v as usize;
        match binding[v] {
            UNBOUND => {
                // substitutions are injective
                if binding[..nvars].contains(&value) {
                    return false;
                }
                binding[v] = value;
            }
            b if b != value => return false,
            _ => {}
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InformationInstance;
    use std::collections::BTreeSet;

    fn inst(s: &str) -> InformationInstance {
        s.parse().unwrap()
    }

    #[test]
    fn symmetric_types_intern_canonically() {
        let rules = RuleSet::default_rules();
        let a = inst("C3(v3,v1,v2)");
        let b = inst("C3(v1,v2,v3)");
        let ws = Workspace::new(&rules, [&a, &b]);
        assert_eq!(ws.fact(&a), ws.fact(&b));
        assert_eq!(ws.instance(&ws.fact(&a).unwrap()), b);
    }

    #[test]
    fn semi_naive_matches_naive_iteration() {
        // Naive fixpoint: refire everything until nothing changes.
        let rules = RuleSet::default_rules();
        let seeds = [inst("R(a,t)"), inst("G(t)"), inst("C2(a,b)"), inst("M(a,b,c)")];
        let ws = Workspace::new(&rules, seeds.iter());
        let facts: Vec<Fact> = seeds.iter().map(|i| ws.fact(i).unwrap()).collect();
        let semi = ws.closure(&facts);

        let mut naive = ws.table();
        for f in &facts {
            naive.insert(f.clone());
        }
        loop {
            let mut fresh = Vec::new();
            ws.for_each_firing(&naive, 0, naive.len() as u32, |_, _, rhs| fresh.push(rhs));
            let before = naive.len();
            for f in fresh {
                naive.insert(f);
            }
            if naive.len() == before {
                break;
            }
        }
        let a: BTreeSet<&Fact> = semi.iter().collect();
        let b: BTreeSet<&Fact> = naive.iter().collect();
        assert_eq!(a, b);
    }
}
