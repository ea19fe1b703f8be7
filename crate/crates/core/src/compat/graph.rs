use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use smallvec::SmallVec;

use super::{Canonical, Witness};
use crate::model::{InformationInstance, MtmrSetting};
use crate::rules::engine::{Fact, FactTable, Workspace};
use crate::rules::RuleSet;

/// A node of the inference graph. Leaves sit at level 0 and are their own
/// footprint; derived nodes keep the premises of their first derivation.
#[derive(Debug, Clone)]
pub struct GraphNode {
    pub instance: InformationInstance,
    pub level: usize,
    pub premises: Vec<usize>,
    footprint: FixedBitSet,
}

impl GraphNode {
    /// Leaf indices (node ids at level 0) underlying this node.
    pub fn footprint_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.footprint.ones()
    }
}

#[derive(Debug, Clone, Default)]
pub struct InferenceGraph {
    nodes: Vec<GraphNode>,
    index: HashMap<InformationInstance, usize>,
    levels: Vec<Vec<usize>>,
    duplicates_skipped: usize,
    conflicts: Vec<Witness>,
}

impl InferenceGraph {
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &GraphNode {
        &self.nodes[id]
    }

    pub fn get(&self, instance: &InformationInstance) -> Option<&GraphNode> {
        self.index.get(instance).map(|&i| &self.nodes[i])
    }

    /// Node ids per level, leaves first.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn frontier(&self) -> &[usize] {
        self.levels.last().map_or(&[], Vec::as_slice)
    }

    pub fn footprint(&self, id: usize) -> BTreeSet<InformationInstance> {
        self.nodes[id]
            .footprint
            .ones()
            .map(|i| self.nodes[i].instance.clone())
            .collect()
    }

    /// Duplicate derivations that passed the intersection test.
    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    /// Failed intersection tests, in discovery order.
    pub fn conflicts(&self) -> &[Witness] {
        &self.conflicts
    }

    /// Graphviz rendering with one rank per level.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph inference {\n  rankdir=BT;\n  node [shape=box];\n");
        let conflicted: BTreeSet<&InformationInstance> = self.conflicts.iter().map(Witness::instance).collect();
        for (level, ids) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "  subgraph level{level} {{\n    rank=same;");
            for &id in ids {
                let inst = &self.nodes[id].instance;
                let style = if conflicted.contains(inst) { ", color=red" } else { "" };
                let _ = writeln!(out, "    n{id} [label=\"{inst}\"{style}];");
            }
            out.push_str("  }\n");
        }
        for (id, node) in self.nodes.iter().enumerate() {
            for &p in &node.premises {
                let _ = writeln!(out, "  n{p} -> n{id};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the full graph, recording every failed intersection test rather
/// than stopping at the first.
///
/// # Panics
///
/// As [`check_compat`](super::check_compat).
pub fn build_graph(setting: &MtmrSetting, rules: &RuleSet) -> InferenceGraph {
    rules.assert_saturated();
    build(&Canonical::new(setting, rules), rules, false)
}

struct Builder<'r> {
    ws: Workspace<'r>,
    table: FactTable,
    graph: InferenceGraph,
    leaves: usize,
    closures: HashMap<FixedBitSet, FactTable>,
}

impl Builder<'_> {
    fn leaf_set(&self, bits: &FixedBitSet) -> BTreeSet<InformationInstance> {
        bits.ones().map(|i| self.graph.nodes[i].instance.clone()).collect()
    }

    fn infers(&mut self, bits: &FixedBitSet, fact: &Fact) -> bool {
        if !self.closures.contains_key(bits) {
            let seeds: Vec<Fact> = bits.ones().map(|i| self.table.get(i as u32).clone()).collect();
            let closed = self.ws.closure(&seeds);
            self.closures.insert(bits.clone(), closed);
        }
        self.closures[bits].contains(fact)
    }
}

type Ids = SmallVec<[u32; 4]>;

pub(super) fn build(setting: &Canonical, rules: &RuleSet, stop_at_conflict: bool) -> InferenceGraph {
    let leaves = setting.instances();
    let ws = Workspace::new(rules, leaves.iter());
    let table = ws.table();
    let mut b = Builder {
        ws,
        table,
        graph: InferenceGraph::default(),
        leaves: leaves.len(),
        closures: HashMap::new(),
    };

    let mut level0 = Vec::new();
    for (i, leaf) in leaves.into_iter().enumerate() {
        let fact = b
            .ws
            .fact(&leaf)
            .unwrap_or_else(|| panic!("{leaf} uses a type the rule set does not declare"));
        b.table.insert(fact);
        let mut footprint = FixedBitSet::with_capacity(b.leaves);
        footprint.insert(i);
        b.graph.index.insert(leaf.clone(), i);
        b.graph.nodes.push(GraphNode {
            instance: leaf,
            level: 0,
            premises: Vec::new(),
            footprint,
        });
        level0.push(i);
    }
    if level0.is_empty() {
        return b.graph;
    }
    b.graph.levels.push(level0);

    let mut old_end = 0u32;
    loop {
        let new_end = b.table.len() as u32;
        if old_end == new_end {
            break;
        }
        // Derivations from older nodes go first, then rule order.
        let mut firings: Vec<(Ids, usize, Ids, Fact)> = Vec::new();
        b.ws.for_each_firing(&b.table, old_end, new_end, |rule, premises, rhs| {
            let mut order: Ids = premises.iter().copied().collect();
            order.sort_unstable();
            firings.push((order, rule, premises.iter().copied().collect(), rhs));
        });
        firings.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));

        let level = b.graph.levels.len();
        let mut added = Vec::new();
        for (_, _, premises, rhs) in firings {
            let mut candidate = FixedBitSet::with_capacity(b.leaves);
            for &p in &premises {
                candidate.union_with(&b.graph.nodes[p as usize].footprint);
            }
            let (id, new) = b.table.insert(rhs.clone());
            let id = id as usize;
            if new {
                let instance = b.ws.instance(&rhs);
                b.graph.index.insert(instance.clone(), id);
                b.graph.nodes.push(GraphNode {
                    instance,
                    level,
                    premises: premises.iter().map(|&p| p as usize).collect(),
                    footprint: candidate,
                });
                added.push(id);
                continue;
            }
            let existing = &b.graph.nodes[id].footprint;
            if existing.is_subset(&candidate) || candidate.is_subset(existing) {
                b.graph.duplicates_skipped += 1;
                continue;
            }
            let mut shared = existing.clone();
            shared.intersect_with(&candidate);
            if b.infers(&shared, &rhs) {
                b.graph.duplicates_skipped += 1;
                continue;
            }
            let witness = Witness::Inference {
                instance: b.graph.nodes[id].instance.clone(),
                existing: b.leaf_set(&b.graph.nodes[id].footprint),
                candidate: b.leaf_set(&candidate),
            };
            b.graph.conflicts.push(witness);
            if stop_at_conflict {
                if !added.is_empty() {
                    b.graph.levels.push(added);
                }
                return b.graph;
            }
        }
        if !added.is_empty() {
            b.graph.levels.push(added);
        }
        old_end = new_end;
    }
    b.graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::tests::setting;

    fn names(g: &InferenceGraph, ids: &[usize]) -> BTreeSet<String> {
        ids.iter().map(|&i| g.node(i).instance.to_string()).collect()
    }

    #[test]
    fn two_global_positions() {
        let g = build_graph(&setting(&[&["G(r1)", "G(r2)"]]), &RuleSet::position_rules());
        assert_eq!(g.levels().len(), 2);
        assert_eq!(
            names(&g, &g.levels()[1]),
            BTreeSet::from(["R(r1,r2)".to_string(), "R(r2,r1)".to_string()])
        );
        for &id in &g.levels()[1] {
            let fp: Vec<String> = g.footprint(id).iter().map(|i| i.to_string()).collect();
            assert_eq!(fp, ["G(r1)", "G(r2)"]);
        }
        assert_eq!(g.frontier(), g.levels()[1].as_slice());
        assert!(g.conflicts().is_empty());
    }

    #[test]
    fn lone_global_position() {
        let g = build_graph(&setting(&[&["G(t)"]]), &RuleSet::default_rules());
        assert_eq!(g.len(), 1);
        assert_eq!(g.levels().len(), 1);
    }

    #[test]
    fn compatible_duplicates_are_skipped() {
        // R(a,b) arrives again from {R(a,c), R(c,b)} paths whose footprints
        // overlap in a set that still determines it.
        let s = setting(&[&["R(a,c)", "R(b,c)", "G(c)"]]);
        let g = build_graph(&s, &RuleSet::position_rules());
        assert!(g.conflicts().is_empty());
        assert!(g.duplicates_skipped() > 0);
        let ga = g.get(&"G(a)".parse().unwrap()).unwrap();
        assert_eq!(ga.level, 1);
    }

    #[test]
    fn diagnostic_mode_runs_past_conflicts() {
        let s = setting(&[&["G(r1)", "G(r2)"], &["R(r1,r2)"]]);
        let rules = RuleSet::default_rules();
        let full = build_graph(&s, &rules);
        let stopped = build(&Canonical::new(&s, &rules), &rules, true);
        assert!(full.conflicts().len() > 1);
        assert_eq!(stopped.conflicts().len(), 1);
        assert!(full.len() >= stopped.len());
    }

    #[test]
    fn node_invariants_hold() {
        let s = setting(&[&["R(v1,t)", "G(t)"], &["C3(v1,v2,v3)"], &["M(v2,v3,v4)"]]);
        let g = build_graph(&s, &RuleSet::default_rules());
        for (id, node) in g.nodes().iter().enumerate() {
            if node.level == 0 {
                assert!(node.premises.is_empty());
                assert_eq!(node.footprint_ids().collect::<Vec<_>>(), [id]);
            } else {
                let mut union = FixedBitSet::with_capacity(g.levels()[0].len());
                for &p in &node.premises {
                    assert!(g.node(p).level < node.level);
                    union.union_with(&g.node(p).footprint);
                }
                assert_eq!(union, node.footprint);
            }
        }
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("C3(v1,v2,v3)"));
    }
}
