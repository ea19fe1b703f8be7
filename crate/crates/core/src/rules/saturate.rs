use std::collections::{HashMap, HashSet};

use super::{InferenceRule, RulePattern, RuleSet, Term};
use crate::model::TypeTable;

// Above this many presentations per rule the key falls back to the
// identity presentation; dedup then only misses exotic renamings.
const MAX_PRESENTATIONS: usize = 20_000;

pub(super) fn saturate(rules: &RuleSet) -> RuleSet {
    let mut seen = HashSet::new();
    let mut out: Vec<InferenceRule> = Vec::new();
    let mut push = |rule: InferenceRule, out: &mut Vec<InferenceRule>| {
        if seen.insert(canonical_key(&rules.types, &rule)) {
            out.push(rule);
        }
    };
    for rule in &rules.rules {
        push(rule.clone(), &mut out);
    }
    for rule in &rules.rules {
        for k in 0..rule.lhs.len() {
            push(solve_for(rule, k), &mut out);
        }
    }
    let mut saturated =
        RuleSet::new(rules.types.clone(), out).expect("solved variants of valid rules are valid");
    saturated.saturated = true;
    saturated
}

/// Rewrites `head = sum c_i L_i + b` as `L_k = head / c_k - sum_{i != k} (c_i / c_k) L_i - b / c_k`.
pub(super) fn solve_for(rule: &InferenceRule, k: usize) -> InferenceRule {
    let ck = rule.lhs[k].coefficient;
    let mut lhs = vec![Term {
        coefficient: 1.0 / ck,
        pattern: rule.rhs.clone(),
    }];
    for (i, t) in rule.lhs.iter().enumerate() {
        if i != k {
            lhs.push(Term {
                coefficient: -t.coefficient / ck,
                pattern: t.pattern.clone(),
            });
        }
    }
    InferenceRule {
        lhs,
        rhs: rule.lhs[k].pattern.clone(),
        offset: if rule.offset == 0.0 { 0.0 } else { -rule.offset / ck },
    }
}

fn coefficient_key(c: f64) -> String {
    let c = if c == 0.0 { 0.0 } else { c };
    format!("{c:.9e}")
}

/// Smallest rendering of the rule over all premise orders, all symmetric
/// argument orders, and first-appearance variable renaming.
pub(super) fn canonical_key(types: &TypeTable, rule: &InferenceRule) -> String {
    let sym_orders = |p: &RulePattern| -> Vec<Vec<usize>> {
        let arity = p.slots.len();
        let sym = types
            .get(&p.type_name)
            .map(|t| t.symmetric.clone())
            .unwrap_or_default();
        let mut orders = Vec::new();
        permute(&sym, &mut |perm| {
            let mut order: Vec<usize> = (0..arity).collect();
            for (i, &j) in sym.iter().zip(perm) {
                order[*i] = j;
            }
            orders.push(order);
        });
        orders
    };
    let rhs_orders = sym_orders(&rule.rhs);
    let lhs_orders: Vec<Vec<Vec<usize>>> = rule.lhs.iter().map(|t| sym_orders(&t.pattern)).collect();

    let k = rule.lhs.len();
    let premise_orders: usize = (1..=k).product();
    let total = lhs_orders
        .iter()
        .fold(rhs_orders.len() * premise_orders, |acc, o| acc.saturating_mul(o.len()));

    let mut best: Option<String> = None;
    let mut consider = |s: String| {
        if best.as_ref().is_none_or(|b| s < *b) {
            best = Some(s);
        }
    };
    let idx: Vec<usize> = (0..k).collect();
    if total > MAX_PRESENTATIONS {
        let identity: Vec<Vec<usize>> = lhs_orders.iter().map(|o| o[0].clone()).collect();
        consider(render(rule, &idx, &rhs_orders[0], &identity));
    } else {
        permute(&idx, &mut |premises| {
            for rhs_order in &rhs_orders {
                let mut choice = vec![0usize; k];
                loop {
                    let orders: Vec<Vec<usize>> = premises
                        .iter()
                        .zip(&choice)
                        .map(|(&p, &c)| lhs_orders[p][c].clone())
                        .collect();
                    consider(render(rule, premises, rhs_order, &orders));
                    // odometer over symmetric orders of the premises
                    let mut i = 0;
                    while i < k {
                        choice[i] += 1;
                        if choice[i] < lhs_orders[premises[i]].len() {
                            break;
                        }
                        choice[i] = 0;
                        i += 1;
                    }
                    if i == k {
                        break;
                    }
                }
            }
        });
    }
    best.unwrap_or_default()
}

fn render(rule: &InferenceRule, premises: &[usize], rhs_order: &[usize], orders: &[Vec<usize>]) -> String {
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut pattern = |p: &RulePattern, order: &[usize]| -> String {
        let slots: Vec<String> = order
            .iter()
            .map(|&i| {
                let next = names.len();
                format!("V{}", names.entry(p.slots[i].clone()).or_insert(next))
            })
            .collect();
        format!("{}({})", p.type_name, slots.join(","))
    };
    let mut s = pattern(&rule.rhs, rhs_order);
    s.push_str(" <-");
    for (&p, order) in premises.iter().zip(orders) {
        let t = &rule.lhs[p];
        s.push(' ');
        s.push_str(&coefficient_key(t.coefficient));
        s.push('*');
        s.push_str(&pattern(&t.pattern, order));
    }
    s.push_str(" ; ");
    s.push_str(&coefficient_key(rule.offset));
    s
}

fn permute(items: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn go(rest: &mut Vec<usize>, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if rest.is_empty() {
            f(acc);
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            acc.push(x);
            go(rest, acc, f);
            acc.pop();
            rest.insert(i, x);
        }
    }
    go(&mut items.to_vec(), &mut Vec::new(), f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;

    const TYPES: &str = "type G/1 dim 2\ntype R/2 dim 2\ntype C2/2 dim 2 sym\n";

    fn saturated(rule: &str) -> Vec<String> {
        parse_rules(&format!("{TYPES}{rule}\n"))
            .unwrap()
            .saturate()
            .rules()
            .iter()
            .map(|r| r.to_string())
            .collect()
    }

    #[test]
    fn global_position_variants() {
        let rules = saturated("G(Y) <- G(X) + R(Y,X)");
        assert_eq!(
            rules,
            [
                "G(Y) <- 1*G(X) + 1*R(Y,X)",
                "G(X) <- 1*G(Y) - 1*R(Y,X)",
                "R(Y,X) <- 1*G(Y) - 1*G(X)",
            ]
        );
    }

    #[test]
    fn antisymmetry_is_self_symmetric() {
        assert_eq!(saturated("R(X,Y) <- -1*R(Y,X)"), ["R(X,Y) <- -1*R(Y,X)"]);
    }

    #[test]
    fn symmetric_heads_collapse() {
        // Solving the centroid rule for either premise gives the same rule
        // up to renaming, because C2's arguments are unordered.
        let rules = saturated("C2(X,Y) <- 0.5*G(X) + 0.5*G(Y)");
        assert_eq!(rules.len(), 2, "{rules:?}");
    }

    #[test]
    fn saturation_is_idempotent() {
        let once = RuleSet::default_rules();
        let twice = once.saturate();
        assert_eq!(once.canonical_keys(), twice.canonical_keys());
        assert_eq!(once.len(), twice.len());
        assert!(twice.is_saturated());
    }

    #[test]
    fn offsets_are_solved_too() {
        let rules = saturated("R(X,Y) <- 2*R(Y,X) + 4");
        assert_eq!(rules[1], "R(Y,X) <- 0.5*R(X,Y) - 2");
    }
}
