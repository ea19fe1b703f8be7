//! Planar positions from valued constraints.
//!
//! Unknowns are the pinned instances plus `G(r)` for every referent they
//! mention. Equations are the ground rules among those unknowns, one pin
//! per constraint and one pin per fixed referent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::compat::RESIDUAL_TOLERANCE;
use crate::conventions::{self, Point};
use crate::linalg;
use crate::model::{Constraint, InformationInstance, ModelError};
use crate::rules::RuleSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("constraint on `{0}` has no value")]
    MissingValue(String),
    #[error("constraint on `{instance}` has {found} value components, expected 2")]
    BadValue { instance: String, found: usize },
    #[error("fixed referent `{0}` is not mentioned by any constraint")]
    UnknownReferent(String),
    #[error("the rule set declares no global position type `G/1`")]
    NoGlobalPosition,
    #[error("constraints are inconsistent (max residual {max_residual:.3e})")]
    Inconsistent { max_residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    /// Every referent mentioned by a constraint.
    pub positions: BTreeMap<String, Point>,
    pub max_residual: f64,
}

/// Minimum-norm configuration satisfying every constraint.
pub fn solve_configuration(
    constraints: &[Constraint],
    fixed: &HashMap<String, Point>,
    rules: &RuleSet,
) -> Result<Configuration, SolveError> {
    solve_near(constraints, fixed, rules, None)
}

/// Like [`solve_configuration`], but returns the configuration closest to
/// `prior` instead of the one closest to the origin. Referents missing from
/// `prior` are pulled toward the origin.
pub fn solve_near(
    constraints: &[Constraint],
    fixed: &HashMap<String, Point>,
    rules: &RuleSet,
    prior: Option<&HashMap<String, Point>>,
) -> Result<Configuration, SolveError> {
    let g = rules.types().get("G").filter(|t| t.arity == 1).ok_or(SolveError::NoGlobalPosition)?;
    let g_name = g.name.clone();

    let mut pins: Vec<(InformationInstance, Point)> = Vec::with_capacity(constraints.len());
    for c in constraints {
        let inst = rules.types().resolve(&c.instance)?;
        let value = c
            .value
            .as_ref()
            .ok_or_else(|| SolveError::MissingValue(inst.to_string()))?;
        let &[x, y] = value.as_slice() else {
            return Err(SolveError::BadValue {
                instance: inst.to_string(),
                found: value.len(),
            });
        };
        pins.push((inst, [x, y]));
    }
    let referents: BTreeSet<&str> = pins
        .iter()
        .flat_map(|(i, _)| i.referents().iter().map(String::as_str))
        .collect();
    if let Some(r) = fixed.keys().find(|r| !referents.contains(r.as_str())) {
        return Err(SolveError::UnknownReferent(r.clone()));
    }

    let mut unknowns: Vec<InformationInstance> =
        referents.iter().map(|r| InformationInstance::new(&g_name, [*r])).collect();
    for (inst, _) in &pins {
        if !unknowns.contains(inst) {
            unknowns.push(inst.clone());
        }
    }
    let index: HashMap<&InformationInstance, usize> =
        unknowns.iter().enumerate().map(|(i, u)| (u, i)).collect();

    let ground = rules.ground_rules_within(&unknowns);
    let fixed_pins: Vec<(usize, Point)> = referents
        .iter()
        .enumerate()
        .filter_map(|(i, r)| fixed.get(*r).map(|p| (i, *p)))
        .collect();
    let rows = ground.len() + pins.len() + fixed_pins.len();
    let mut a = DMatrix::zeros(rows, unknowns.len());
    let mut b = DMatrix::zeros(rows, 2);
    for (r, rule) in ground.iter().enumerate() {
        a[(r, index[&rule.rhs])] += 1.0;
        for (c, inst) in &rule.lhs {
            a[(r, index[inst])] -= c;
        }
        b[(r, 0)] = rule.offset;
        b[(r, 1)] = rule.offset;
    }
    let pin_rows = pins
        .iter()
        .map(|(inst, v)| (index[inst], *v))
        .chain(fixed_pins.iter().copied());
    for (k, (col, v)) in pin_rows.enumerate() {
        let r = ground.len() + k;
        a[(r, col)] = 1.0;
        b[(r, 0)] = v[0];
        b[(r, 1)] = v[1];
    }

    let prior = prior.map(|positions| {
        let mut x0 = DMatrix::zeros(unknowns.len(), 2);
        for (i, u) in unknowns.iter().enumerate() {
            if let Some(v) = conventions::evaluate(u, positions) {
                x0[(i, 0)] = v[0];
                x0[(i, 1)] = v[1];
            }
        }
        x0
    });
    let ls = linalg::solve(&a, &b, prior.as_ref());
    if ls.max_residual >= RESIDUAL_TOLERANCE {
        return Err(SolveError::Inconsistent {
            max_residual: ls.max_residual,
        });
    }
    let positions = referents
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = fixed
                .get(*r)
                .copied()
                .unwrap_or([ls.solution[(i, 0)], ls.solution[(i, 1)]]);
            (r.to_string(), p)
        })
        .collect();
    Ok(Configuration {
        positions,
        max_residual: ls.max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pin(inst: &str, v: Point) -> Constraint {
        Constraint::valued(inst.parse().unwrap(), v.to_vec())
    }

    fn fixed(points: &[(&str, Point)]) -> HashMap<String, Point> {
        points.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn close(a: Point, b: Point) -> bool {
        (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9
    }

    #[test]
    fn monitoring_standoff() {
        let rules = RuleSet::default_rules();
        let c = solve_configuration(&[pin("R(v1,t)", [-5.0, 0.0])], &fixed(&[("t", [10.0, 10.0])]), &rules).unwrap();
        assert!(close(c.positions["v1"], [5.0, 10.0]));
        assert_eq!(c.positions["t"], [10.0, 10.0]);
    }

    #[test]
    fn centroid_completes_the_triangle() {
        let rules = RuleSet::default_rules();
        let c = solve_configuration(
            &[pin("C3(v1,v2,v3)", [0.0, 0.0])],
            &fixed(&[("v1", [3.0, 0.0]), ("v2", [-3.0, 0.0])]),
            &rules,
        )
        .unwrap();
        assert!(close(c.positions["v3"], [0.0, 0.0]));
    }

    #[test]
    fn overdetermined_pins_are_inconsistent() {
        let rules = RuleSet::default_rules();
        let err = solve_configuration(
            &[pin("G(r1)", [0.0, 0.0]), pin("G(r2)", [4.0, 0.0]), pin("R(r1,r2)", [1.0, 1.0])],
            &HashMap::new(),
            &rules,
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::Inconsistent { max_residual } if max_residual > 1e-6));
    }

    #[test]
    fn underdetermined_takes_minimum_norm() {
        let rules = RuleSet::default_rules();
        let c = solve_configuration(&[pin("R(a,b)", [2.0, 0.0])], &HashMap::new(), &rules).unwrap();
        assert!(close(c.positions["a"], [1.0, 0.0]));
        assert!(close(c.positions["b"], [-1.0, 0.0]));
    }

    #[test]
    fn prior_keeps_free_vehicles_apart() {
        let rules = RuleSet::default_rules();
        let pins = [pin("C2(a,b)", [0.0, 0.0])];
        let near = fixed(&[("a", [5.0, 1.0]), ("b", [-3.0, 1.0])]);
        let c = solve_near(&pins, &HashMap::new(), &rules, Some(&near)).unwrap();
        assert!(close(c.positions["a"], [4.0, 0.0]));
        assert!(close(c.positions["b"], [-4.0, 0.0]));
    }

    #[test]
    fn relay_sits_between_endpoints() {
        let rules = RuleSet::default_rules();
        let c = solve_configuration(
            &[pin("M(a,b,r)", [0.0, 0.0])],
            &fixed(&[("a", [0.0, 0.0]), ("b", [10.0, 4.0])]),
            &rules,
        )
        .unwrap();
        assert!(close(c.positions["r"], [5.0, 2.0]));
    }

    #[test]
    fn errors() {
        let rules = RuleSet::default_rules();
        let symbolic = Constraint::symbolic("G(a)".parse().unwrap());
        assert!(matches!(
            solve_configuration(&[symbolic], &HashMap::new(), &rules),
            Err(SolveError::MissingValue(_))
        ));
        assert!(matches!(
            solve_configuration(&[pin("G(a)", [0.0, 0.0])], &fixed(&[("z", [0.0, 0.0])]), &rules),
            Err(SolveError::UnknownReferent(z)) if z == "z"
        ));
        let short = Constraint::valued("G(a)".parse().unwrap(), vec![1.0]);
        assert!(matches!(
            solve_configuration(&[short], &HashMap::new(), &rules),
            Err(SolveError::BadValue { found: 1, .. })
        ));
        assert!(matches!(
            solve_configuration(&[pin("Q(a)", [0.0, 0.0])], &HashMap::new(), &rules),
            Err(SolveError::Model(_))
        ));
    }

    #[test]
    fn fixed_positions_are_copied_exactly() {
        let rules = RuleSet::default_rules();
        let p = [0.1 + 0.2, 1.0 / 3.0];
        let c = solve_configuration(&[pin("R(v,t)", [-5.0, 0.0])], &fixed(&[("t", p)]), &rules).unwrap();
        assert_eq!(c.positions["t"], p);
    }
}
