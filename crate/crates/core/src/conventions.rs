//! Planar values of the default information types, given referent positions.
//!
//! `G(x) = p(x)`, `R(x,y) = p(x) - p(y)`, `C2`/`C3` are member means and
//! `M(a,b,c) = p(c) - (p(a) + p(b)) / 2`.

use std::collections::HashMap;

use crate::model::InformationInstance;

pub type Point = [f64; 2];

/// Value of `instance` under `positions`, or `None` for an unknown type or
/// a referent without a position.
pub fn evaluate(instance: &InformationInstance, positions: &HashMap<String, Point>) -> Option<Vec<f64>> {
    let p = instance
        .referents()
        .iter()
        .map(|r| positions.get(r).copied())
        .collect::<Option<Vec<Point>>>()?;
    let v = match (instance.type_name(), p.as_slice()) {
        ("G", [a]) => *a,
        ("R", [a, b]) => [a[0] - b[0], a[1] - b[1]],
        ("C2", [a, b]) => [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0],
        ("C3", [a, b, c]) => [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
        ("M", [a, b, c]) => [c[0] - (a[0] + b[0]) / 2.0, c[1] - (a[1] + b[1]) / 2.0],
        _ => return None,
    };
    Some(v.to_vec())
}
