use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Canonical, CompatVerdict, Witness};
use crate::linalg;
use crate::model::{ConstraintSet, InformationInstance, MtmrSetting};
use crate::rules::engine::{Fact, FactTable, Workspace};
use crate::rules::RuleSet;

/// Default cap on distinct constrained instances for the brute-force oracle.
pub const THEOREM1_LIMIT: usize = 12;

/// Residual below which the stacked system counts as consistent.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{size} distinct instances exceed the brute-force limit of {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("type {0} has no declared value dimension in common with the others")]
    MixedDimensions(String),
}

/// Brute force over every subset of the constrained instances.
pub fn oracle_theorem1(setting: &MtmrSetting, rules: &RuleSet) -> Result<CompatVerdict, OracleError> {
    oracle_theorem1_with_limit(setting, rules, THEOREM1_LIMIT)
}

/// Reports the first `F` in the closure with two subsets that infer it
/// while their intersection does not.
///
/// Such a pair exists exactly when `F` has two distinct minimal inferring
/// subsets: two minimal sets are a valid pair, and if the minimal set is
/// unique it lies inside every inferring set and hence inside every
/// intersection. Counting minimal sets visits each subset once instead of
/// each pair.
pub fn oracle_theorem1_with_limit(
    setting: &MtmrSetting,
    rules: &RuleSet,
    limit: usize,
) -> Result<CompatVerdict, OracleError> {
    rules.assert_saturated();
    let canon = Canonical::new(setting, rules);
    let universe = canon.instances();
    let n = universe.len();
    if n > limit {
        return Err(OracleError::TooLarge { size: n, limit });
    }
    if let Some(w) = canon.overlap() {
        return Ok(CompatVerdict::incompatible(w, 0));
    }
    if n == 0 {
        return Ok(CompatVerdict::compatible(0));
    }
    let ws = Workspace::new(rules, universe.iter());
    let leaves: Vec<Fact> = universe
        .iter()
        .map(|i| ws.fact(i).unwrap_or_else(|| panic!("{i} uses a type the rule set does not declare")))
        .collect();
    let full = ws.closure(&leaves);

    // closures[mask] as a bitset over the full closure
    let mut closures = vec![FixedBitSet::new(); 1 << n];
    closures[0] = FixedBitSet::with_capacity(full.len());
    let mut stack: Vec<(usize, usize, FactTable)> = vec![(0, 0, ws.table())];
    while let Some((mask, next, table)) = stack.pop() {
        for (b, leaf) in leaves.iter().enumerate().skip(next) {
            let child = mask | (1 << b);
            let mut t = table.clone();
            let closed = t.len() as u32;
            t.insert(leaf.clone());
            ws.extend(&mut t, closed);
            let mut bits = FixedBitSet::with_capacity(full.len());
            for f in t.iter() {
                bits.insert(full.id(f).expect("subset closures lie inside the full closure") as usize);
            }
            closures[child] = bits;
            stack.push((child, b + 1, t));
        }
    }

    let mut first_minimal: HashMap<usize, usize> = HashMap::new();
    let mut best: Option<(usize, usize, usize)> = None;
    for mask in 1usize..(1 << n) {
        let mut minimal = closures[mask].clone();
        for b in 0..n {
            if mask & (1 << b) != 0 {
                minimal.difference_with(&closures[mask ^ (1 << b)]);
            }
        }
        for f in minimal.ones() {
            match first_minimal.get(&f) {
                None => {
                    first_minimal.insert(f, mask);
                }
                Some(&other) => {
                    if best.is_none_or(|(_, _, m)| mask < m) {
                        best = Some((f, other, mask));
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }

    let subset = |mask: usize| -> BTreeSet<InformationInstance> {
        (0..n).filter(|b| mask & (1 << b) != 0).map(|b| universe[b].clone()).collect()
    };
    Ok(match best {
        None => CompatVerdict::compatible(0),
        Some((f, m1, m2)) => CompatVerdict::incompatible(
            Witness::Inference {
                instance: ws.instance(full.get(f as u32)),
                existing: subset(m1),
                candidate: subset(m2),
            },
            0,
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericVerdict {
    pub compatible: bool,
    pub max_residual: f64,
    pub unknowns: usize,
    pub equations: usize,
}

fn value_dim(rules: &RuleSet) -> Result<usize, OracleError> {
    rules.types().value_dim().ok_or_else(|| {
        OracleError::MixedDimensions(rules.types().iter().map(|t| t.name.clone()).collect::<Vec<_>>().join(","))
    })
}

/// The setting with every constraint pinned to an independent value drawn
/// uniformly from `[-100, 100]`.
pub fn random_values(setting: &MtmrSetting, dim: usize, seed: u64) -> MtmrSetting {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks: Vec<ConstraintSet> = setting
        .tasks()
        .iter()
        .map(|t| {
            let values: Vec<Option<Vec<f64>>> = (0..t.len())
                .map(|_| Some((0..dim).map(|_| rng.random_range(-100.0..=100.0)).collect()))
                .collect();
            t.with_values(&values)
        })
        .collect();
    MtmrSetting::new(setting.referents().to_vec(), tasks).expect("same referents and instances")
}

/// Pins every constraint to an independent random value and asks whether
/// the linear system over the closure stays consistent.
pub fn oracle_numeric(setting: &MtmrSetting, rules: &RuleSet, seed: u64) -> Result<NumericVerdict, OracleError> {
    let dim = value_dim(rules)?;
    oracle_numeric_valued(&random_values(setting, dim, seed), rules)
}

/// [`oracle_numeric`] with the pins taken from the setting's values.
///
/// # Panics
///
/// If a constraint has no value or a value of the wrong length.
pub fn oracle_numeric_valued(setting: &MtmrSetting, rules: &RuleSet) -> Result<NumericVerdict, OracleError> {
    rules.assert_saturated();
    let dim = value_dim(rules)?;
    let canon = Canonical::new(setting, rules);
    let universe = canon.instances();
    let ws = Workspace::new(rules, universe.iter());
    let leaves: Vec<Fact> = universe.iter().map(|i| ws.fact(i).expect("resolved above")).collect();
    let full = ws.closure(&leaves);
    let unknowns = full.len();

    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut seen: BTreeSet<Vec<(usize, i64)>> = BTreeSet::new();
    ws.for_each_firing(&full, 0, unknowns as u32, |rule, premises, rhs| {
        let head = full.id(&rhs).expect("closure is closed") as usize;
        let src = &rules.rules()[rule];
        let mut coeffs: Vec<(usize, f64)> = vec![(head, 1.0)];
        for (&p, t) in premises.iter().zip(&src.lhs) {
            coeffs.push((p as usize, -t.coefficient));
        }
        coeffs.sort_by_key(|&(i, _)| i);
        // Saturated variants restate one equation at different scales.
        let scale = coeffs[0].1;
        let mut key: Vec<(usize, i64)> = coeffs
            .iter()
            .map(|&(i, c)| (i, (c / scale * 1e9).round() as i64))
            .collect();
        key.push((usize::MAX, (src.offset / scale * 1e9).round() as i64));
        if seen.insert(key) {
            rows.push((coeffs, src.offset));
        }
    });
    let ground = rows.len();

    let mut pins: Vec<(usize, Vec<f64>)> = Vec::new();
    for ((_, insts), task) in canon.tasks.iter().zip(setting.tasks()) {
        for (inst, c) in insts.iter().zip(task.constraints()) {
            let id = full.id(&ws.fact(inst).expect("checked above")).expect("seeds are in the closure");
            let value = c.value.clone().unwrap_or_else(|| panic!("`{inst}` has no value"));
            assert_eq!(value.len(), dim, "`{inst}` has a value of the wrong length");
            pins.push((id as usize, value));
        }
    }

    let m = ground + pins.len();
    let mut a = DMatrix::zeros(m, unknowns);
    let mut b = DMatrix::zeros(m, dim);
    for (r, (coeffs, offset)) in rows.iter().enumerate() {
        for &(i, c) in coeffs {
            a[(r, i)] += c;
        }
        for k in 0..dim {
            b[(r, k)] = *offset;
        }
    }
    for (j, (id, value)) in pins.iter().enumerate() {
        let r = ground + j;
        a[(r, *id)] = 1.0;
        for (k, v) in value.iter().enumerate() {
            b[(r, k)] = *v;
        }
    }
    let ls = linalg::solve(&a, &b, None);
    Ok(NumericVerdict {
        compatible: ls.max_residual < RESIDUAL_TOLERANCE,
        max_residual: ls.max_residual,
        unknowns,
        equations: m,
    })
}
