//! Cyclical-monotonicity checking for transport plans, and collapse-family
//! plan construction.
//!
//! A plan is cyclically monotone for the cost h∘d when no cyclic
//! reassignment of targets among finitely many of its entries lowers the
//! total cost. Optimal plans always are; a strictly positive gain is a
//! certificate of suboptimality.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::TransportPlan;
use crate::space::MetricSpace;

/// Entry count up to which every tuple is enumerated; larger plans are
/// sampled.
pub const EXHAUSTIVE_ENTRY_CAP: usize = 15;

/// Number of random tuples tried in sampling mode.
pub const SAMPLE_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct CycleViolation {
    /// The participating plan entries (source, target) in cycle order.
    pub entries: Vec<(usize, usize)>,
    /// Cost of the entries as assigned.
    pub original_cost: f64,
    /// Cost after shifting every target one step around the cycle.
    pub shifted_cost: f64,
    /// `original_cost - shifted_cost`.
    pub gain: f64,
}

fn cycle_gain(
    space: &MetricSpace,
    h: &CostFunction,
    picks: &[(usize, usize)],
) -> (f64, f64) {
    let k = picks.len();
    let mut original = 0.0;
    let mut shifted = 0.0;
    for i in 0..k {
        let (x, y) = picks[i];
        let (_, y_next) = picks[(i + 1) % k];
        original += h.eval(space.dist(x, y));
        shifted += h.eval(space.dist(x, y_next));
    }
    (original, shifted)
}

fn better(best: &mut Option<CycleViolation>, cand: CycleViolation) {
    if best.as_ref().map_or(true, |b| cand.gain > b.gain) {
        *best = Some(cand);
    }
}

fn search_tuples(
    space: &MetricSpace,
    h: &CostFunction,
    pairs: &[(usize, usize)],
    k: usize,
    tol: f64,
    chosen: &mut Vec<usize>,
    best: &mut Option<CycleViolation>,
) {
    if chosen.len() == k {
        let picks: Vec<(usize, usize)> = chosen.iter().map(|&i| pairs[i]).collect();
        let (original, shifted) = cycle_gain(space, h, &picks);
        if original - shifted > tol {
            better(
                best,
                CycleViolation {
                    entries: picks,
                    original_cost: original,
                    shifted_cost: shifted,
                    gain: original - shifted,
                },
            );
        }
        return;
    }
    // fixing the smallest index first quotients out rotations
    let start = if chosen.is_empty() { 0 } else { chosen[0] + 1 };
    for i in start..pairs.len() {
        if chosen.contains(&i) {
            continue;
        }
        chosen.push(i);
        search_tuples(space, h, pairs, k, tol, chosen, best);
        chosen.pop();
    }
}

/// Search for a cyclic target reassignment among up to `k_max` plan entries
/// that beats the plan by more than `tol`. Exhaustive when the plan has at
/// most [`EXHAUSTIVE_ENTRY_CAP`] entries, otherwise a seeded random search.
pub fn check_cyclical_monotonicity(
    space: &MetricSpace,
    plan: &TransportPlan,
    h: &CostFunction,
    k_max: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<CycleViolation>> {
    if k_max < 2 {
        return Err(CoreError::Precondition(
            "cycle length cap must be at least 2".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = plan.entries().iter().map(|e| (e.row, e.col)).collect();
    if pairs.len() < 2 {
        return Ok(None);
    }
    let mut best = None;
    if pairs.len() <= EXHAUSTIVE_ENTRY_CAP {
        for k in 2..=k_max.min(pairs.len()) {
            search_tuples(space, h, &pairs, k, tol, &mut Vec::new(), &mut best);
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        for _ in 0..SAMPLE_BUDGET {
            let k = rng.gen_range(2..=k_max.min(pairs.len()));
            idx.shuffle(&mut rng);
            let picks: Vec<(usize, usize)> = idx[..k].iter().map(|&i| pairs[i]).collect();
            let (original, shifted) = cycle_gain(space, h, &picks);
            if original - shifted > tol {
                better(
                    &mut best,
                    CycleViolation {
                        entries: picks,
                        original_cost: original,
                        shifted_cost: shifted,
                        gain: original - shifted,
                    },
                );
            }
        }
    }
    Ok(best)
}

/// Move a `t`-sized slice of the mass on `set`, taken proportionally, onto
/// the single point `y`; everything else stays put. Returns the plan and
/// its target marginal. At `t = 0` this is the identity coupling.
pub fn build_collapse_plan(
    mu: &DiscreteMeasure,
    set: &[usize],
    y: usize,
    t: f64,
    tol: f64,
) -> Result<(TransportPlan, DiscreteMeasure)> {
    let set_mass: f64 = set.iter().map(|&i| mu.weight(i)).sum();
    if set_mass <= 0.0 {
        return Err(CoreError::Precondition(
            "collapse set carries no mass".into(),
        ));
    }
    if !(0.0..=set_mass + tol).contains(&t) {
        return Err(CoreError::Precondition(format!(
            "collapse amount {} outside [0, {}]",
            t, set_mass
        )));
    }
    if y >= mu.len() {
        return Err(CoreError::Precondition(format!(
            "collapse target {} out of range",
            y
        )));
    }
    let frac = (t / set_mass).min(1.0);
    let in_set = {
        let mut flags = vec![false; mu.len()];
        for &i in set {
            flags[i] = true;
        }
        flags
    };
    let mut acc = std::collections::BTreeMap::new();
    for i in 0..mu.len() {
        let w = mu.weight(i);
        if w <= 0.0 {
            continue;
        }
        if in_set[i] {
            *acc.entry((i, i)).or_insert(0.0) += w * (1.0 - frac);
            *acc.entry((i, y)).or_insert(0.0) += w * frac;
        } else {
            *acc.entry((i, i)).or_insert(0.0) += w;
        }
    }
    let plan = TransportPlan::from_accumulated(mu.len(), acc)?;
    let weights = plan.col_marginal().to_vec();
    let nu = DiscreteMeasure::new(weights, mu.total(), tol * 4.0 + 1e-12)?;
    plan.validate_coupling(mu, &nu, tol * 4.0 + 1e-12)?;
    Ok((plan, nu))
}
