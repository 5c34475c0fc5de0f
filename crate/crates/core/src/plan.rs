//! Sparse transport plans (couplings) between two measures on one space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::space::MetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

/// A coupling candidate: positive masses on (row, col) pairs with cached
/// marginals. Whether it actually couples a given pair of measures is checked
/// by [`TransportPlan::validate_coupling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    n: usize,
    entries: Vec<PlanEntry>,
    row_sum: Vec<f64>,
    col_sum: Vec<f64>,
}

impl TransportPlan {
    /// Build from entries; rejects bad indices, nonpositive masses and
    /// duplicate (row, col) pairs. Entries are stored sorted by (row, col).
    pub fn from_entries(n: usize, mut entries: Vec<PlanEntry>) -> Result<Self> {
        for e in &entries {
            if e.row >= n || e.col >= n {
                return Err(CoreError::InvalidPlan(format!(
                    "entry ({}, {}) outside space of {} points",
                    e.row, e.col, n
                )));
            }
            if !e.mass.is_finite() || e.mass <= 0.0 {
                return Err(CoreError::InvalidPlan(format!(
                    "entry ({}, {}) carries nonpositive mass {}",
                    e.row, e.col, e.mass
                )));
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        for w in entries.windows(2) {
            if w[0].row == w[1].row && w[0].col == w[1].col {
                return Err(CoreError::InvalidPlan(format!(
                    "duplicate entry ({}, {})",
                    w[0].row, w[0].col
                )));
            }
        }
        let mut row_sum = vec![0.0; n];
        let mut col_sum = vec![0.0; n];
        for e in &entries {
            row_sum[e.row] += e.mass;
            col_sum[e.col] += e.mass;
        }
        Ok(TransportPlan {
            n,
            entries,
            row_sum,
            col_sum,
        })
    }

    /// Build by accumulating (row, col) -> mass, dropping zeros; useful when a
    /// construction touches the same pair several times.
    pub fn from_accumulated(n: usize, acc: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let entries = acc
            .into_iter()
            .filter(|&(_, m)| m > 0.0)
            .map(|((row, col), mass)| PlanEntry { row, col, mass })
            .collect();
        Self::from_entries(n, entries)
    }

    /// The plan that leaves `mu` in place.
    pub fn identity(mu: &DiscreteMeasure) -> Self {
        let entries = (0..mu.len())
            .filter(|&i| mu.weight(i) > 0.0)
            .map(|i| PlanEntry {
                row: i,
                col: i,
                mass: mu.weight(i),
            })
            .collect();
        Self::from_entries(mu.len(), entries).expect("identity entries are well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_sum
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_sum
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// Largest deviation of the cached marginals from (mu, nu).
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut err = 0.0f64;
        for i in 0..self.n {
            err = err.max((self.row_sum[i] - mu.weight(i)).abs());
            err = err.max((self.col_sum[i] - nu.weight(i)).abs());
        }
        err
    }

    /// Check that this plan couples `mu` to `nu` within `tol`.
    pub fn validate_coupling(
        &self,
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        tol: f64,
    ) -> Result<()> {
        if mu.len() != self.n || nu.len() != self.n {
            return Err(CoreError::InvalidPlan(format!(
                "marginals on {}/{} points, plan on {}",
                mu.len(),
                nu.len(),
                self.n
            )));
        }
        let err = self.marginal_error(mu, nu);
        if err > tol {
            return Err(CoreError::InvalidPlan(format!(
                "marginal error {} exceeds tolerance {}",
                err, tol
            )));
        }
        Ok(())
    }
}

/// Total cost of a plan: sum of mass * h(d(row, col)).
pub fn plan_cost(space: &MetricSpace, h: &CostFunction, plan: &TransportPlan) -> f64 {
    plan.entries()
        .iter()
        .map(|e| e.mass * h.eval(space.dist(e.row, e.col)))
        .sum()
}

/// Largest displacement carrying more than `tol` mass; 0 for plans that move
/// nothing above tolerance.
pub fn plan_sup_distance(space: &MetricSpace, plan: &TransportPlan, tol: f64) -> f64 {
    plan.entries()
        .iter()
        .filter(|e| e.mass > tol)
        .map(|e| space.dist(e.row, e.col))
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::space_from_points_1d;
    use crate::DEFAULT_TOL;

    #[test]
    fn identity_plan_is_free_and_still() {
        let s = space_from_points_1d(&[0.0, 1.0, 3.0]).unwrap();
        let mu = DiscreteMeasure::probability(vec![0.2, 0.3, 0.5], DEFAULT_TOL).unwrap();
        let plan = TransportPlan::identity(&mu);
        plan.validate_coupling(&mu, &mu, DEFAULT_TOL).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let h = CostFunction::power(p).unwrap();
            assert_eq!(plan_cost(&s, &h, &plan), 0.0);
        }
        assert_eq!(plan_sup_distance(&s, &plan, DEFAULT_TOL), 0.0);
    }

    #[test]
    fn crossing_plan_cost_and_sup() {
        let s = space_from_points_1d(&[0.0, 3.0]).unwrap();
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5], DEFAULT_TOL).unwrap();
        let plan = TransportPlan::from_entries(
            2,
            vec![
                PlanEntry {
                    row: 0,
                    col: 1,
                    mass: 0.5,
                },
                PlanEntry {
                    row: 1,
                    col: 0,
                    mass: 0.5,
                },
            ],
        )
        .unwrap();
        plan.validate_coupling(&mu, &mu, DEFAULT_TOL).unwrap();
        let h = CostFunction::power(2.0).unwrap();
        assert_eq!(plan_cost(&s, &h, &plan), 9.0);
        assert_eq!(plan_sup_distance(&s, &plan, DEFAULT_TOL), 3.0);
    }

    #[test]
    fn rejects_duplicates_and_bad_marginals() {
        let dup = vec![
            PlanEntry {
                row: 0,
                col: 1,
                mass: 0.25,
            },
            PlanEntry {
                row: 0,
                col: 1,
                mass: 0.25,
            },
        ];
        assert!(TransportPlan::from_entries(2, dup).is_err());

        let plan = TransportPlan::from_entries(
            2,
            vec![PlanEntry {
                row: 0,
                col: 0,
                mass: 1.0,
            }],
        )
        .unwrap();
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5], DEFAULT_TOL).unwrap();
        assert!(plan.validate_coupling(&mu, &mu, DEFAULT_TOL).is_err());
    }

    #[test]
    fn accumulated_entries_merge() {
        let mut acc = BTreeMap::new();
        *acc.entry((0usize, 1usize)).or_insert(0.0) += 0.25;
        *acc.entry((0, 1)).or_insert(0.0) += 0.25;
        *acc.entry((1, 0)).or_insert(0.0) += 0.5;
        let plan = TransportPlan::from_accumulated(2, acc).unwrap();
        assert_eq!(plan.entries().len(), 2);
        assert_eq!(plan.entries()[0].mass, 0.5);
    }
}
