//! Brute-force reference solvers for tiny instances.
//!
//! These deliberately avoid the flow machinery in the sibling modules so a
//! bug there cannot hide: W∞ is decided by subset (Hall) checks, optimal
//! cost by enumerating vertices of the transportation polytope.

use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::solver::scale::{rounding_slack, scale_balanced};
use crate::space::MetricSpace;

const MAX_HALL_SUPPORT: usize = 6;
const MAX_VERTEX_SUPPORT: usize = 3;

/// Least threshold t at which a coupling supported on {d ≤ t} exists,
/// decided by checking, for every subset S of the source support, that the
/// target mass within distance t of S covers the mass of S.
pub fn oracle_winf(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Result<f64> {
    let (mu_int, nu_int) = scale_balanced(mu.weights(), nu.weights(), tol)?;
    let rows: Vec<usize> = (0..space.len()).filter(|&i| mu_int[i] > 0).collect();
    let cols: Vec<usize> = (0..space.len()).filter(|&j| nu_int[j] > 0).collect();
    if rows.len() > MAX_HALL_SUPPORT || cols.len() > MAX_HALL_SUPPORT {
        return Err(CoreError::OracleScale(format!(
            "support sizes {}x{} exceed the {}-point oracle limit",
            rows.len(),
            cols.len(),
            MAX_HALL_SUPPORT
        )));
    }
    if rows.is_empty() {
        return Ok(0.0);
    }

    let mut candidates = vec![0.0f64];
    for &i in &rows {
        for &j in &cols {
            candidates.push(space.dist(i, j));
        }
    }
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let slack = rounding_slack(rows.len() + cols.len(), tol) as u128;
    'thresholds: for &t in &candidates {
        // feasible iff mu(S) <= nu(N_t(S)) for every subset S of rows, up
        // to the same rounding slack the flow solver absorbs
        for mask in 1u32..(1 << rows.len()) {
            let mut need = 0u128;
            for (bit, &i) in rows.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    need += mu_int[i] as u128;
                }
            }
            let mut have = 0u128;
            for &j in &cols {
                let reachable = rows.iter().enumerate().any(|(bit, &i)| {
                    mask & (1 << bit) != 0 && space.dist(i, j) <= t
                });
                if reachable {
                    have += nu_int[j] as u128;
                }
            }
            if have + slack < need {
                continue 'thresholds;
            }
        }
        return Ok(t);
    }
    Err(CoreError::Internal(
        "no feasible threshold found for balanced measures".into(),
    ))
}

/// Optimal transport cost by enumerating basic feasible solutions: every
/// vertex of the transportation polytope is the flow on some spanning tree
/// of the support bipartite graph, solvable by leaf elimination.
pub fn oracle_cost_vertices(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    h: &CostFunction,
    tol: f64,
) -> Result<f64> {
    let total_mu = mu.total();
    let total_nu = nu.total();
    if (total_mu - total_nu).abs() > tol {
        return Err(CoreError::Unbalanced(total_mu, total_nu));
    }
    let rows: Vec<usize> = (0..space.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let cols: Vec<usize> = (0..space.len()).filter(|&j| nu.weight(j) > 0.0).collect();
    if rows.len() > MAX_VERTEX_SUPPORT || cols.len() > MAX_VERTEX_SUPPORT {
        return Err(CoreError::OracleScale(format!(
            "support sizes {}x{} exceed the {}-point vertex oracle limit",
            rows.len(),
            cols.len(),
            MAX_VERTEX_SUPPORT
        )));
    }
    if rows.is_empty() {
        return Ok(0.0);
    }

    let nr = rows.len();
    let nc = cols.len();
    let n_edges = nr * nc;
    let tree_size = nr + nc - 1;
    let feas_slack = 1e-9 * (1.0 + total_mu);
    let mut best: Option<f64> = None;

    for mask in 0u32..(1 << n_edges) {
        if (mask.count_ones() as usize) != tree_size {
            continue;
        }
        // rows are nodes 0..nr, cols nodes nr..nr+nc
        let mut degree = vec![0usize; nr + nc];
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nr + nc];
        for e in 0..n_edges {
            if mask & (1 << e) != 0 {
                let (ri, ci) = (e / nc, e % nc);
                degree[ri] += 1;
                degree[nr + ci] += 1;
                incident[ri].push(e);
                incident[nr + ci].push(e);
            }
        }
        // signed balance: + supply on rows, - demand on cols
        let mut rem: Vec<f64> = rows
            .iter()
            .map(|&i| mu.weight(i))
            .chain(cols.iter().map(|&j| -nu.weight(j)))
            .collect();
        let mut alive = vec![true; n_edges];
        let mut flow = vec![0.0f64; n_edges];
        let mut deg = degree;
        let mut processed = 0usize;
        let mut feasible = true;
        loop {
            let leaf = (0..nr + nc).find(|&v| deg[v] == 1);
            let v = match leaf {
                Some(v) => v,
                None => break,
            };
            let e = *incident[v]
                .iter()
                .find(|&&e| alive[e])
                .expect("degree-1 node must have a live edge");
            let (ri, ci) = (e / nc, e % nc);
            // mass that must ride this edge to balance the leaf
            let f = if v < nr { rem[v] } else { -rem[v] };
            if f < -feas_slack {
                feasible = false;
                break;
            }
            flow[e] = f.max(0.0);
            rem[ri] -= flow[e];
            rem[nr + ci] += flow[e];
            alive[e] = false;
            deg[ri] -= 1;
            deg[nr + ci] -= 1;
            processed += 1;
        }
        if !feasible || processed != tree_size {
            continue; // infeasible vertex, or the mask was not a tree
        }
        if rem.iter().any(|&x| x.abs() > feas_slack) {
            continue;
        }
        let cost: f64 = (0..n_edges)
            .map(|e| flow[e] * h.eval(space.dist(rows[e / nc], cols[e % nc])))
            .sum();
        best = Some(match best {
            Some(b) => b.min(cost),
            None => cost,
        });
    }

    best.ok_or_else(|| {
        CoreError::Internal("no feasible basis found for balanced measures".into())
    })
}

/// Exact W1 on a set of collinear points: integral of |F_mu - F_nu| along
/// the line. Used as a closed-form cross-check for the flow solver.
pub fn oracle_w1_line(positions: &[f64], mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    let mut acc = 0.0f64;
    let mut cdf_gap = 0.0f64;
    let mut prev: Option<f64> = None;
    for &k in &order {
        if let Some(x) = prev {
            acc += cdf_gap.abs() * (positions[k] - x);
        }
        cdf_gap += mu.weight(k) - nu.weight(k);
        prev = Some(positions[k]);
    }
    acc
}
