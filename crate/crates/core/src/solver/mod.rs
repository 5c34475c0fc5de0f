//! Exact solvers for optimal transport on finite metric spaces.
//!
//! `solve_cost` minimizes ∫ h(d) dλ over couplings by min-cost flow and
//! certifies the result with dual potentials; `solve_winf` finds the least
//! sup-displacement by binary search over distance values, deciding each
//! threshold with a max-flow feasibility check on exactly scaled masses.

mod maxflow;
mod mcf;
pub mod oracle;
pub mod scale;

pub use oracle::{oracle_cost_vertices, oracle_w1_line, oracle_winf};

use crate::cost::CostFunction;
use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{plan_cost, plan_sup_distance, TransportPlan};
use crate::space::MetricSpace;
use scale::{scale_balanced, SCALE};

/// Per-solve bookkeeping. The dual vectors are indexed by point (zero for
/// points outside the respective support) and only populated by the cost
/// solver; the threshold solver fills `threshold_steps` instead.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SolveDiagnostics {
    pub augmentations: usize,
    pub threshold_steps: usize,
    pub dual_row: Vec<f64>,
    pub dual_col: Vec<f64>,
    /// max over support pairs of (φ_i + ψ_j − c_ij)_+
    pub max_dual_slack: f64,
    /// max over plan entries of |c_ij − φ_i − ψ_j|
    pub max_entry_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub plan: TransportPlan,
    pub value: f64,
    pub diagnostics: SolveDiagnostics,
}

struct Scaled {
    mu_int: Vec<u64>,
    nu_int: Vec<u64>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    total_units: u64,
}

fn prepare(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Result<Scaled> {
    if mu.weights().len() != space.len() || nu.weights().len() != space.len() {
        return Err(CoreError::InvalidMeasure(format!(
            "measures of size {}/{} on a {}-point space",
            mu.weights().len(),
            nu.weights().len(),
            space.len()
        )));
    }
    let (mu_int, nu_int) = scale_balanced(mu.weights(), nu.weights(), tol)?;
    let rows: Vec<usize> = (0..space.len()).filter(|&i| mu_int[i] > 0).collect();
    let cols: Vec<usize> = (0..space.len()).filter(|&j| nu_int[j] > 0).collect();
    let total_units = rows.iter().map(|&i| mu_int[i]).sum();
    Ok(Scaled { mu_int, nu_int, rows, cols, total_units })
}

/// Optimal coupling for the cost c(i,j) = h(dist(i,j)).
pub fn solve_cost(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    h: &CostFunction,
    tol: f64,
) -> Result<SolveResult> {
    let sc = prepare(space, mu, nu, tol)?;
    let (nr, nc) = (sc.rows.len(), sc.cols.len());
    if sc.total_units == 0 {
        return Ok(SolveResult {
            plan: TransportPlan::from_entries(space.len(), Vec::new())?,
            value: 0.0,
            diagnostics: SolveDiagnostics::default(),
        });
    }

    let mut costs = vec![vec![0.0f64; nc]; nr];
    let mut max_abs_cost = 0.0f64;
    for (a, &i) in sc.rows.iter().enumerate() {
        for (b, &j) in sc.cols.iter().enumerate() {
            let c = h.eval(space.dist(i, j));
            if !c.is_finite() {
                return Err(CoreError::InvalidCost(format!(
                    "cost at distance {} is not finite",
                    space.dist(i, j)
                )));
            }
            costs[a][b] = c;
            max_abs_cost = max_abs_cost.max(c.abs());
        }
    }

    // nodes: source, rows, cols, sink
    let s = 0;
    let t = nr + nc + 1;
    let mut flow = mcf::MinCostFlow::new(nr + nc + 2);
    for (a, &i) in sc.rows.iter().enumerate() {
        flow.add_edge(s, 1 + a, sc.mu_int[i], 0.0);
    }
    let mut mid = Vec::with_capacity(nr * nc);
    for a in 0..nr {
        for b in 0..nc {
            mid.push((a, b, flow.add_edge(1 + a, 1 + nr + b, sc.total_units, costs[a][b])));
        }
    }
    for (b, &j) in sc.cols.iter().enumerate() {
        flow.add_edge(1 + nr + b, t, sc.nu_int[j], 0.0);
    }

    // augmenting paths can bottleneck on backward residual arcs, so the
    // count is not tied to the source/sink degree; the support of an
    // optimal plan caps it in practice
    let routed = flow.run(s, t, nr * nc + nr + nc + 64)?;
    if routed != sc.total_units {
        return Err(CoreError::Internal(format!(
            "routed {} of {} mass units on a complete bipartite graph",
            routed, sc.total_units
        )));
    }

    let mut acc = std::collections::BTreeMap::new();
    for &(a, b, e) in &mid {
        let units = flow.flow_on(e);
        if units > 0 {
            *acc.entry((sc.rows[a], sc.cols[b])).or_insert(0.0) += units as f64 / SCALE;
        }
    }
    let plan = TransportPlan::from_accumulated(space.len(), acc)?;
    let vtol = tol * 4.0 + 64.0 / SCALE; // allowed imbalance plus rounding slack
    plan.validate_coupling(mu, nu, vtol)?;

    // duals: phi_i + psi_j <= c(i,j), equality on plan entries
    let mut dual_row = vec![0.0f64; space.len()];
    let mut dual_col = vec![0.0f64; space.len()];
    for (a, &i) in sc.rows.iter().enumerate() {
        dual_row[i] = -flow.potential(1 + a);
    }
    for (b, &j) in sc.cols.iter().enumerate() {
        dual_col[j] = flow.potential(1 + nr + b);
    }
    let mut max_dual_slack = 0.0f64;
    for (a, &i) in sc.rows.iter().enumerate() {
        for (b, &j) in sc.cols.iter().enumerate() {
            max_dual_slack = max_dual_slack.max(dual_row[i] + dual_col[j] - costs[a][b]);
        }
    }
    let mut max_entry_gap = 0.0f64;
    for e in plan.entries() {
        let c = h.eval(space.dist(e.row, e.col));
        max_entry_gap = max_entry_gap.max((c - dual_row[e.row] - dual_col[e.col]).abs());
    }
    let cert_tol = 1e-6 * (1.0 + max_abs_cost);
    if max_dual_slack > cert_tol || max_entry_gap > cert_tol {
        return Err(CoreError::Internal(format!(
            "dual certificate violated: slack {max_dual_slack:.3e}, entry gap {max_entry_gap:.3e}"
        )));
    }

    let value = plan_cost(space, h, &plan);
    Ok(SolveResult {
        plan,
        value,
        diagnostics: SolveDiagnostics {
            augmentations: flow.augmentations,
            threshold_steps: 0,
            dual_row,
            dual_col,
            max_dual_slack: max_dual_slack.max(0.0),
            max_entry_gap,
        },
    })
}

/// W_p distance: p-th root of the optimal cost for h = t^p.
pub fn solve_wp(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    tol: f64,
) -> Result<SolveResult> {
    let h = CostFunction::power(p)?;
    let mut res = solve_cost(space, mu, nu, &h, tol)?;
    res.value = res.value.powf(1.0 / p);
    Ok(res)
}

fn flow_at(
    space: &MetricSpace,
    sc: &Scaled,
    t: f64,
    slack: u64,
) -> Result<Option<TransportPlan>> {
    let (nr, nc) = (sc.rows.len(), sc.cols.len());
    if sc.total_units == 0 {
        return Ok(Some(TransportPlan::from_entries(space.len(), Vec::new())?));
    }
    let s = 0;
    let sink = nr + nc + 1;
    let mut net = maxflow::Dinic::new(nr + nc + 2);
    for (a, &i) in sc.rows.iter().enumerate() {
        net.add_edge(s, 1 + a, sc.mu_int[i]);
    }
    let mut mid = Vec::new();
    for (a, &i) in sc.rows.iter().enumerate() {
        for (b, &j) in sc.cols.iter().enumerate() {
            if space.dist(i, j) <= t {
                mid.push((a, b, net.add_edge(1 + a, 1 + nr + b, sc.total_units)));
            }
        }
    }
    for (b, &j) in sc.cols.iter().enumerate() {
        net.add_edge(1 + nr + b, sink, sc.nu_int[j]);
    }
    // subset-tight instances (collapse targets, uniform grids) round to a
    // few units short of the exact total; treat that as feasible
    if net.max_flow(s, sink) + slack < sc.total_units {
        return Ok(None);
    }
    let mut acc = std::collections::BTreeMap::new();
    for &(a, b, e) in &mid {
        let units = net.flow_on(e);
        if units > 0 {
            *acc.entry((sc.rows[a], sc.cols[b])).or_insert(0.0) += units as f64 / SCALE;
        }
    }
    Ok(Some(TransportPlan::from_accumulated(space.len(), acc)?))
}

/// Is there a coupling supported on pairs at distance ≤ t? Returns the
/// witness plan when one exists.
pub fn feasible_at(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    t: f64,
    tol: f64,
) -> Result<Option<TransportPlan>> {
    let sc = prepare(space, mu, nu, tol)?;
    let slack = scale::rounding_slack(sc.rows.len() + sc.cols.len(), tol);
    flow_at(space, &sc, t, slack)
}

/// W∞ distance: least t with a coupling supported on {d ≤ t}, found by
/// binary search over the distinct distances between the two supports.
pub fn solve_winf(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Result<SolveResult> {
    let sc = prepare(space, mu, nu, tol)?;
    if sc.total_units == 0 {
        return Ok(SolveResult {
            plan: TransportPlan::from_entries(space.len(), Vec::new())?,
            value: 0.0,
            diagnostics: SolveDiagnostics::default(),
        });
    }
    let mut candidates = vec![0.0f64];
    for &i in &sc.rows {
        for &j in &sc.cols {
            candidates.push(space.dist(i, j));
        }
    }
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let slack = scale::rounding_slack(sc.rows.len() + sc.cols.len(), tol);
    let mut steps = 0usize;
    let mut lo = 0usize; // first index that might be feasible
    let mut hi = candidates.len() - 1; // known feasible (complete graph at max distance)
    while lo < hi {
        let mid_idx = (lo + hi) / 2;
        steps += 1;
        match flow_at(space, &sc, candidates[mid_idx], slack)? {
            Some(_) => hi = mid_idx,
            None => lo = mid_idx + 1,
        }
    }
    let value = candidates[lo];
    let plan = flow_at(space, &sc, value, slack)?.ok_or_else(|| {
        CoreError::Internal("threshold found by search is not feasible".into())
    })?;
    debug_assert!(plan_sup_distance(space, &plan, 0.0) <= value);
    let vtol = tol * 4.0 + 64.0 / SCALE;
    plan.validate_coupling(mu, nu, vtol)?;
    Ok(SolveResult {
        plan,
        value,
        diagnostics: SolveDiagnostics {
            threshold_steps: steps,
            ..SolveDiagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::space_from_points_1d;
    use rand::Rng;
    use rand::SeedableRng;

    fn line(points: &[f64]) -> MetricSpace {
        space_from_points_1d(points).unwrap()
    }

    #[test]
    fn equal_measures_cost_zero_identity_ok() {
        let space = line(&[0.0, 1.0, 4.0]);
        let mu = DiscreteMeasure::probability(vec![0.2, 0.5, 0.3], 1e-9).unwrap();
        let h = CostFunction::power(2.0).unwrap();
        let res = solve_cost(&space, &mu, &mu, &h, 1e-9).unwrap();
        assert!(res.value.abs() < 1e-12);
        assert!(plan_sup_distance(&space, &res.plan, 1e-12) < 1e-12);
    }

    #[test]
    fn forced_delta_coupling() {
        let space = line(&[0.0, 2.0]);
        let mu = DiscreteMeasure::probability(vec![1.0, 0.0], 1e-9).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.0, 1.0], 1e-9).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let h = CostFunction::power(p).unwrap();
            let res = solve_cost(&space, &mu, &nu, &h, 1e-9).unwrap();
            assert!((res.value - 2f64.powf(p)).abs() < 1e-9);
            let wp = solve_wp(&space, &mu, &nu, p, 1e-9).unwrap();
            assert!((wp.value - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shifted_pair_cost_one() {
        let space = line(&[0.0, 1.0, 2.0]);
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5, 0.0], 1e-9).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.0, 0.5, 0.5], 1e-9).unwrap();
        let h = CostFunction::power(2.0).unwrap();
        let res = solve_cost(&space, &mu, &nu, &h, 1e-9).unwrap();
        assert!((res.value - 1.0).abs() < 1e-9, "value {}", res.value);
        let oracle = oracle_cost_vertices(&space, &mu, &nu, &h, 1e-9).unwrap();
        assert!((res.value - oracle).abs() < 1e-9);
    }

    #[test]
    fn unbalanced_is_rejected() {
        let space = line(&[0.0, 1.0]);
        let mu = DiscreteMeasure::probability(vec![1.0, 0.0], 1e-9).unwrap();
        let nu = DiscreteMeasure::from_weights(vec![0.0, 0.5], 1e-9).unwrap();
        let h = CostFunction::power(1.0).unwrap();
        assert!(matches!(
            solve_cost(&space, &mu, &nu, &h, 1e-9),
            Err(CoreError::Unbalanced(_, _))
        ));
    }

    #[test]
    fn feasibility_threshold_behavior() {
        let space = line(&[0.0, 1.0, 2.0]);
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5, 0.0], 1e-9).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.0, 0.5, 0.5], 1e-9).unwrap();
        // shift coupling 0->1, 1->2 works at t = 1
        assert!(feasible_at(&space, &mu, &nu, 1.0, 1e-9).unwrap().is_some());
        assert!(feasible_at(&space, &mu, &nu, 0.5, 1e-9).unwrap().is_none());
        // t at the diameter always works
        assert!(feasible_at(&space, &mu, &nu, 2.0, 1e-9).unwrap().is_some());
    }

    #[test]
    fn winf_imbalance_must_cross() {
        let space = line(&[0.0, 3.0]);
        let mu = DiscreteMeasure::probability(vec![0.6, 0.4], 1e-9).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.4, 0.6], 1e-9).unwrap();
        let res = solve_winf(&space, &mu, &nu, 1e-9).unwrap();
        assert_eq!(res.value, 3.0);
        assert!(plan_sup_distance(&space, &res.plan, 1e-12) <= 3.0);
        assert_eq!(oracle_winf(&space, &mu, &nu, 1e-9).unwrap(), 3.0);
    }

    #[test]
    fn winf_identical_measures_zero() {
        let space = line(&[0.0, 1.0, 2.0, 5.0]);
        let mu = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4], 1e-9).unwrap();
        let res = solve_winf(&space, &mu, &mu, 1e-9).unwrap();
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn random_instances_match_oracles() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for round in 0..60 {
            let n = rng.gen_range(2..=6);
            let points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let space = line(&points);
            let mu = crate::instances::random_probability(n, 0.05, &mut rng);
            let nu = crate::instances::random_probability(n, 0.05, &mut rng);
            let solved = solve_winf(&space, &mu, &nu, 1e-9).unwrap();
            let oracle = oracle_winf(&space, &mu, &nu, 1e-9).unwrap();
            assert_eq!(solved.value, oracle, "round {round}");
            assert!(
                plan_sup_distance(&space, &solved.plan, 1e-12) <= solved.value + 1e-12,
                "witness exceeds threshold on round {round}"
            );
        }
    }

    #[test]
    fn random_cost_matches_vertex_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for round in 0..40 {
            let points: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..5.0)).collect();
            let space = line(&points);
            let mu = crate::instances::random_probability(3, 0.1, &mut rng);
            let nu = crate::instances::random_probability(3, 0.1, &mut rng);
            let p = [1.0, 2.0, 3.0][round % 3];
            let h = CostFunction::power(p).unwrap();
            let solved = solve_cost(&space, &mu, &nu, &h, 1e-9).unwrap();
            let oracle = oracle_cost_vertices(&space, &mu, &nu, &h, 1e-9).unwrap();
            assert!(
                (solved.value - oracle).abs() < 1e-9,
                "round {round}: solver {} oracle {}",
                solved.value,
                oracle
            );
        }
    }

    #[test]
    fn w1_on_line_matches_cdf_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let n = rng.gen_range(2..=10);
            let mut points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            points.sort_by(|a, b| a.total_cmp(b));
            points.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let n = points.len();
            let space = line(&points);
            let mu = crate::instances::random_probability(n, 0.02, &mut rng);
            let nu = crate::instances::random_probability(n, 0.02, &mut rng);
            let solved = solve_wp(&space, &mu, &nu, 1.0, 1e-9).unwrap();
            let direct = oracle_w1_line(&points, &mu, &nu);
            assert!((solved.value - direct).abs() < 1e-8);
        }
    }

    #[test]
    fn dual_certificate_is_tight() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
            let space = line(&points);
            let mu = crate::instances::random_probability(n, 0.05, &mut rng);
            let nu = crate::instances::random_probability(n, 0.05, &mut rng);
            let h = CostFunction::power(2.0).unwrap();
            let res = solve_cost(&space, &mu, &nu, &h, 1e-9).unwrap();
            assert!(res.diagnostics.max_dual_slack < 1e-7);
            assert!(res.diagnostics.max_entry_gap < 1e-7);
        }
    }

    #[test]
    fn relabeling_keeps_value() {
        let points = [0.0, 1.0, 3.0, 7.0];
        let space = line(&points);
        let mu = DiscreteMeasure::probability(vec![0.4, 0.1, 0.3, 0.2], 1e-9).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.1, 0.4, 0.2, 0.3], 1e-9).unwrap();
        let h = CostFunction::power(2.0).unwrap();
        let base = solve_cost(&space, &mu, &nu, &h, 1e-9).unwrap().value;

        let perm = [2usize, 0, 3, 1];
        let mut dist = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                dist[perm[i]][perm[j]] = (points[i] - points[j]).abs();
            }
        }
        let relabeled = MetricSpace::new(dist, None, 1e-9).unwrap();
        let mut mu2 = vec![0.0; 4];
        let mut nu2 = vec![0.0; 4];
        for i in 0..4 {
            mu2[perm[i]] = mu.weight(i);
            nu2[perm[i]] = nu.weight(i);
        }
        let mu2 = DiscreteMeasure::probability(mu2, 1e-9).unwrap();
        let nu2 = DiscreteMeasure::probability(nu2, 1e-9).unwrap();
        let permuted = solve_cost(&relabeled, &mu2, &nu2, &h, 1e-9).unwrap().value;
        assert!((base - permuted).abs() < 1e-9);
    }

    #[test]
    fn wp_below_winf() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n = rng.gen_range(2..=6);
            let points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
            let space = line(&points);
            let mu = crate::instances::random_probability(n, 0.05, &mut rng);
            let nu = crate::instances::random_probability(n, 0.05, &mut rng);
            let winf = solve_winf(&space, &mu, &nu, 1e-9).unwrap().value;
            for p in [1.0, 2.0, 4.0] {
                let wp = solve_wp(&space, &mu, &nu, p, 1e-9).unwrap().value;
                assert!(wp <= winf + 1e-9, "p {p}: {wp} vs {winf}");
            }
        }
    }
}
