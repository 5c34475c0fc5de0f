//! Randomized cross-module invariants.

use proptest::prelude::*;

use otkit_core::bounds::{chain_condition, dyadic_thresholds, rho_estimate, verify_rho};
use otkit_core::cost::CostFunction;
use otkit_core::instances::{space_from_points_1d, space_from_points_2d};
use otkit_core::measure::{ball_mass, BallMode, DiscreteMeasure};
use otkit_core::monotone::build_collapse_plan;
use otkit_core::solver::{feasible_at, solve_cost, solve_winf, solve_wp};
use otkit_core::space::{hausdorff_distance, MetricSpace};
use otkit_core::surgery::{surgery_transport, winf_upper_bound_via_surgery, SurgeryParams};

const TOL: f64 = 1e-9;

fn normalized(raw: Vec<f64>) -> DiscreteMeasure {
    let sum: f64 = raw.iter().sum();
    DiscreteMeasure::probability(raw.into_iter().map(|w| w / sum).collect(), TOL).unwrap()
}

fn cumulative(gaps: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0];
    for g in gaps {
        pts.push(pts.last().unwrap() + g);
    }
    pts
}

/// Deliberately bad coupling: first source index feeds the last target
/// index, maximizing displacement.
fn antitone_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> otkit_core::plan::TransportPlan {
    let mut acc = std::collections::BTreeMap::new();
    let mut rows: Vec<(usize, f64)> = (0..mu.len())
        .filter(|&i| mu.weight(i) > 0.0)
        .map(|i| (i, mu.weight(i)))
        .collect();
    let mut cols: Vec<(usize, f64)> = (0..nu.len())
        .filter(|&j| nu.weight(j) > 0.0)
        .map(|j| (j, nu.weight(j)))
        .collect();
    cols.reverse();
    let (mut a, mut b) = (0, 0);
    while a < rows.len() && b < cols.len() {
        let m = rows[a].1.min(cols[b].1);
        *acc.entry((rows[a].0, cols[b].0)).or_insert(0.0) += m;
        rows[a].1 -= m;
        cols[b].1 -= m;
        if rows[a].1 <= 1e-15 {
            a += 1;
        }
        if b < cols.len() && cols[b].1 <= 1e-15 {
            b += 1;
        }
    }
    otkit_core::plan::TransportPlan::from_accumulated(mu.len(), acc).unwrap()
}

prop_compose! {
    /// Line instance with two strictly positive measures on every point.
    fn instance()(n in 2usize..=7)(
        gaps in prop::collection::vec(0.1f64..2.0, n - 1),
        mw in prop::collection::vec(0.05f64..1.0, n),
        nw in prop::collection::vec(0.05f64..1.0, n),
    ) -> (MetricSpace, DiscreteMeasure, DiscreteMeasure) {
        let space = space_from_points_1d(&cumulative(&gaps)).unwrap();
        (space, normalized(mw), normalized(nw))
    }
}

prop_compose! {
    /// Same but with independently sparse supports.
    fn sparse_instance()(n in 3usize..=7)(
        gaps in prop::collection::vec(0.1f64..2.0, n - 1),
        mmask in prop::collection::vec(prop::bool::ANY, n),
        nmask in prop::collection::vec(prop::bool::ANY, n),
        mw in prop::collection::vec(0.05f64..1.0, n),
        nw in prop::collection::vec(0.05f64..1.0, n),
    ) -> (MetricSpace, DiscreteMeasure, DiscreteMeasure) {
        let space = space_from_points_1d(&cumulative(&gaps)).unwrap();
        let pick = |mask: &[bool], w: &[f64]| -> DiscreteMeasure {
            let mut masked: Vec<f64> = mask
                .iter()
                .zip(w)
                .map(|(&keep, &x)| if keep { x } else { 0.0 })
                .collect();
            if masked.iter().all(|&x| x == 0.0) {
                masked[0] = 1.0;
            }
            normalized(masked)
        };
        (space, pick(&mmask, &mw), pick(&nmask, &nw))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn wp_never_exceeds_winf((space, mu, nu) in sparse_instance(), p in 1.0f64..4.0) {
        let winf = solve_winf(&space, &mu, &nu, TOL).unwrap().value;
        let wp = solve_wp(&space, &mu, &nu, p, TOL).unwrap().value;
        prop_assert!(wp <= winf + 1e-7 * (1.0 + winf), "wp = {wp}, winf = {winf}");
    }

    #[test]
    fn hausdorff_never_exceeds_winf((space, mu, nu) in sparse_instance()) {
        let winf = solve_winf(&space, &mu, &nu, TOL).unwrap().value;
        let dh = hausdorff_distance(&space, &mu.support(0.0), &nu.support(0.0)).unwrap();
        prop_assert!(dh <= winf + 1e-9, "dh = {dh}, winf = {winf}");
    }

    #[test]
    fn solvers_ignore_labels((space, mu, nu) in instance(), p in 1.0f64..3.0, shift in 0usize..7) {
        let n = space.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                dist[perm[i]][perm[j]] = space.dist(i, j);
            }
        }
        let relabeled = MetricSpace::new(dist, None, TOL).unwrap();
        let push = |m: &DiscreteMeasure| {
            let mut w = vec![0.0; n];
            for i in 0..n {
                w[perm[i]] = m.weight(i);
            }
            DiscreteMeasure::probability(w, TOL).unwrap()
        };
        let (pmu, pnu) = (push(&mu), push(&nu));
        let h = CostFunction::power(p).unwrap();
        let a = solve_cost(&space, &mu, &nu, &h, TOL).unwrap().value;
        let b = solve_cost(&relabeled, &pmu, &pnu, &h, TOL).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        let wa = solve_winf(&space, &mu, &nu, TOL).unwrap().value;
        let wb = solve_winf(&relabeled, &pmu, &pnu, TOL).unwrap().value;
        prop_assert_eq!(wa, wb);
    }

    #[test]
    fn feasibility_is_monotone_in_threshold((space, mu, nu) in sparse_instance(), k1 in 0usize..30, k2 in 0usize..30) {
        let mut ts: Vec<f64> = Vec::new();
        for i in 0..space.len() {
            for j in 0..space.len() {
                ts.push(space.dist(i, j));
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let lo = ts[k1.min(ts.len() - 1).min(k2.min(ts.len() - 1))];
        let hi = ts[k1.min(ts.len() - 1).max(k2.min(ts.len() - 1))];
        if feasible_at(&space, &mu, &nu, lo, TOL).unwrap().is_some() {
            prop_assert!(feasible_at(&space, &mu, &nu, hi, TOL).unwrap().is_some());
        }
    }

    #[test]
    fn winf_is_the_least_feasible_distance((space, mu, nu) in sparse_instance()) {
        let value = solve_winf(&space, &mu, &nu, TOL).unwrap().value;
        prop_assert!(feasible_at(&space, &mu, &nu, value, TOL).unwrap().is_some());
        let mut below: Vec<f64> = Vec::new();
        for &i in &mu.support(0.0) {
            for &j in &nu.support(0.0) {
                let d = space.dist(i, j);
                if d < value {
                    below.push(d);
                }
            }
        }
        below.sort_by(f64::total_cmp);
        below.dedup();
        for t in below {
            prop_assert!(
                feasible_at(&space, &mu, &nu, t, TOL).unwrap().is_none(),
                "threshold {t} below the reported optimum {value} is feasible"
            );
        }
    }

    #[test]
    fn duals_certify_optimality((space, mu, nu) in sparse_instance(), p in 1.0f64..3.0) {
        let h = CostFunction::power(p).unwrap();
        let res = solve_cost(&space, &mu, &nu, &h, TOL).unwrap();
        let d = &res.diagnostics;
        let mut max_cost = 0.0f64;
        for &i in &mu.support(0.0) {
            for &j in &nu.support(0.0) {
                let c = h.eval(space.dist(i, j));
                max_cost = max_cost.max(c.abs());
                prop_assert!(d.dual_row[i] + d.dual_col[j] <= c + 1e-6 * (1.0 + c.abs()));
            }
        }
        for e in res.plan.entries() {
            let c = h.eval(space.dist(e.row, e.col));
            let gap = (c - d.dual_row[e.row] - d.dual_col[e.col]).abs();
            prop_assert!(gap <= 1e-6 * (1.0 + max_cost), "entry gap {gap}");
        }
        // weak duality meets the primal value at the optimum
        let dual_value: f64 = (0..space.len())
            .map(|i| d.dual_row[i] * mu.weight(i) + d.dual_col[i] * nu.weight(i))
            .sum();
        prop_assert!((dual_value - res.value).abs() <= 1e-6 * (1.0 + max_cost));
    }

    #[test]
    fn ball_mass_profile_is_a_positive_nondecreasing_step((space, mu, _nu) in instance(), t1 in 0.0f64..12.0, t2 in 0.0f64..12.0) {
        let m = ball_mass(&space, &mu, BallMode::Open, TOL).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(m.eval(lo) <= m.eval(hi));
        if lo > 0.0 {
            prop_assert!(m.eval(lo) > 0.0);
        }
        prop_assert_eq!(m.eval(0.0), 0.0);
    }

    #[test]
    fn surgery_output_is_a_bounded_coupling((space, mu, nu) in instance(), worst in prop::bool::ANY) {
        let h = CostFunction::power(1.0).unwrap();
        let lambda = if worst {
            antitone_coupling(&mu, &nu)
        } else {
            solve_cost(&space, &mu, &nu, &h, TOL).unwrap().plan
        };
        let support: Vec<usize> = (0..space.len()).collect();
        let delta = support
            .windows(2)
            .map(|w| space.dist(w[0], w[1]))
            .fold(0.0f64, f64::max);
        let Some(found) =
            winf_upper_bound_via_surgery(&space, &mu, &nu, &lambda, delta, 0.0, TOL).unwrap()
        else {
            return Ok(()); // no radius admits this plan's long-haul mass
        };
        let out = surgery_transport(
            &space,
            &mu,
            &nu,
            &lambda,
            SurgeryParams { r: found.r, eps: 0.0, delta },
            TOL,
        )
        .unwrap();
        prop_assert!(out.eta.marginal_error(&mu, &nu) <= 1e-9);
        let l = &out.ledger;
        prop_assert!(out.sup_displacement <= l.sup_bound + 1e-9);
        prop_assert!(l.max_short_disp <= l.short_bound + 1e-9);
        prop_assert!(l.max_chain_disp <= l.chain_bound + 1e-9);
        prop_assert!(l.max_diag_disp <= l.diag_bound + 1e-9);
    }

    #[test]
    fn slack_profile_survives_reverification(n in 5usize..=10, g in 0.2f64..1.5) {
        let pts: Vec<f64> = (0..n).map(|k| k as f64 * g).collect();
        let space = space_from_points_1d(&pts).unwrap();
        let mu = DiscreteMeasure::uniform_on(n, &(0..n).collect::<Vec<_>>());
        let h = CostFunction::power(2.0).unwrap();
        let diam = (n - 1) as f64 * g;
        // stop the dyadic ladder before pairs lose their interior points:
        // the last rung diam/2^levels must stay >= two grid steps
        let levels = ((n - 1) as f64 / 2.0).log2().floor() as usize;
        let thresholds = dyadic_thresholds(diam, levels);
        let rho = rho_estimate(&space, &mu, &h, &thresholds, TOL).unwrap();
        prop_assert!(verify_rho(&space, &mu, &h, &rho, TOL).is_none());
    }

    #[test]
    fn chain_verdicts_survive_rescaling(n in 4usize..=9, g in 0.3f64..1.2, p in prop::sample::select(vec![1.5f64, 2.0, 3.0])) {
        let h = CostFunction::power(p).unwrap();
        let build = |scale: f64| {
            let pts: Vec<f64> = (0..n).map(|k| k as f64 * g * scale).collect();
            let space = space_from_points_1d(&pts).unwrap();
            let mu = DiscreteMeasure::uniform_on(n, &(0..n).collect::<Vec<_>>());
            chain_condition(&space, &mu, &h, TOL)
        };
        let one = build(1.0);
        let two = build(2.0);
        prop_assert_eq!(one.pairs.len(), two.pairs.len());
        for (a, b) in one.pairs.iter().zip(two.pairs.iter()) {
            prop_assert_eq!(a.passes, b.passes, "pair ({}, {})", a.x, a.y);
        }
    }

    #[test]
    fn collapse_plans_are_couplings((space, mu, _nu) in instance(), frac in 0.05f64..1.0, y_pick in 0usize..7) {
        let _ = &space;
        let support = mu.support(0.0);
        let y = support[y_pick % support.len()];
        let set: Vec<usize> = support.iter().copied().filter(|&i| i != y).collect();
        if set.is_empty() {
            return Ok(());
        }
        let set_mass: f64 = set.iter().map(|&i| mu.weight(i)).sum();
        let (plan, nu_t) = build_collapse_plan(&mu, &set, y, frac * set_mass, TOL).unwrap();
        prop_assert!(plan.validate_coupling(&mu, &nu_t, 1e-9).is_ok());
    }
}

#[test]
fn hausdorff_per_term_bounds_winf_on_grids() {
    let pts: Vec<(f64, f64)> = (0..9).map(|i| ((i % 3) as f64, (i / 3) as f64)).collect();
    let space = space_from_points_2d(&pts).unwrap();
    let mu = DiscreteMeasure::uniform_on(9, &(0..9).collect::<Vec<_>>());
    for sub in [vec![0, 4, 8], vec![1, 3, 5, 7], vec![0, 1, 2]] {
        let nu = DiscreteMeasure::uniform_on(9, &sub);
        let winf = solve_winf(&space, &mu, &nu, TOL).unwrap().value;
        let dh = hausdorff_distance(&space, &mu.support(0.0), &nu.support(0.0)).unwrap();
        assert!(dh <= winf + 1e-9);
    }
}
