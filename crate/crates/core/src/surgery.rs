//! Rewrites an arbitrary coupling into one with bounded sup-displacement.
//!
//! Given a coupling whose mass at distance ≥ r is less than half the ball
//! mass m(r), the carrier is cut into cells around a 4r-separated net and the
//! plan is reassembled from three families: short cross-cell mass spread as a
//! product within the same cell pair, long-haul mass walked along chains of
//! support-adjacent cells, and a diagonal product fill absorbing whatever the
//! ledger leaves in each cell. Every entry of the result moves mass by at
//! most `17r + 4*eps + delta`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::measure::{ball_mass, BallMassProfile, BallMode, DiscreteMeasure};
use crate::net::{build_partition, separated_net, NetPartition};
use crate::plan::{plan_sup_distance, TransportPlan};
use crate::space::{is_delta_connected, MetricSpace};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurgeryParams {
    /// Net scale; cells have diameter ≤ 8r + 2·eps.
    pub r: f64,
    /// Target support spread: supp ν must lie within eps of supp μ.
    pub eps: f64,
    /// Connectivity scale of supp μ, also the slack of each chain step.
    pub delta: f64,
}

/// Verdict of the long-haul mass test `lambda({d ≥ r}) < m(r)/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AssumptionCheck {
    pub holds: bool,
    pub long_mass: f64,
    pub half_ball_mass: f64,
    /// `half_ball_mass - long_mass`; positive iff the test passes.
    pub margin: f64,
}

/// Long-haul mass rerouted along one cell chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainRecord {
    pub from_cell: usize,
    pub to_cell: usize,
    /// The original plan's mass on (from_cell × to_cell) at distance ≥ r.
    pub mass: f64,
    /// Distinct cells from `from_cell` to `to_cell`; consecutive cells hold
    /// support points within delta of each other.
    pub cells: Vec<usize>,
}

/// Mass and displacement accounting for the three families.
#[derive(Debug, Clone, Serialize)]
pub struct PartLedger {
    /// Total short cross-cell mass (family a).
    pub short_mass: f64,
    /// Total long-haul mass taken off the original plan.
    pub long_mass: f64,
    /// Total mass of chain-step entries (each chain of L cells contributes
    /// its mass L−1 times).
    pub chain_step_mass: f64,
    /// Total diagonal fill Σ β_i (family c).
    pub diagonal_mass: f64,
    pub max_short_disp: f64,
    pub max_chain_disp: f64,
    pub max_diag_disp: f64,
    /// 17r + 4·eps (family a entrywise bound).
    pub short_bound: f64,
    /// 16r + 4·eps + delta (family b entrywise bound).
    pub chain_bound: f64,
    /// 8r + 2·eps (family c entrywise bound).
    pub diag_bound: f64,
    /// 17r + 4·eps + delta (overall bound).
    pub sup_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurgeryOutput {
    #[serde(skip)]
    pub eta: TransportPlan,
    pub params: SurgeryParams,
    #[serde(skip)]
    pub partition: NetPartition,
    pub cell_count: usize,
    /// Short cross-cell masses (from_cell, to_cell, mass), from ≠ to.
    pub short_cross: Vec<(usize, usize, f64)>,
    pub chains: Vec<ChainRecord>,
    /// Diagonal fill per cell.
    pub betas: Vec<f64>,
    pub ledger: PartLedger,
    pub sup_displacement: f64,
}

/// Entries at distance ≥ r (with a small guard against float ties) count as
/// long-haul. The same predicate decides set membership everywhere so the
/// mass ledger closes exactly.
fn is_long(d: f64, r: f64, tol: f64) -> bool {
    d >= r - tol
}

/// Does `lambda` carry less than `m(r)/2` mass at distance ≥ r?
pub fn check_assumption(
    space: &MetricSpace,
    lambda: &TransportPlan,
    m: &BallMassProfile,
    r: f64,
    tol: f64,
) -> AssumptionCheck {
    let long_mass: f64 = lambda
        .entries()
        .iter()
        .filter(|e| is_long(space.dist(e.row, e.col), r, tol))
        .map(|e| e.mass)
        .sum();
    let half = 0.5 * m.eval(r);
    AssumptionCheck {
        holds: long_mass < half,
        long_mass,
        half_ball_mass: half,
        margin: half - long_mass,
    }
}

/// Cells that contain support points, with pairwise support-to-support
/// distances; edge iff that distance is ≤ delta (+ tol).
fn cell_adjacency(
    space: &MetricSpace,
    part: &NetPartition,
    support: &[usize],
    delta: f64,
    tol: f64,
) -> Vec<Vec<usize>> {
    let k = part.cell_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &p in support {
        if let Some(c) = part.cell_of[p] {
            members[c].push(p);
        }
    }
    let mut adj = vec![Vec::new(); k];
    for a in 0..k {
        if members[a].is_empty() {
            continue;
        }
        for b in a + 1..k {
            if members[b].is_empty() {
                continue;
            }
            if space.dist_between_sets(&members[a], &members[b]) <= delta + tol {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Shortest chain of distinct cells from `i` to `j` where consecutive cells
/// hold support points within `delta` of each other. BFS runs from the
/// target so the forward walk can always pick the lowest-index next cell,
/// making ties deterministic.
pub fn build_cell_chain(
    space: &MetricSpace,
    part: &NetPartition,
    mu: &DiscreteMeasure,
    i: usize,
    j: usize,
    delta: f64,
    tol: f64,
) -> Result<Vec<usize>> {
    let k = part.cell_count();
    if i >= k || j >= k {
        return Err(CoreError::Precondition(format!(
            "cell index out of range: {} or {} with {} cells",
            i, j, k
        )));
    }
    if i == j {
        return Ok(vec![i]);
    }
    let support = mu.support(0.0);
    let adj = cell_adjacency(space, part, &support, delta, tol);
    let has_support =
        |c: usize| part.cells[c].iter().any(|&p| mu.weight(p) > 0.0);
    if !has_support(i) || !has_support(j) {
        return Err(CoreError::Precondition(format!(
            "cells {} and {} must both contain source support",
            i, j
        )));
    }
    // hop counts to j
    let mut hops = vec![usize::MAX; k];
    hops[j] = 0;
    let mut queue = std::collections::VecDeque::from([j]);
    while let Some(c) = queue.pop_front() {
        for &d in &adj[c] {
            if hops[d] == usize::MAX {
                hops[d] = hops[c] + 1;
                queue.push_back(d);
            }
        }
    }
    if hops[i] == usize::MAX {
        return Err(CoreError::Precondition(format!(
            "no delta-chain of cells joins cell {} to cell {} at delta = {}",
            i, j, delta
        )));
    }
    let mut chain = vec![i];
    let mut cur = i;
    while cur != j {
        let next = adj[cur]
            .iter()
            .copied()
            .filter(|&c| hops[c] + 1 == hops[cur])
            .min()
            .expect("BFS-reachable cell must have a descent neighbor");
        chain.push(next);
        cur = next;
    }
    Ok(chain)
}

struct CellMasses {
    mu: Vec<f64>,
    nu: Vec<f64>,
}

fn cell_masses(part: &NetPartition, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> CellMasses {
    let k = part.cell_count();
    let mut out = CellMasses { mu: vec![0.0; k], nu: vec![0.0; k] };
    for (c, cell) in part.cells.iter().enumerate() {
        for &p in cell {
            out.mu[c] += mu.weight(p);
            out.nu[c] += nu.weight(p);
        }
    }
    out
}

/// Spread `mass` over `cells[from] × cells[to]` as the product of the
/// normalized restrictions of mu and nu, accumulating into `acc` and
/// tracking the largest displacement.
fn spread_product(
    space: &MetricSpace,
    part: &NetPartition,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    masses: &CellMasses,
    from: usize,
    to: usize,
    mass: f64,
    acc: &mut BTreeMap<(usize, usize), f64>,
    max_disp: &mut f64,
) -> Result<()> {
    if mass <= 0.0 {
        return Ok(());
    }
    let (mu_c, nu_c) = (masses.mu[from], masses.nu[to]);
    if mu_c <= 0.0 {
        return Err(CoreError::Precondition(format!(
            "cell {} carries no source mass to spread",
            from
        )));
    }
    if nu_c <= 0.0 {
        return Err(CoreError::Precondition(format!(
            "empty target cell {}: no mass to receive rerouted flow",
            to
        )));
    }
    for &x in &part.cells[from] {
        let wx = mu.weight(x);
        if wx <= 0.0 {
            continue;
        }
        for &y in &part.cells[to] {
            let wy = nu.weight(y);
            if wy <= 0.0 {
                continue;
            }
            *acc.entry((x, y)).or_insert(0.0) += mass * wx * wy / (mu_c * nu_c);
            let d = space.dist(x, y);
            if d > *max_disp {
                *max_disp = d;
            }
        }
    }
    Ok(())
}

/// Rebuild `lambda` into a coupling of the same marginals whose every entry
/// moves mass at most `17r + 4·eps + delta`, following the three-family
/// construction. Verifies marginals, positivity of the diagonal fill, the
/// per-family displacement bounds, and per-chain flux cancellation.
pub fn surgery_transport(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    lambda: &TransportPlan,
    params: SurgeryParams,
    tol: f64,
) -> Result<SurgeryOutput> {
    let SurgeryParams { r, eps, delta } = params;
    if r <= 0.0 {
        return Err(CoreError::Precondition(format!("r must be positive, got {r}")));
    }
    if eps < 0.0 || delta < 0.0 {
        return Err(CoreError::Precondition(
            "eps and delta must be nonnegative".into(),
        ));
    }
    lambda.validate_coupling(mu, nu, tol * 4.0 + 1e-10)?;

    let supp_mu = mu.support(0.0);
    let supp_nu = nu.support(0.0);
    if supp_mu.is_empty() {
        return Err(CoreError::Precondition("source measure has empty support".into()));
    }
    for &y in &supp_nu {
        let d = space.dist_to_set(y, &supp_mu);
        if d > eps + tol {
            return Err(CoreError::Precondition(format!(
                "target support point {} lies {} from the source support, beyond eps = {}",
                y, d, eps
            )));
        }
    }
    if !is_delta_connected(space, &supp_mu, delta, tol) {
        return Err(CoreError::Precondition(format!(
            "source support is not delta-connected at delta = {delta}"
        )));
    }

    let m = ball_mass(space, mu, BallMode::Open, tol)?;
    let check = check_assumption(space, lambda, &m, r, tol);
    if !check.holds {
        return Err(CoreError::Precondition(format!(
            "long-haul mass too large: {} at distance >= {} against half ball mass {}",
            check.long_mass, r, check.half_ball_mass
        )));
    }

    let mut carrier = supp_mu.clone();
    carrier.extend_from_slice(&supp_nu);
    carrier.sort_unstable();
    carrier.dedup();
    let net = separated_net(space, &supp_mu, r);
    let part = build_partition(space, &supp_mu, &net, &carrier, r, eps, tol)?;
    let k = part.cell_count();
    let masses = cell_masses(&part, mu, nu);

    // Split the plan's mass by cell pair and haul length.
    let mut short: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut long: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in lambda.entries() {
        let (ci, cj) = match (part.cell_of[e.row], part.cell_of[e.col]) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(CoreError::Internal(format!(
                    "plan entry ({}, {}) falls outside the partitioned carrier",
                    e.row, e.col
                )))
            }
        };
        let bucket = if is_long(space.dist(e.row, e.col), r, tol) {
            &mut long
        } else {
            &mut short
        };
        *bucket.entry((ci, cj)).or_insert(0.0) += e.mass;
    }

    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut ledger = PartLedger {
        short_mass: 0.0,
        long_mass: 0.0,
        chain_step_mass: 0.0,
        diagonal_mass: 0.0,
        max_short_disp: 0.0,
        max_chain_disp: 0.0,
        max_diag_disp: 0.0,
        short_bound: 17.0 * r + 4.0 * eps,
        chain_bound: 16.0 * r + 4.0 * eps + delta,
        diag_bound: 8.0 * r + 2.0 * eps,
        sup_bound: 17.0 * r + 4.0 * eps + delta,
    };

    // Family (a): short cross-cell mass, spread within its own cell pair.
    // Within-cell short mass stays in the diagonal ledger instead.
    let mut short_cross: Vec<(usize, usize, f64)> = Vec::new();
    let mut short_out = vec![0.0f64; k]; // Σ_{j≠i} short[(i,j)]
    for (&(i, j), &mass) in &short {
        if i == j || mass <= 0.0 {
            continue;
        }
        short_cross.push((i, j, mass));
        short_out[i] += mass;
        ledger.short_mass += mass;
        spread_product(
            space, &part, mu, nu, &masses, i, j, mass, &mut acc, &mut ledger.max_short_disp,
        )?;
    }

    // Family (b): long-haul mass walks a chain of support-adjacent cells;
    // each step hands the full chain mass to the next cell. Within-cell
    // long-haul mass (i == j) needs no chain: the diagonal fill below
    // already bounds its displacement by the cell diameter.
    let mut chains: Vec<ChainRecord> = Vec::new();
    let mut chain_out = vec![0.0f64; k]; // Σ over chain steps leaving cell i
    for (&(i, j), &mass) in &long {
        if mass <= 0.0 {
            continue;
        }
        ledger.long_mass += mass;
        if i == j {
            continue;
        }
        let cells = build_cell_chain(space, &part, mu, i, j, delta, tol)?;
        // net flux must be -mass at i, +mass at j, zero elsewhere
        let mut flux = vec![0.0f64; k];
        for step in cells.windows(2) {
            let (a, b) = (step[0], step[1]);
            chain_out[a] += mass;
            ledger.chain_step_mass += mass;
            flux[a] -= mass;
            flux[b] += mass;
            spread_product(
                space, &part, mu, nu, &masses, a, b, mass, &mut acc, &mut ledger.max_chain_disp,
            )?;
        }
        for (c, &f) in flux.iter().enumerate() {
            let want = if c == i {
                -mass
            } else if c == j {
                mass
            } else {
                0.0
            };
            if (f - want).abs() > tol {
                return Err(CoreError::Internal(format!(
                    "chain {}->{} flux at cell {} is {}, expected {}",
                    i, j, c, f, want
                )));
            }
        }
        chains.push(ChainRecord { from_cell: i, to_cell: j, mass, cells });
    }

    // Family (c): per-cell diagonal fill with whatever the ledger leaves.
    let mut betas = vec![0.0f64; k];
    for i in 0..k {
        let beta = masses.mu[i] - short_out[i] - chain_out[i];
        if beta < -tol {
            return Err(CoreError::Internal(format!(
                "negative diagonal mass {} in cell {}",
                beta, i
            )));
        }
        betas[i] = beta.max(0.0);
        ledger.diagonal_mass += betas[i];
        spread_product(
            space, &part, mu, nu, &masses, i, i, betas[i], &mut acc, &mut ledger.max_diag_disp,
        )?;
    }

    let eta = TransportPlan::from_accumulated(space.len(), acc)?;
    let vtol = 8.0 * tol + 1e-12 * (1.0 + space.len() as f64);
    eta.validate_coupling(mu, nu, vtol)?;

    let disp_slack = tol * (1.0 + ledger.sup_bound);
    if ledger.max_short_disp > ledger.short_bound + disp_slack
        || ledger.max_chain_disp > ledger.chain_bound + disp_slack
        || ledger.max_diag_disp > ledger.diag_bound + disp_slack
    {
        return Err(CoreError::Internal(format!(
            "displacement bound violated: short {}/{}, chain {}/{}, diag {}/{}",
            ledger.max_short_disp,
            ledger.short_bound,
            ledger.max_chain_disp,
            ledger.chain_bound,
            ledger.max_diag_disp,
            ledger.diag_bound
        )));
    }
    let sup_displacement = plan_sup_distance(space, &eta, 0.0);
    if sup_displacement > ledger.sup_bound + disp_slack {
        return Err(CoreError::Internal(format!(
            "sup displacement {} exceeds {}",
            sup_displacement, ledger.sup_bound
        )));
    }

    Ok(SurgeryOutput {
        eta,
        params,
        cell_count: k,
        partition: part,
        short_cross,
        chains,
        betas,
        ledger,
        sup_displacement,
    })
}

/// The least achievable `17r + 4·eps + delta` over net scales r at which the
/// long-haul test passes for `lambda`, scanning the step points of both the
/// ball-mass profile and the plan's displacement profile. `None` means no
/// scanned radius qualifies.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurgeryBound {
    pub r: f64,
    pub bound: f64,
}

pub fn winf_upper_bound_via_surgery(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    lambda: &TransportPlan,
    delta: f64,
    eps: f64,
    tol: f64,
) -> Result<Option<SurgeryBound>> {
    lambda.validate_coupling(mu, nu, tol * 4.0 + 1e-10)?;
    let supp_mu = mu.support(0.0);
    if !is_delta_connected(space, &supp_mu, delta, tol) {
        return Err(CoreError::Precondition(format!(
            "source support is not delta-connected at delta = {delta}"
        )));
    }
    let m = ball_mass(space, mu, BallMode::Open, tol)?;
    let mut candidates: Vec<f64> = m
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| b > 0.0)
        .collect();
    for e in lambda.entries() {
        let d = space.dist(e.row, e.col);
        if d > 0.0 {
            candidates.push(d);
        }
    }
    // A radius above every displacement always passes the long-haul test;
    // include one so the scan degrades to a finite (if weak) bound.
    let dmax = plan_sup_distance(space, lambda, 0.0).max(
        m.breakpoints().last().copied().unwrap_or(0.0),
    );
    candidates.push(dmax * (1.0 + 1e-9) + tol);
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    for &r in &candidates {
        if check_assumption(space, lambda, &m, r, tol).holds {
            return Ok(Some(SurgeryBound {
                r,
                bound: 17.0 * r + 4.0 * eps + delta,
            }));
        }
    }
    Ok(None)
}
