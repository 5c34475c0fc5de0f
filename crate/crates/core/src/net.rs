//! Separated nets and the nearest-net-point partition used by the surgery.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::space::MetricSpace;

/// A maximal 4r-separated net on a support together with the partition of an
/// enlarged carrier set into nearest-net cells.
#[derive(Debug, Clone, Serialize)]
pub struct NetPartition {
    pub r: f64,
    pub eps: f64,
    /// Net points, in the order the greedy pass selected them.
    pub net: Vec<usize>,
    /// All partitioned points, ascending.
    pub carrier: Vec<usize>,
    /// `cell_of[p] = Some(cell index)` for carrier points, `None` elsewhere.
    pub cell_of: Vec<Option<usize>>,
    /// Cell members, ascending within each cell; `cells[k]` belongs to
    /// `net[k]`.
    pub cells: Vec<Vec<usize>>,
}

impl NetPartition {
    pub fn cell_count(&self) -> usize {
        self.net.len()
    }

    /// Diameter of cell `k` (0 for singletons).
    pub fn cell_diameter(&self, space: &MetricSpace, k: usize) -> f64 {
        space.diameter_of(&self.cells[k])
    }
}

/// Greedy maximal 4r-separated subset of `support`, scanned in ascending
/// point-index order: a point joins iff it lies more than `4r` from every
/// point already in the net.
pub fn separated_net(space: &MetricSpace, support: &[usize], r: f64) -> Vec<usize> {
    let mut sorted: Vec<usize> = support.to_vec();
    sorted.sort_unstable();
    let mut net: Vec<usize> = Vec::new();
    for &p in &sorted {
        if net.iter().all(|&q| space.dist(p, q) > 4.0 * r) {
            net.push(p);
        }
    }
    net
}

/// Partition `carrier` by nearest net point, ties to the lowest cell index.
///
/// Preconditions checked here: `r > 0`, the net is nonempty and every carrier
/// point lies within `eps` (plus tolerance) of `support`. The resulting cells
/// satisfy the separation geometry — each point lands within `4r + eps` of its
/// net point, so cell diameters stay below `8r + 2*eps` — and that is
/// re-verified before returning.
pub fn build_partition(
    space: &MetricSpace,
    support: &[usize],
    net: &[usize],
    carrier: &[usize],
    r: f64,
    eps: f64,
    tol: f64,
) -> Result<NetPartition> {
    if r <= 0.0 {
        return Err(CoreError::Precondition(format!(
            "net radius must be positive, got {}",
            r
        )));
    }
    if net.is_empty() {
        return Err(CoreError::Precondition("empty net".into()));
    }
    let mut carrier: Vec<usize> = carrier.to_vec();
    carrier.sort_unstable();
    carrier.dedup();
    for &p in &carrier {
        let d = space.dist_to_set(p, support);
        if d > eps + tol {
            return Err(CoreError::Precondition(format!(
                "carrier point {} lies {} from the support, beyond eps = {}",
                p, d, eps
            )));
        }
    }
    let mut cell_of = vec![None; space.len()];
    let mut cells = vec![Vec::new(); net.len()];
    for &p in &carrier {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, &q) in net.iter().enumerate() {
            let d = space.dist(p, q);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        cell_of[p] = Some(best);
        cells[best].push(p);
    }
    let part = NetPartition {
        r,
        eps,
        net: net.to_vec(),
        carrier,
        cell_of,
        cells,
    };
    verify_partition(space, support, &part, tol)?;
    Ok(part)
}

/// Geometry the construction promises; violations indicate a bug or an input
/// whose net was not built for this support.
fn verify_partition(
    space: &MetricSpace,
    support: &[usize],
    part: &NetPartition,
    tol: f64,
) -> Result<()> {
    let (r, eps) = (part.r, part.eps);
    for (a, &x) in part.net.iter().enumerate() {
        for &y in &part.net[a + 1..] {
            if space.dist(x, y) <= 4.0 * r {
                return Err(CoreError::Internal(format!(
                    "net points {} and {} are only {} apart (need > {})",
                    x,
                    y,
                    space.dist(x, y),
                    4.0 * r
                )));
            }
        }
    }
    // Maximality: every support point within 4r of the net.
    for &p in support {
        if space.dist_to_set(p, &part.net) > 4.0 * r {
            return Err(CoreError::Internal(format!(
                "support point {} farther than 4r from the net",
                p
            )));
        }
    }
    for (k, cell) in part.cells.iter().enumerate() {
        let diam = space.diameter_of(cell);
        if diam > 8.0 * r + 2.0 * eps + tol {
            return Err(CoreError::Internal(format!(
                "cell {} has diameter {} > 8r + 2eps = {}",
                k,
                diam,
                8.0 * r + 2.0 * eps
            )));
        }
    }
    // B(net[k], 2r) cut to the carrier must stay inside cell k.
    for &p in &part.carrier {
        let k = part.cell_of[p].expect("carrier point has a cell");
        for (l, &q) in part.net.iter().enumerate() {
            if l != k && space.dist(p, q) < 2.0 * r {
                return Err(CoreError::Internal(format!(
                    "carrier point {} lies within 2r of net point {} but belongs to cell {}",
                    p, q, k
                )));
            }
        }
    }
    Ok(())
}
