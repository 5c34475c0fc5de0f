//! Finite metric spaces given by explicit distance matrices.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A finite (pseudo)metric space on points `0..n`.
///
/// The distance matrix is validated on construction: symmetric, nonnegative,
/// zero diagonal and triangle inequality within the given tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

/// Every violation found while validating a candidate distance matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Entries that are NaN or infinite.
    pub nonfinite: Vec<(usize, usize)>,
    /// Strictly negative entries.
    pub negative: Vec<(usize, usize)>,
    /// Diagonal entries with |d(i,i)| > tol.
    pub diagonal: Vec<usize>,
    /// Pairs with |d(i,j) - d(j,i)| > tol.
    pub asymmetric: Vec<(usize, usize)>,
    /// Triples with d(i,k) > d(i,j) + d(j,k) + tol.
    pub triangle: Vec<(usize, usize, usize)>,
    /// Rows whose length differs from n.
    pub ragged: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.nonfinite.is_empty()
            && self.negative.is_empty()
            && self.diagonal.is_empty()
            && self.asymmetric.is_empty()
            && self.triangle.is_empty()
            && self.ragged.is_empty()
    }

    fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.ragged.is_empty() {
            parts.push(format!("{} ragged rows", self.ragged.len()));
        }
        if !self.nonfinite.is_empty() {
            parts.push(format!("{} non-finite entries", self.nonfinite.len()));
        }
        if !self.negative.is_empty() {
            parts.push(format!("{} negative entries", self.negative.len()));
        }
        if !self.diagonal.is_empty() {
            parts.push(format!("{} nonzero diagonal entries", self.diagonal.len()));
        }
        if !self.asymmetric.is_empty() {
            parts.push(format!("{} asymmetric pairs", self.asymmetric.len()));
        }
        if !self.triangle.is_empty() {
            parts.push(format!("{} triangle violations", self.triangle.len()));
        }
        parts.join(", ")
    }
}

/// Validate a candidate distance matrix, listing every violation.
pub fn validate_matrix(dist: &[Vec<f64>], tol: f64) -> ValidationReport {
    let n = dist.len();
    let mut report = ValidationReport::default();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            report.ragged.push(i);
        }
    }
    if !report.ragged.is_empty() {
        return report;
    }
    for i in 0..n {
        for j in 0..n {
            let d = dist[i][j];
            if !d.is_finite() {
                report.nonfinite.push((i, j));
            } else if d < 0.0 {
                report.negative.push((i, j));
            }
        }
    }
    if !report.nonfinite.is_empty() || !report.negative.is_empty() {
        return report;
    }
    for i in 0..n {
        if dist[i][i].abs() > tol {
            report.diagonal.push(i);
        }
        for j in (i + 1)..n {
            if (dist[i][j] - dist[j][i]).abs() > tol {
                report.asymmetric.push((i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] + tol {
                    report.triangle.push((i, j, k));
                }
            }
        }
    }
    report
}

impl MetricSpace {
    /// Build a validated space. Fails with a violation summary otherwise.
    pub fn new(dist: Vec<Vec<f64>>, labels: Option<Vec<String>>, tol: f64) -> Result<Self> {
        let report = validate_matrix(&dist, tol);
        if !report.is_valid() {
            return Err(CoreError::InvalidSpace(report.summary()));
        }
        if let Some(ref l) = labels {
            if l.len() != dist.len() {
                return Err(CoreError::InvalidSpace(format!(
                    "{} labels for {} points",
                    l.len(),
                    dist.len()
                )));
            }
        }
        Ok(MetricSpace {
            n: dist.len(),
            dist,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    /// Largest distance between points of `set` (0 for singletons).
    pub fn diameter_of(&self, set: &[usize]) -> f64 {
        let mut d = 0.0f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Distance from point `i` to the set (infinity for an empty set).
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter()
            .map(|&j| self.dist(i, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance between two point sets (infinity if either is empty).
    pub fn dist_between_sets(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &i in a {
            for &j in b {
                best = best.min(self.dist(i, j));
            }
        }
        best
    }
}

/// Hausdorff distance between two nonempty point sets of the same space.
pub fn hausdorff_distance(space: &MetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::Precondition(
            "hausdorff distance of an empty set".into(),
        ));
    }
    let one_sided = |from: &[usize], to: &[usize]| -> f64 {
        from.iter()
            .map(|&i| space.dist_to_set(i, to))
            .fold(0.0f64, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

/// Connected components of `points` under the relation d(x,y) <= delta.
///
/// A tolerance guard `delta + tol` keeps grid spacings computed in floating
/// point from splitting components spuriously. Components are returned sorted
/// by smallest member, members ascending.
pub fn delta_components(
    space: &MetricSpace,
    points: &[usize],
    delta: f64,
    tol: f64,
) -> Vec<Vec<usize>> {
    let m = points.len();
    let mut seen = vec![false; m];
    let mut components = Vec::new();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&k| points[k]);
    for &start in &order {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(k) = stack.pop() {
            comp.push(points[k]);
            for l in 0..m {
                if !seen[l] && space.dist(points[k], points[l]) <= delta + tol {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components.sort_by_key(|c| c[0]);
    components
}

/// True when `points` form a single component at scale `delta`.
pub fn is_delta_connected(space: &MetricSpace, points: &[usize], delta: f64, tol: f64) -> bool {
    !points.is_empty() && delta_components(space, points, delta, tol).len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    fn line(points: &[f64]) -> MetricSpace {
        crate::instances::space_from_points_1d(points).unwrap()
    }

    #[test]
    fn validates_a_proper_metric() {
        let s = line(&[0.0, 1.0, 3.0]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.dist(0, 2), 3.0);
        let report = validate_matrix(s.matrix(), DEFAULT_TOL);
        assert!(report.is_valid());
    }

    #[test]
    fn flags_asymmetry_and_triangle() {
        let bad = vec![
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 2.0],
            vec![10.0, 2.0, 0.0],
        ];
        let report = validate_matrix(&bad, DEFAULT_TOL);
        // 10 > 1 + 2: triangle fails in both orientations through point 1.
        assert!(!report.triangle.is_empty());
        assert!(report.asymmetric.is_empty());

        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let report = validate_matrix(&asym, DEFAULT_TOL);
        assert_eq!(report.asymmetric, vec![(0, 1)]);
        assert!(MetricSpace::new(asym, None, DEFAULT_TOL).is_err());
    }

    #[test]
    fn flags_nonzero_diagonal_and_negative() {
        let bad = vec![vec![0.5, 1.0], vec![1.0, 0.0]];
        let report = validate_matrix(&bad, DEFAULT_TOL);
        assert_eq!(report.diagonal, vec![0]);
        let neg = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert_eq!(validate_matrix(&neg, DEFAULT_TOL).negative.len(), 2);
    }

    #[test]
    fn hausdorff_two_overlapping_sets() {
        let s = line(&[0.0, 1.0, 3.0]);
        // {0,1} vs {1,3}: farthest of the first set from the second is 0 -> 1;
        // farthest of the second from the first is 3 -> 2.
        let d = hausdorff_distance(&s, &[0, 1], &[1, 2]).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(hausdorff_distance(&s, &[0], &[0]).unwrap(), 0.0);
        assert!(hausdorff_distance(&s, &[], &[0]).is_err());
    }

    #[test]
    fn components_split_at_the_gap() {
        // 0..=1.0 in steps of 0.1, plus an outlier at 2.0.
        let mut pts: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        pts.push(2.0);
        let s = line(&pts);
        let all: Vec<usize> = (0..s.len()).collect();
        let comps = delta_components(&s, &all, 0.15, DEFAULT_TOL);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 11);
        assert_eq!(comps[1], vec![11]);
        assert!(is_delta_connected(&s, &all, 1.0, DEFAULT_TOL));
    }

    #[test]
    fn zero_delta_separates_distinct_points() {
        let s = line(&[0.0, 1.0, 2.0]);
        let comps = delta_components(&s, &[0, 1, 2], 0.0, DEFAULT_TOL);
        assert_eq!(comps.len(), 3);
    }
}
