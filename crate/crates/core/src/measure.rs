//! Nonnegative measures with finite support and their ball-mass profiles.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::space::MetricSpace;

/// A nonnegative measure on the points of a [`MetricSpace`].
///
/// `total` is stored explicitly so that sub-probability pieces (as produced by
/// splitting a measure across clusters) keep their intended mass through
/// serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    total: f64,
}

impl DiscreteMeasure {
    /// Validated constructor: weights finite and nonnegative, summing to
    /// `total` within `tol`.
    pub fn new(weights: Vec<f64>, total: f64, tol: f64) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(CoreError::InvalidMeasure(format!(
                    "weight {} at index {} is not a finite nonnegative number",
                    w, i
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - total).abs() > tol {
            return Err(CoreError::InvalidMeasure(format!(
                "weights sum to {} but total declared as {}",
                sum, total
            )));
        }
        Ok(DiscreteMeasure { weights, total })
    }

    /// Convenience constructor for probability measures.
    pub fn probability(weights: Vec<f64>, tol: f64) -> Result<Self> {
        Self::new(weights, 1.0, tol)
    }

    /// Constructor that reads the total off the weights themselves.
    pub fn from_weights(weights: Vec<f64>, tol: f64) -> Result<Self> {
        let total = weights.iter().sum();
        Self::new(weights, total, tol)
    }

    /// Uniform probability measure on `support` inside a space of `n` points.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut weights = vec![0.0; n];
        let w = 1.0 / support.len() as f64;
        for &i in support {
            weights[i] = w;
        }
        DiscreteMeasure {
            weights,
            total: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Indices carrying more than `tol` mass, ascending.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > tol)
            .collect()
    }

    /// Mass of an arbitrary index set.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.weights[i]).sum()
    }

    /// Mass of the ball around `center`; `open` selects strict inequality.
    pub fn ball(&self, space: &MetricSpace, center: usize, radius: f64, open: bool) -> f64 {
        let mut m = 0.0;
        for i in 0..self.weights.len() {
            let d = space.dist(center, i);
            let inside = if open { d < radius } else { d <= radius };
            if inside {
                m += self.weights[i];
            }
        }
        m
    }
}

/// Ball convention used by profiles and bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallMode {
    /// `d(x, y) < t` — the default throughout the bounds.
    Open,
    /// `d(x, y) <= t`.
    Closed,
}

/// The step function `m(t) = min over support centers x of mu(ball(x, t))`.
///
/// Values are stored at every distance where some ball gains mass, so the
/// profile evaluates exactly for any radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassProfile {
    mode: BallMode,
    /// Sorted distinct distances from support centers to mass-carrying points,
    /// always starting at 0.
    breakpoints: Vec<f64>,
    /// `values[k]` = min over centers of the closed-ball mass at
    /// `breakpoints[k]`.
    values: Vec<f64>,
    min_support_weight: f64,
}

impl BallMassProfile {
    pub fn mode(&self) -> BallMode {
        self.mode
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_support_weight(&self) -> f64 {
        self.min_support_weight
    }

    /// Evaluate `m(t)` in the profile's own ball mode.
    pub fn eval(&self, t: f64) -> f64 {
        match self.mode {
            BallMode::Open => {
                if t <= 0.0 {
                    return 0.0;
                }
                // Open ball of radius t holds exactly the mass at distances
                // <= the largest breakpoint strictly below t.
                match self.breakpoints.partition_point(|&b| b < t) {
                    0 => 0.0,
                    k => self.values[k - 1],
                }
            }
            BallMode::Closed => match self.breakpoints.partition_point(|&b| b <= t) {
                0 => 0.0,
                k => self.values[k - 1],
            },
        }
    }
}

/// Ball-mass profile of `mu` over its own support centers.
///
/// Errors on measures with empty support: the infimum over centers would be
/// vacuous.
pub fn ball_mass(
    space: &MetricSpace,
    mu: &DiscreteMeasure,
    mode: BallMode,
    tol: f64,
) -> Result<BallMassProfile> {
    if mu.len() != space.len() {
        return Err(CoreError::InvalidMeasure(format!(
            "measure on {} points, space has {}",
            mu.len(),
            space.len()
        )));
    }
    let support = mu.support(tol);
    if support.is_empty() {
        return Err(CoreError::Precondition("measure has empty support".into()));
    }
    let carriers: Vec<usize> = (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let mut breakpoints: Vec<f64> = vec![0.0];
    for &x in &support {
        for &y in &carriers {
            breakpoints.push(space.dist(x, y));
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    let values: Vec<f64> = breakpoints
        .iter()
        .map(|&b| {
            support
                .iter()
                .map(|&x| mu.ball(space, x, b, false))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let min_support_weight = support
        .iter()
        .map(|&x| mu.weight(x))
        .fold(f64::INFINITY, f64::min);
    Ok(BallMassProfile {
        mode,
        breakpoints,
        values,
        min_support_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::space_from_points_1d;
    use crate::DEFAULT_TOL;

    /// Independent oracle: evaluate the infimum ball mass directly.
    fn brute_ball_mass(space: &MetricSpace, mu: &DiscreteMeasure, t: f64, open: bool) -> f64 {
        mu.support(DEFAULT_TOL)
            .iter()
            .map(|&x| mu.ball(space, x, t, open))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn two_point_uniform_profile() {
        let s = space_from_points_1d(&[0.0, 1.0]).unwrap();
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5], DEFAULT_TOL).unwrap();
        let m = ball_mass(&s, &mu, BallMode::Open, DEFAULT_TOL).unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(0.5), 0.5);
        assert_eq!(m.eval(1.0), 0.5); // open ball at the gap excludes the far atom
        assert_eq!(m.eval(1.0 + 1e-12), 1.0);
        assert_eq!(m.eval(2.0), 1.0);

        let mc = ball_mass(&s, &mu, BallMode::Closed, DEFAULT_TOL).unwrap();
        assert_eq!(mc.eval(1.0), 1.0); // closed ball includes it
        assert_eq!(mc.eval(0.999), 0.5);
        assert_eq!(mc.eval(0.0), 0.5);
    }

    #[test]
    fn three_point_profile_matches_brute_oracle() {
        let s = space_from_points_1d(&[0.0, 1.0, 3.0]).unwrap();
        let mu = DiscreteMeasure::probability(vec![0.2, 0.3, 0.5], DEFAULT_TOL).unwrap();
        let m = ball_mass(&s, &mu, BallMode::Open, DEFAULT_TOL).unwrap();
        // Frozen expectations computed with the brute oracle below.
        let expect = [(0.5, 0.2), (1.5, 0.5), (2.5, 0.5), (3.5, 1.0)];
        for (t, want) in expect {
            assert_eq!(m.eval(t), want, "open profile at t={}", t);
            assert_eq!(brute_ball_mass(&s, &mu, t, true), want);
        }
        // Sweep both modes over a fine grid, including exact breakpoints.
        let mc = ball_mass(&s, &mu, BallMode::Closed, DEFAULT_TOL).unwrap();
        for k in 0..80 {
            let t = k as f64 * 0.05;
            assert_eq!(m.eval(t), brute_ball_mass(&s, &mu, t, true), "open t={}", t);
            assert_eq!(
                mc.eval(t),
                brute_ball_mass(&s, &mu, t, false),
                "closed t={}",
                t
            );
        }
    }

    #[test]
    fn profile_is_nondecreasing_and_positive() {
        let s = space_from_points_1d(&[0.0, 0.7, 1.1, 2.9, 4.0]).unwrap();
        let mu =
            DiscreteMeasure::probability(vec![0.1, 0.25, 0.05, 0.35, 0.25], DEFAULT_TOL).unwrap();
        let m = ball_mass(&s, &mu, BallMode::Open, DEFAULT_TOL).unwrap();
        let mut prev = 0.0;
        for k in 0..100 {
            let t = k as f64 * 0.05;
            let v = m.eval(t);
            assert!(v + 1e-15 >= prev, "profile decreased at t={}", t);
            if t > 0.0 {
                assert!(v >= m.min_support_weight());
                assert!(v > 0.0);
            }
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(DiscreteMeasure::new(vec![0.5, -0.1], 0.4, DEFAULT_TOL).is_err());
        assert!(DiscreteMeasure::new(vec![0.5, 0.2], 1.0, DEFAULT_TOL).is_err());
        assert!(DiscreteMeasure::new(vec![f64::NAN], 0.0, DEFAULT_TOL).is_err());
        let zero = DiscreteMeasure::new(vec![0.0, 0.0], 0.0, DEFAULT_TOL).unwrap();
        let s = space_from_points_1d(&[0.0, 1.0]).unwrap();
        assert!(ball_mass(&s, &zero, BallMode::Open, DEFAULT_TOL).is_err());
    }
}
