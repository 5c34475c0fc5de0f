//! Diagnostics for when W_p-convergence of a measure sequence upgrades to
//! W∞-convergence.
//!
//! Everything here works on finite truncations, so limits are reported as
//! trends: the raw per-term series together with a tail verdict. Three
//! conditions are tracked: the W_p series itself, Hausdorff convergence of
//! supports, and exact stabilization of component masses across a separated
//! split. A uniform ball-mass floor is available as an equivalent stand-in
//! for the support condition.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::measure::{ball_mass, BallMode, DiscreteMeasure};
use crate::solver::{solve_winf, solve_wp};
use crate::space::{delta_components, hausdorff_distance, MetricSpace};

/// Tail-window threshold below which a series counts as converging.
pub const DEFAULT_TREND_THRESHOLD: f64 = 1e-3;

/// Infimum floor for the uniform ball-mass verdict.
pub const DEFAULT_MASS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MeasureSequence {
    pub space: MetricSpace,
    pub terms: Vec<DiscreteMeasure>,
    pub limit: DiscreteMeasure,
}

impl MeasureSequence {
    pub fn new(
        space: MetricSpace,
        terms: Vec<DiscreteMeasure>,
        limit: DiscreteMeasure,
        tol: f64,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(CoreError::Precondition("sequence has no terms".into()));
        }
        for (i, m) in terms.iter().chain(std::iter::once(&limit)).enumerate() {
            if m.len() != space.len() {
                return Err(CoreError::InvalidMeasure(format!(
                    "measure {} lives on {} points, space has {}",
                    i,
                    m.len(),
                    space.len()
                )));
            }
            if (m.total() - 1.0).abs() > tol {
                return Err(CoreError::InvalidMeasure(format!(
                    "measure {} has total {}, expected probability",
                    i,
                    m.total()
                )));
            }
        }
        Ok(MeasureSequence { space, terms, limit })
    }
}

/// A per-term series with a last-quarter tail verdict.
#[derive(Debug, Clone, Serialize)]
pub struct TrendSeries {
    pub values: Vec<f64>,
    pub tail_max: f64,
    pub threshold: f64,
    pub converging: bool,
}

impl TrendSeries {
    pub fn from_values(values: Vec<f64>, threshold: f64) -> Self {
        let tail_len = (values.len() + 3) / 4;
        let tail_max = values[values.len() - tail_len..]
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        TrendSeries { tail_max, threshold, converging: tail_max < threshold, values }
    }
}

/// W_p(μ_i, μ) per term.
pub fn diag_wp(
    seq: &MeasureSequence,
    p: f64,
    threshold: f64,
    tol: f64,
) -> Result<TrendSeries> {
    let mut values = Vec::with_capacity(seq.terms.len());
    for term in &seq.terms {
        values.push(solve_wp(&seq.space, term, &seq.limit, p, tol)?.value);
    }
    Ok(TrendSeries::from_values(values, threshold))
}

/// Hausdorff distance between supp μ_i and supp μ per term.
pub fn diag_hausdorff(seq: &MeasureSequence, threshold: f64) -> Result<TrendSeries> {
    let limit_supp = seq.limit.support(0.0);
    let mut values = Vec::with_capacity(seq.terms.len());
    for term in &seq.terms {
        values.push(hausdorff_distance(
            &seq.space,
            &term.support(0.0),
            &limit_supp,
        )?);
    }
    Ok(TrendSeries::from_values(values, threshold))
}

/// W∞(μ_i, μ) per term.
pub fn diag_winf(seq: &MeasureSequence, threshold: f64, tol: f64) -> Result<TrendSeries> {
    let mut values = Vec::with_capacity(seq.terms.len());
    for term in &seq.terms {
        values.push(solve_winf(&seq.space, term, &seq.limit, tol)?.value);
    }
    Ok(TrendSeries::from_values(values, threshold))
}

#[derive(Debug, Clone, Serialize)]
pub struct BallMassTable {
    pub radii: Vec<f64>,
    /// For each radius, the smallest ball-mass profile value over all terms.
    pub infima: Vec<f64>,
    pub floor: f64,
    /// All infima exceed the floor.
    pub positive: bool,
}

/// Uniform-in-i lower ball-mass control: inf over terms of m_i(r) on a
/// radius grid.
pub fn diag_uniform_ball_mass(
    seq: &MeasureSequence,
    radii: &[f64],
    floor: f64,
    tol: f64,
) -> Result<BallMassTable> {
    let mut profiles = Vec::with_capacity(seq.terms.len());
    for term in &seq.terms {
        profiles.push(ball_mass(&seq.space, term, BallMode::Open, tol)?);
    }
    let mut infima = Vec::with_capacity(radii.len());
    for &r in radii {
        let inf = profiles
            .iter()
            .map(|m| m.eval(r))
            .fold(f64::INFINITY, f64::min);
        infima.push(inf);
    }
    let positive = infima.iter().all(|&v| v > floor);
    Ok(BallMassTable { radii: radii.to_vec(), infima, floor, positive })
}

/// A decomposition of every term (and the limit) into mutually separated
/// parts. Parts are sub-probability measures on the shared space.
#[derive(Debug, Clone)]
pub struct SplitScenario {
    /// `term_parts[i][c]` is the c-th part of term i.
    pub term_parts: Vec<Vec<DiscreteMeasure>>,
    pub limit_parts: Vec<DiscreteMeasure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitVerdict {
    /// `masses[i][c]` = total mass of part c of term i.
    pub masses: Vec<Vec<f64>>,
    pub limit_masses: Vec<f64>,
    /// Smallest separation between distinct parts across all terms.
    pub separation: f64,
    /// First index (1-based) from which every part mass equals its limit
    /// mass, when one exists within the horizon.
    pub stabilized_at: Option<usize>,
    pub stabilized: bool,
}

/// Check that the part masses of a separated split stabilize exactly at
/// their limit values from some index on.
pub fn diag_split(
    seq: &MeasureSequence,
    scenario: &SplitScenario,
    tol: f64,
) -> Result<SplitVerdict> {
    let k = scenario.limit_parts.len();
    if k < 2 {
        return Err(CoreError::Precondition(
            "a split needs at least two parts".into(),
        ));
    }
    if scenario.term_parts.len() != seq.terms.len() {
        return Err(CoreError::Precondition(format!(
            "{} term splits for {} terms",
            scenario.term_parts.len(),
            seq.terms.len()
        )));
    }
    let check_sum = |parts: &[DiscreteMeasure], whole: &DiscreteMeasure, who: &str| -> Result<()> {
        if parts.len() != k {
            return Err(CoreError::Precondition(format!(
                "{} has {} parts, expected {}",
                who,
                parts.len(),
                k
            )));
        }
        for j in 0..whole.len() {
            let sum: f64 = parts.iter().map(|p| p.weight(j)).sum();
            if (sum - whole.weight(j)).abs() > tol {
                return Err(CoreError::Precondition(format!(
                    "{} parts sum to {} at point {}, measure has {}",
                    who,
                    sum,
                    j,
                    whole.weight(j)
                )));
            }
        }
        Ok(())
    };
    check_sum(&scenario.limit_parts, &seq.limit, "limit")?;
    for (i, parts) in scenario.term_parts.iter().enumerate() {
        check_sum(parts, &seq.terms[i], &format!("term {}", i + 1))?;
    }

    let mut separation = f64::INFINITY;
    for parts in scenario
        .term_parts
        .iter()
        .chain(std::iter::once(&scenario.limit_parts))
    {
        let supports: Vec<Vec<usize>> = parts.iter().map(|p| p.support(0.0)).collect();
        for a in 0..k {
            for b in a + 1..k {
                if supports[a].is_empty() || supports[b].is_empty() {
                    continue;
                }
                separation = separation.min(
                    seq.space.dist_between_sets(&supports[a], &supports[b]),
                );
            }
        }
    }
    if separation <= 0.0 {
        return Err(CoreError::Precondition(
            "split parts are not separated".into(),
        ));
    }

    let limit_masses: Vec<f64> = scenario.limit_parts.iter().map(|p| p.total()).collect();
    let masses: Vec<Vec<f64>> = scenario
        .term_parts
        .iter()
        .map(|parts| parts.iter().map(|p| p.total()).collect())
        .collect();
    let mut stabilized_at = None;
    for i in (0..masses.len()).rev() {
        let ok = (0..k).all(|c| (masses[i][c] - limit_masses[c]).abs() <= tol);
        if ok {
            stabilized_at = Some(i + 1);
        } else {
            break;
        }
    }
    Ok(SplitVerdict {
        masses,
        limit_masses,
        separation,
        stabilized: stabilized_at.is_some(),
        stabilized_at,
    })
}

/// Split every term by proximity to the delta-components of the limit
/// support at the given scale. Returns None when the support is a single
/// component at that scale.
pub fn auto_split(
    seq: &MeasureSequence,
    scale: f64,
    tol: f64,
) -> Option<SplitScenario> {
    let limit_supp = seq.limit.support(0.0);
    let components = delta_components(&seq.space, &limit_supp, scale, tol);
    if components.len() < 2 {
        return None;
    }
    let cell_of: Vec<usize> = (0..seq.space.len())
        .map(|x| {
            (0..components.len())
                .min_by(|&a, &b| {
                    seq.space
                        .dist_to_set(x, &components[a])
                        .total_cmp(&seq.space.dist_to_set(x, &components[b]))
                        .then(a.cmp(&b))
                })
                .unwrap()
        })
        .collect();
    let restrict = |m: &DiscreteMeasure| -> Vec<DiscreteMeasure> {
        (0..components.len())
            .map(|c| {
                let weights: Vec<f64> = (0..m.len())
                    .map(|j| if cell_of[j] == c { m.weight(j) } else { 0.0 })
                    .collect();
                DiscreteMeasure::from_weights(weights, 1e-9)
                    .expect("restriction of a valid measure is valid")
            })
            .collect()
    };
    Some(SplitScenario {
        term_parts: seq.terms.iter().map(restrict).collect(),
        limit_parts: restrict(&seq.limit),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WinfVerdictReport {
    pub winf: TrendSeries,
    pub wp: TrendSeries,
    pub hausdorff: TrendSeries,
    pub split: Option<SplitVerdict>,
    /// Conditions (wp ∧ hausdorff ∧ split) say W∞ should converge.
    pub predicted: bool,
    /// The W∞ series itself converges.
    pub observed: bool,
    pub matches: bool,
}

/// Compute W∞ per term and compare the observed trend against the
/// three-condition prediction. The split is user-supplied, derived from the
/// limit-support components at `auto_scale`, or omitted (then vacuous).
pub fn winf_verdict(
    seq: &MeasureSequence,
    p: f64,
    split: Option<&SplitScenario>,
    auto_scale: Option<f64>,
    threshold: f64,
    tol: f64,
) -> Result<WinfVerdictReport> {
    let wp = diag_wp(seq, p, threshold, tol)?;
    let hausdorff = diag_hausdorff(seq, threshold)?;
    let winf = diag_winf(seq, threshold, tol)?;
    let owned;
    let scenario = match (split, auto_scale) {
        (Some(s), _) => Some(s),
        (None, Some(scale)) => {
            owned = auto_split(seq, scale, tol);
            owned.as_ref()
        }
        (None, None) => None,
    };
    let split_verdict = match scenario {
        Some(s) => Some(diag_split(seq, s, tol.max(1e-12))?),
        None => None,
    };
    let predicted = wp.converging
        && hausdorff.converging
        && split_verdict.as_ref().map_or(true, |s| s.stabilized);
    let observed = winf.converging;
    Ok(WinfVerdictReport {
        winf,
        wp,
        hausdorff,
        split: split_verdict,
        predicted,
        observed,
        matches: predicted == observed,
    })
}

/// Truncated rendition of a line family whose tails push mass onto far
/// point atoms: W_p shrinks with the term index while W∞ stays at the scale
/// of the first still-split block.
///
/// Blocks n = 1..n_blocks occupy ±[n(n-1), n(n+1)], carved into four atoms
/// per side with total side mass ∝ 2n e^{-n}; term i halves every block
/// with n > i and parks the removed mass on atoms at ±n².
pub fn example_noncompact(i_max: usize, n_blocks: usize) -> Result<MeasureSequence> {
    if n_blocks < 3 {
        return Err(CoreError::Precondition(
            "need at least three blocks".into(),
        ));
    }
    if i_max == 0 {
        return Err(CoreError::Precondition("need at least one term".into()));
    }
    // positions: per block, four atoms per side plus the two tail atoms
    let mut positions = Vec::new();
    let mut block_atoms = Vec::new(); // (block n, side, atom index in positions)
    let mut tail_atoms = Vec::new(); // (block n, side, atom index)
    for n in 1..=n_blocks {
        let nf = n as f64;
        for side in [1.0f64, -1.0] {
            for j in 0..4 {
                let local = nf * (nf - 1.0) + (2 * j + 1) as f64 * nf / 4.0;
                block_atoms.push((n, side, positions.len()));
                positions.push(side * local);
            }
            tail_atoms.push((n, side, positions.len()));
            positions.push(side * nf * nf);
        }
    }
    let space = crate::instances::space_from_points_1d(&positions)?;

    let norm: f64 = (1..=n_blocks)
        .map(|n| 2.0 * n as f64 * (-(n as f64)).exp())
        .sum();
    let side_mass = |n: usize| n as f64 * (-(n as f64)).exp() / norm;

    let mut limit_w = vec![0.0f64; positions.len()];
    for &(n, _, idx) in &block_atoms {
        limit_w[idx] = side_mass(n) / 4.0;
    }
    let limit = DiscreteMeasure::new(limit_w.clone(), 1.0, 1e-9)?;

    let mut terms = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        let mut w = limit_w.clone();
        for &(n, _, idx) in &block_atoms {
            if n > i {
                w[idx] *= 0.5;
            }
        }
        for &(n, _, idx) in &tail_atoms {
            if n > i {
                w[idx] = side_mass(n) / 2.0;
            }
        }
        terms.push(DiscreteMeasure::new(w, 1.0, 1e-9)?);
    }
    MeasureSequence::new(space, terms, limit, 1e-9)
}
