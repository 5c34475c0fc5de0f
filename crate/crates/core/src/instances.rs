//! Deterministic instance generators: spaces, grids and random measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::space::MetricSpace;
use crate::DEFAULT_TOL;

/// Metric space from points on the real line.
pub fn space_from_points_1d(points: &[f64]) -> Result<MetricSpace> {
    let n = points.len();
    let dist = (0..n)
        .map(|i| (0..n).map(|j| (points[i] - points[j]).abs()).collect())
        .collect();
    let labels = points.iter().map(|x| format!("{}", x)).collect();
    MetricSpace::new(dist, Some(labels), DEFAULT_TOL)
}

/// Metric space from points in the plane (Euclidean distance).
pub fn space_from_points_2d(points: &[(f64, f64)]) -> Result<MetricSpace> {
    let n = points.len();
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dx = points[i].0 - points[j].0;
                    let dy = points[i].1 - points[j].1;
                    (dx * dx + dy * dy).sqrt()
                })
                .collect()
        })
        .collect();
    let labels = points
        .iter()
        .map(|(x, y)| format!("({},{})", x, y))
        .collect();
    MetricSpace::new(dist, Some(labels), DEFAULT_TOL)
}

/// Snowflake of the line: d(x, y) = |x - y|^(1/s), s >= 1.
pub fn snowflake_from_points_1d(points: &[f64], s: f64) -> Result<MetricSpace> {
    if s < 1.0 {
        return Err(CoreError::Precondition(format!(
            "snowflake exponent needs s >= 1 to stay a metric, got {}",
            s
        )));
    }
    let n = points.len();
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (points[i] - points[j]).abs().powf(1.0 / s))
                .collect()
        })
        .collect();
    let labels = points.iter().map(|x| format!("{}", x)).collect();
    MetricSpace::new(dist, Some(labels), DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Line,
    Grid,
    Snowflake,
    Clusters,
    Cantor,
}

impl std::str::FromStr for InstanceKind {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(InstanceKind::Line),
            "grid" => Ok(InstanceKind::Grid),
            "snowflake" => Ok(InstanceKind::Snowflake),
            "clusters" => Ok(InstanceKind::Clusters),
            "cantor" => Ok(InstanceKind::Cantor),
            other => Err(CoreError::Parse(format!("unknown instance kind {:?}", other))),
        }
    }
}

/// Knobs for [`generate_instance`]; unused fields are ignored per kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    /// Point count (line, snowflake) or grid width.
    pub n: usize,
    /// Lattice spacing for line/grid/clusters.
    pub spacing: f64,
    /// Grid height.
    pub ny: usize,
    /// Snowflake exponent.
    pub s: f64,
    /// Cluster count.
    pub clusters: usize,
    /// Points per cluster.
    pub per_cluster: usize,
    /// Gap between consecutive cluster ends.
    pub gap: f64,
    /// Uniform jitter applied to cluster points (0 disables; seeded).
    pub jitter: f64,
    /// Cantor construction depth.
    pub level: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 10,
            spacing: 1.0,
            ny: 1,
            s: 1.5,
            clusters: 2,
            per_cluster: 5,
            gap: 5.0,
            jitter: 0.0,
            level: 3,
        }
    }
}

/// A generated space with the coordinates that produced it and a uniform
/// measure on all points as the default source.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub space: MetricSpace,
    pub positions: Vec<Vec<f64>>,
    pub mu: DiscreteMeasure,
}

pub fn generate_instance(kind: InstanceKind, params: &GenParams, seed: u64) -> Result<GeneratedInstance> {
    let positions: Vec<Vec<f64>> = match kind {
        InstanceKind::Line => (0..params.n)
            .map(|k| vec![k as f64 * params.spacing])
            .collect(),
        InstanceKind::Grid => {
            let mut pts = Vec::with_capacity(params.n * params.ny);
            for j in 0..params.ny {
                for i in 0..params.n {
                    pts.push(vec![i as f64 * params.spacing, j as f64 * params.spacing]);
                }
            }
            pts
        }
        InstanceKind::Snowflake => {
            if params.n < 2 {
                return Err(CoreError::Precondition("snowflake needs n >= 2".into()));
            }
            let step = 1.0 / (params.n - 1) as f64;
            (0..params.n).map(|k| vec![k as f64 * step]).collect()
        }
        InstanceKind::Clusters => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::new();
            let mut origin = 0.0;
            for _ in 0..params.clusters {
                for k in 0..params.per_cluster {
                    let jitter = if params.jitter > 0.0 {
                        rng.gen_range(-params.jitter..params.jitter)
                    } else {
                        0.0
                    };
                    pts.push(vec![origin + k as f64 * params.spacing + jitter]);
                }
                origin += (params.per_cluster - 1) as f64 * params.spacing + params.gap;
            }
            pts
        }
        InstanceKind::Cantor => {
            let mut lefts = vec![0.0f64];
            for _ in 0..params.level {
                let mut next = Vec::with_capacity(lefts.len() * 2);
                for &x in &lefts {
                    next.push(x / 3.0);
                    next.push(2.0 / 3.0 + x / 3.0);
                }
                next.sort_by(|a, b| a.partial_cmp(b).unwrap());
                lefts = next;
            }
            lefts.into_iter().map(|x| vec![x]).collect()
        }
    };

    let space = match kind {
        InstanceKind::Snowflake => {
            let flat: Vec<f64> = positions.iter().map(|p| p[0]).collect();
            snowflake_from_points_1d(&flat, params.s)?
        }
        InstanceKind::Grid => {
            let flat: Vec<(f64, f64)> = positions.iter().map(|p| (p[0], p[1])).collect();
            space_from_points_2d(&flat)?
        }
        _ => {
            let flat: Vec<f64> = positions.iter().map(|p| p[0]).collect();
            space_from_points_1d(&flat)?
        }
    };
    let all: Vec<usize> = (0..space.len()).collect();
    let mu = DiscreteMeasure::uniform_on(space.len(), &all);
    Ok(GeneratedInstance {
        space,
        positions,
        mu,
    })
}

/// Random probability measure with full support: each weight drawn from
/// `floor + U(0, 1)` and normalized, so no atom falls below
/// `floor / (n (1 + floor))`.
pub fn random_probability(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.gen_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / sum).collect();
    DiscreteMeasure::probability(weights, 1e-6).expect("normalized weights")
}

/// Random probability measure supported on `subset` of a space of `n` points.
pub fn random_probability_on(
    n: usize,
    subset: &[usize],
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> DiscreteMeasure {
    let raw: Vec<f64> = (0..subset.len())
        .map(|_| floor + rng.gen_range(0.0..1.0))
        .collect();
    let sum: f64 = raw.iter().sum();
    let mut weights = vec![0.0; n];
    for (k, &i) in subset.iter().enumerate() {
        weights[i] = raw[k] / sum;
    }
    DiscreteMeasure::probability(weights, 1e-6).expect("normalized weights")
}

/// Draw a nonempty random subset of `0..n`.
pub fn random_subset(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !subset.is_empty() {
            return subset;
        }
    }
}
