//! Cost functions of the displacement: nondecreasing `h` with `h(t) > 0` for
//! `t > 0`, applied as `h(d(x, y))`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CostFunction {
    /// `h(t) = t^p`, `p >= 1`.
    Power { p: f64 },
    /// `h(t) = a t^p + b 1{t > 0}`: a fixed charge per unit of moved mass.
    ShiftedPower { a: f64, p: f64, b: f64 },
    /// `h(t) = t^(p/s)`; with the exponent below 1 the cost is subadditive.
    SnowflakePower { p: f64, s: f64 },
    /// Piecewise-linear interpolation of nondecreasing knots, first knot at
    /// t = 0, constant beyond the last knot.
    Tabulated { points: Vec<(f64, f64)> },
}

impl CostFunction {
    pub fn power(p: f64) -> Result<Self> {
        let c = CostFunction::Power { p };
        c.validate()?;
        Ok(c)
    }

    pub fn shifted_power(a: f64, p: f64, b: f64) -> Result<Self> {
        let c = CostFunction::ShiftedPower { a, p, b };
        c.validate()?;
        Ok(c)
    }

    pub fn snowflake_power(p: f64, s: f64) -> Result<Self> {
        let c = CostFunction::SnowflakePower { p, s };
        c.validate()?;
        Ok(c)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let c = CostFunction::Tabulated { points };
        c.validate()?;
        Ok(c)
    }

    /// Check the family parameters; used both by constructors and after
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Power { p } => {
                if !p.is_finite() || *p < 1.0 {
                    return Err(CoreError::InvalidCost(format!(
                        "power exponent must be >= 1, got {}",
                        p
                    )));
                }
            }
            CostFunction::ShiftedPower { a, p, b } => {
                if !a.is_finite() || !p.is_finite() || !b.is_finite() {
                    return Err(CoreError::InvalidCost("non-finite parameter".into()));
                }
                if *a < 0.0 || *b < 0.0 || *p < 1.0 {
                    return Err(CoreError::InvalidCost(format!(
                        "need a >= 0, b >= 0, p >= 1; got a={}, b={}, p={}",
                        a, b, p
                    )));
                }
                if *a == 0.0 && *b == 0.0 {
                    return Err(CoreError::InvalidCost(
                        "shifted power vanishes identically".into(),
                    ));
                }
            }
            CostFunction::SnowflakePower { p, s } => {
                if !p.is_finite() || !s.is_finite() || *p <= 0.0 || *s <= 0.0 {
                    return Err(CoreError::InvalidCost(format!(
                        "need p > 0 and s > 0; got p={}, s={}",
                        p, s
                    )));
                }
            }
            CostFunction::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(CoreError::InvalidCost("need at least two knots".into()));
                }
                if points[0].0 != 0.0 {
                    return Err(CoreError::InvalidCost(format!(
                        "first knot must sit at t = 0, got t = {}",
                        points[0].0
                    )));
                }
                if points[0].1 < 0.0 {
                    return Err(CoreError::InvalidCost("negative value at t = 0".into()));
                }
                for w in points.windows(2) {
                    if !(w[1].0.is_finite() && w[1].1.is_finite()) {
                        return Err(CoreError::InvalidCost("non-finite knot".into()));
                    }
                    if w[1].0 <= w[0].0 {
                        return Err(CoreError::InvalidCost(
                            "knot abscissae must increase strictly".into(),
                        ));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(CoreError::InvalidCost("knot values must not decrease".into()));
                    }
                }
                // Positivity for t > 0 needs the second knot above zero.
                if points[1].1 <= 0.0 {
                    return Err(CoreError::InvalidCost(
                        "cost must be positive for t > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CostFunction::Power { p } => t.powf(*p),
            CostFunction::ShiftedPower { a, p, b } => {
                let jump = if t > 0.0 { *b } else { 0.0 };
                a * t.powf(*p) + jump
            }
            CostFunction::SnowflakePower { p, s } => t.powf(p / s),
            CostFunction::Tabulated { points } => {
                if t <= 0.0 {
                    return points[0].1;
                }
                let last = points.len() - 1;
                if t >= points[last].0 {
                    return points[last].1;
                }
                let k = points.partition_point(|&(x, _)| x <= t);
                let (t0, v0) = points[k - 1];
                let (t1, v1) = points[k];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// False only for a genuine fixed charge (`ShiftedPower` with `b > 0`),
    /// which jumps at t = 0.
    pub fn is_continuous(&self) -> bool {
        match self {
            CostFunction::ShiftedPower { b, .. } => *b == 0.0,
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CostFunction::Power { p } => format!("t^{}", p),
            CostFunction::ShiftedPower { a, p, b } => format!("{}*t^{} + {}*1(t>0)", a, p, b),
            CostFunction::SnowflakePower { p, s } => format!("t^({}/{})", p, s),
            CostFunction::Tabulated { points } => format!("tabulated({} knots)", points.len()),
        }
    }
}
