//! Optimal transport on finite metric spaces, with an emphasis on the
//! sup-displacement (W-infinity) side of the theory.
//!
//! The crate provides:
//!
//! * exact Kantorovich solvers (`solver`) for arbitrary nondecreasing costs
//!   `h(d(x,y))`, including a W-infinity solver driven by a max-flow
//!   feasibility oracle;
//! * a transport "surgery" routine (`surgery`) that rewrites any coupling with
//!   little long-haul mass into one whose displacement is uniformly bounded
//!   by `17 r + 4 eps + delta`;
//! * cost lower bounds (`bounds`) of the form `cost >= omega(W_inf)` together
//!   with sharpness witnesses, chain-condition diagnostics and the modulus
//!   estimator behind the plan-level bound;
//! * cyclical-monotonicity checking and collapse-plan construction
//!   (`monotone`);
//! * convergence diagnostics (`convergence`) relating W_p trends, Hausdorff
//!   support trends, uniform ball-mass lower bounds and split-mass
//!   stabilization to W-infinity convergence;
//! * instance generators (`instances`), JSON wire formats (`json`) and the
//!   self-contained verification suite (`suite`) used by the CLI.

pub mod bounds;
pub mod convergence;
pub mod cost;
pub mod error;
pub mod instances;
pub mod json;
pub mod measure;
pub mod monotone;
pub mod net;
pub mod plan;
pub mod solver;
pub mod space;
pub mod suite;
pub mod surgery;

/// Default tolerance for equality tests on masses, distances and costs.
///
/// Strict inequalities required by the theory are tested as
/// `lhs < rhs - tol`; equalities as `|lhs - rhs| <= tol`.
pub const DEFAULT_TOL: f64 = 1e-9;

pub use cost::CostFunction;
pub use error::CoreError;
pub use measure::{ball_mass, BallMassProfile, BallMode, DiscreteMeasure};
pub use plan::{plan_cost, plan_sup_distance, PlanEntry, TransportPlan};
pub use space::MetricSpace;
