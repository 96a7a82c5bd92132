//! Numerical solution of algebraic inclusions `ȳ ∈ F(x)` for set-valued maps
//! `F: ℝ^d → CC(ℝ^d)` that are relaxed one-sided Lipschitz with a negative
//! constant `l`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sets`]: compact convex sets with support functions, metric projection
//!   and Hausdorff distances;
//! * [`maps`]: the [`Multimap`] trait, the built-in example maps and sampling
//!   estimators for the ROSL and Lipschitz constants;
//! * [`solve`]: the fixed-point schemes, localisation certificates and
//!   a-priori error bounds;
//! * [`analyze`]: bisection for scalar inclusions, grid scans of the solution
//!   set and trace audits;
//! * [`formats`]: CSV encodings of traces and scans.
//!
//! ```
//! use rosl_core::{solve, vector, BuiltinMap, Scheme, SolveConfig, Status};
//!
//! let map = BuiltinMap::rotation_2d(-1.0, 1.5).unwrap();
//! let config = SolveConfig::new(Scheme::Basic, -1.0, Some(1.5));
//! let trace = solve(&map, &vector![0, 0], &vector![1, 0], &config).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! ```

// Negated comparisons such as `!(tol > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod error;
pub mod formats;
pub mod maps;
pub mod sets;
pub mod solve;
mod vector;

pub use analyze::{
    grid_points, ivt_bisect, scan_solution_set, verify_trace_bounds, BoundReport, IvtRoot,
    ScanResult, Violation, ViolationKind,
};
pub use error::{Error, Result};
pub use maps::{
    estimate_lipschitz, estimate_rosl, rosl_pair_check, AxisBox, BuiltinMap, FnMultimap, MapSpec,
    Multimap,
};
pub use sets::{
    distance, hausdorff, hausdorff_estimate, project, set_norm, support, ConvexSet, SetKind,
};
pub use solve::{
    a_priori_bounds, contraction_rate, exclusion_radius, inclusion_certificate, solve,
    step_adaptive, step_basic, step_lipschitz_refined, step_lipschitz_refined_1d, AdaptiveParams,
    AprioriBounds, Certificate, IterationTrace, Scheme, SolveConfig, Status, TrustRegion,
};
pub use vector::Vector;
