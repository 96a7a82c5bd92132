//! Audits of solver output: bracketing bisection for scalar inclusions,
//! solution-set scans over a grid of starting points, and checks of recorded
//! traces against the a-priori bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{AxisBox, Multimap};
use crate::solve::{a_priori_bounds, solve, IterationTrace, Scheme, SolveConfig, Status};
use crate::vector::Vector;

/// Absolute slack used by [`verify_trace_bounds`].
pub const BOUND_SLACK: f64 = 1e-9;

/// Result of [`ivt_bisect`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IvtRoot {
    pub x: f64,
    pub bisections: usize,
    /// Final bracket; degenerate when an evaluated point solved the inclusion.
    pub bracket: (f64, f64),
}

fn side(map: &dyn Multimap, y_bar: f64, x: f64) -> Result<(i8, f64)> {
    let value = map.evaluate(&Vector::scalar(x)?)?;
    let (lo, hi) = value.bounds_1d()?;
    Ok(if lo > y_bar {
        (1, lo - y_bar)
    } else if hi < y_bar {
        (-1, y_bar - hi)
    } else {
        (0, 0.0)
    })
}

/// Bisection for `ȳ ∈ F(x)` with `F` interval-valued on `[a, b]`.
///
/// The bracket must have `F(·) - ȳ` entirely positive at one end and entirely
/// negative at the other, unless an endpoint already solves the inclusion.
/// Stops when a midpoint solves the inclusion, its defect is at most `tol`,
/// or the bracket is no wider than `tol`.
pub fn ivt_bisect(map: &dyn Multimap, y_bar: f64, a: f64, b: f64, tol: f64) -> Result<IvtRoot> {
    if map.dim() != 1 {
        return Err(Error::UnsupportedDimension(map.dim()));
    }
    if !(a < b) || !(tol > 0.0) || !y_bar.is_finite() {
        return Err(Error::Precondition(format!(
            "need a < b and tol > 0, got a = {a}, b = {b}, tol = {tol}"
        )));
    }
    let done = |x: f64, bisections| IvtRoot {
        x,
        bisections,
        bracket: (x, x),
    };
    let (sa, _) = side(map, y_bar, a)?;
    if sa == 0 {
        return Ok(done(a, 0));
    }
    let (sb, _) = side(map, y_bar, b)?;
    if sb == 0 {
        return Ok(done(b, 0));
    }
    if sa == sb {
        return Err(Error::Bracket { a, b });
    }
    let (mut lo, mut hi) = (a, b);
    let mut bisections = 0;
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        bisections += 1;
        let (sm, gap) = side(map, y_bar, mid)?;
        if sm == 0 || gap <= tol {
            return Ok(done(mid, bisections));
        }
        if sm == sa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(IvtRoot {
        x: lo + 0.5 * (hi - lo),
        bisections,
        bracket: (lo, hi),
    })
}

/// Nodes of a regular grid over `bounds`, last coordinate fastest. An axis
/// with a single node uses the midpoint of its interval.
pub fn grid_points(bounds: &AxisBox, counts: &[usize]) -> Result<Vec<Vector>> {
    bounds.validate()?;
    if counts.len() != bounds.dim() {
        return Err(Error::DimensionMismatch {
            expected: bounds.dim(),
            found: counts.len(),
        });
    }
    if counts.contains(&0) {
        return Err(Error::Precondition("grid counts must be positive".into()));
    }
    let axes: Vec<Vec<f64>> = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .zip(counts)
        .map(|((&lo, &hi), &n)| {
            if n == 1 {
                vec![lo + 0.5 * (hi - lo)]
            } else {
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut coords = vec![0.0; axes.len()];
        for (axis, coord) in axes.iter().zip(coords.iter_mut()).rev() {
            *coord = axis[rem % axis.len()];
            rem /= axis.len();
        }
        points.push(Vector::new(coords)?);
    }
    Ok(points)
}

/// Raw output of [`scan_solution_set`], in grid order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub grid_points: Vec<Vector>,
    pub limits: Vec<Option<Vector>>,
    pub statuses: Vec<Status>,
    /// `dist(ȳ, F(limit))`, present exactly when the limit is.
    pub membership_residuals: Vec<Option<f64>>,
    /// Largest consecutive defect ratio along each run.
    pub max_defect_ratios: Vec<Option<f64>>,
    /// Residual threshold for accepting a limit (the solver's `defect_tol`).
    pub tolerance: f64,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.grid_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_points.is_empty()
    }

    pub fn converged_count(&self) -> usize {
        self.statuses
            .iter()
            .filter(|&&s| s == Status::Converged)
            .count()
    }

    pub fn all_converged(&self) -> bool {
        self.converged_count() == self.len()
    }
}

/// Status, limit, membership residual and worst defect ratio of one node.
type NodeRun = (Status, Option<Vector>, Option<f64>, Option<f64>);

/// Runs [`solve`] from every node of a regular grid and records the limits.
///
/// Nodes are solved in parallel on the current rayon pool; results keep grid
/// order. Failures at individual nodes are recorded as diverged statuses.
pub fn scan_solution_set(
    map: &dyn Multimap,
    y_bar: &Vector,
    bounds: &AxisBox,
    grid_counts: &[usize],
    config: &SolveConfig,
) -> Result<ScanResult> {
    if bounds.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: bounds.dim(),
        });
    }
    y_bar.check_dim(map.dim())?;
    config.validate(map.dim())?;
    let grid = grid_points(bounds, grid_counts)?;

    let runs: Vec<NodeRun> = grid
        .par_iter()
        .map(|x0| match solve(map, y_bar, x0, config) {
            Ok(trace) => {
                let ratio = trace.defect_ratios().into_iter().reduce(f64::max);
                let residual = trace.limit.as_ref().and_then(|limit| {
                    map.evaluate(limit)
                        .and_then(|value| value.distance(y_bar))
                        .ok()
                });
                let limit = residual.and(trace.limit);
                (trace.status, limit, residual, ratio)
            }
            Err(_) => (Status::Diverged, None, None, None),
        })
        .collect();

    let mut result = ScanResult {
        grid_points: grid,
        limits: Vec::with_capacity(runs.len()),
        statuses: Vec::with_capacity(runs.len()),
        membership_residuals: Vec::with_capacity(runs.len()),
        max_defect_ratios: Vec::with_capacity(runs.len()),
        tolerance: config.defect_tol,
    };
    for (status, limit, residual, ratio) in runs {
        result.statuses.push(status);
        result.limits.push(limit);
        result.membership_residuals.push(residual);
        result.max_defect_ratios.push(ratio);
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `|v_{n+1}| / |v_n|` above the scheme's contraction rate.
    DefectRatio,
    /// `|x_n - x̄|` above the a-priori distance-to-limit bound.
    DistanceToLimit,
    /// The limit lies inside the exclusion ball at `x_n`.
    Exclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub iterate: usize,
    pub kind: ViolationKind,
    pub observed: f64,
    pub bound: f64,
    /// How far the observation is on the wrong side of the bound.
    pub excess: f64,
}

/// Observed quantities of a converged trace next to their theoretical bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub scheme: Scheme,
    pub iterates: usize,
    /// Contraction rate used for checks (i) and (ii); absent when no
    /// a-priori rate applies to the scheme and constants.
    pub rate: Option<f64>,
    pub rate_note: Option<String>,
    pub defect_ratios: Vec<Option<f64>>,
    pub distance_to_limit: Vec<f64>,
    pub distance_to_limit_bounds: Vec<Option<f64>>,
    pub exclusion_radii: Vec<Option<f64>>,
    pub violation_count: usize,
    pub max_violation: f64,
    pub violations: Vec<Violation>,
}

impl BoundReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a converged trace against the theory for `config`:
///
/// 1. every defect ratio is at most the contraction rate (+ [`BOUND_SLACK`]);
/// 2. `|x_n - x̄| ≤` the a-priori distance-to-limit bound for `n ≥ 1`;
/// 3. `|x̄ - x_n| ≥ |v_n| / L` when `L` is known.
///
/// The last iterate stands in for the limit `x̄`.
pub fn verify_trace_bounds(trace: &IterationTrace, config: &SolveConfig) -> Result<BoundReport> {
    if trace.status != Status::Converged {
        return Err(Error::NotConverged);
    }
    let limit = trace.limit.as_ref().ok_or(Error::NotConverged)?;
    let n = trace.len();
    let defect0 = trace.defect_norms[0];

    let (rate, limit_bounds, rate_note) = match a_priori_bounds(
        defect0,
        config.l,
        config.lipschitz,
        config.scheme,
        limit.dim(),
        n,
    ) {
        Ok(b) => {
            let mut bounds = vec![None];
            bounds.extend(b.distance_to_limit.into_iter().take(n - 1).map(Some));
            (Some(b.rate), bounds, None)
        }
        Err(e) => (None, vec![None; n], Some(e.to_string())),
    };

    let defect_ratios: Vec<Option<f64>> = std::iter::once(None)
        .chain(
            trace
                .defect_norms
                .windows(2)
                .map(|w| (w[0] > 0.0).then(|| w[1] / w[0])),
        )
        .collect();
    let distance_to_limit: Vec<f64> = trace.iterates.iter().map(|x| x.distance(limit)).collect();
    let exclusion_radii: Vec<Option<f64>> = trace
        .defect_norms
        .iter()
        .map(|&d| config.lipschitz.filter(|&lip| lip > 0.0).map(|lip| d / lip))
        .collect();

    let mut violations = Vec::new();
    for i in 0..n {
        if let (Some(rate), Some(ratio)) = (rate, defect_ratios[i]) {
            if ratio > rate + BOUND_SLACK {
                violations.push(Violation {
                    iterate: i,
                    kind: ViolationKind::DefectRatio,
                    observed: ratio,
                    bound: rate,
                    excess: ratio - rate,
                });
            }
        }
        if let Some(bound) = limit_bounds[i] {
            if distance_to_limit[i] > bound + BOUND_SLACK {
                violations.push(Violation {
                    iterate: i,
                    kind: ViolationKind::DistanceToLimit,
                    observed: distance_to_limit[i],
                    bound,
                    excess: distance_to_limit[i] - bound,
                });
            }
        }
        if let Some(radius) = exclusion_radii[i] {
            if distance_to_limit[i] < radius - BOUND_SLACK {
                violations.push(Violation {
                    iterate: i,
                    kind: ViolationKind::Exclusion,
                    observed: distance_to_limit[i],
                    bound: radius,
                    excess: radius - distance_to_limit[i],
                });
            }
        }
    }
    let max_violation = violations.iter().map(|v| v.excess).fold(0.0, f64::max);
    Ok(BoundReport {
        scheme: config.scheme,
        iterates: n,
        rate,
        rate_note,
        defect_ratios,
        distance_to_limit,
        distance_to_limit_bounds: limit_bounds,
        exclusion_radii,
        violation_count: violations.len(),
        max_violation,
        violations,
    })
}
