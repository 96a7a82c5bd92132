//! Nonempty compact convex subsets of ℝ^d.
//!
//! A [`ConvexSet`] is one of four shapes: a closed ball, the convex hull of a
//! finite vertex list, a closed interval of the real line, or a single point.
//! Every shape supports exact support-function evaluation and metric
//! projection. Projection onto a polytope solves the nearest-point problem over
//! convex-combination weights with Wolfe's active-set algorithm.
//!
//! The symmetric Hausdorff distance is computed from the identity
//!
//! ```text
//! dist_H(A, B) = sup_{|u| = 1} |h_A(u) - h_B(u)|
//! ```
//!
//! exactly when neither operand is a polytope (or when d = 1), and by sampling
//! unit directions otherwise.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Direction count used for polytope Hausdorff distances in the plane.
pub const HAUSDORFF_DIRECTIONS_2D: usize = 3600;
/// Direction count used for polytope Hausdorff distances in space.
pub const HAUSDORFF_DIRECTIONS_3D: usize = 5000;

/// Relative tolerance on Wolfe's optimality gap `|x|² - min_i <x, p_i>`.
const WOLFE_GAP_TOL: f64 = 1e-14;

/// The shape and payload of a [`ConvexSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetKind {
    Ball { center: Vector, radius: f64 },
    Polytope { vertices: Vec<Vector> },
    Interval { lo: f64, hi: f64 },
    Singleton { point: Vector },
}

/// A nonempty compact convex set. Constructors validate the payload, so every
/// value of this type is well formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetKind", into = "SetKind")]
pub struct ConvexSet {
    kind: SetKind,
}

impl ConvexSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        Self::from_kind(SetKind::Ball { center, radius })
    }

    pub fn polytope(vertices: Vec<Vector>) -> Result<Self> {
        Self::from_kind(SetKind::Polytope { vertices })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_kind(SetKind::Interval { lo, hi })
    }

    pub fn singleton(point: Vector) -> Self {
        Self {
            kind: SetKind::Singleton { point },
        }
    }

    pub fn from_kind(kind: SetKind) -> Result<Self> {
        match &kind {
            SetKind::Ball { center, radius } => {
                if !center.is_finite() || !radius.is_finite() {
                    return Err(Error::NonFinite("ball"));
                }
                if *radius < 0.0 {
                    return Err(Error::InvalidSet(format!("negative radius {radius}")));
                }
            }
            SetKind::Polytope { vertices } => {
                let first = vertices
                    .first()
                    .ok_or_else(|| Error::InvalidSet("polytope without vertices".into()))?;
                for v in vertices {
                    v.check_dim(first.dim())?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite("polytope vertex"));
                    }
                }
            }
            SetKind::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::NonFinite("interval"));
                }
                if lo > hi {
                    return Err(Error::InvalidSet(format!("empty interval [{lo}, {hi}]")));
                }
            }
            SetKind::Singleton { point } => {
                if !point.is_finite() {
                    return Err(Error::NonFinite("singleton"));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Ball { center, .. } => center.dim(),
            SetKind::Polytope { vertices } => vertices[0].dim(),
            SetKind::Interval { .. } => 1,
            SetKind::Singleton { point } => point.dim(),
        }
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        v.check_dim(self.dim())
    }

    /// `max_{s ∈ S} <s, dir>`.
    pub fn support(&self, dir: &Vector) -> Result<f64> {
        self.check_dim(dir)?;
        Ok(self.support_unchecked(dir))
    }

    fn support_unchecked(&self, dir: &Vector) -> f64 {
        match &self.kind {
            SetKind::Ball { center, radius } => center.dot(dir) + radius * dir.norm(),
            SetKind::Polytope { vertices } => vertices
                .iter()
                .map(|v| v.dot(dir))
                .fold(f64::NEG_INFINITY, f64::max),
            SetKind::Interval { lo, hi } => (lo * dir[0]).max(hi * dir[0]),
            SetKind::Singleton { point } => point.dot(dir),
        }
    }

    /// Metric projection: the unique nearest point of the set to `y`.
    pub fn project(&self, y: &Vector) -> Result<Vector> {
        self.check_dim(y)?;
        match &self.kind {
            SetKind::Ball { center, radius } => {
                let offset = y - center;
                let dist = offset.norm();
                if dist <= *radius {
                    Ok(y.clone())
                } else {
                    Ok(center.add_scaled(radius / dist, &offset))
                }
            }
            SetKind::Polytope { vertices } => nearest_point_in_hull(vertices, y),
            SetKind::Interval { lo, hi } => Ok(Vector::from_raw(vec![y[0].clamp(*lo, *hi)])),
            SetKind::Singleton { point } => Ok(point.clone()),
        }
    }

    /// Euclidean distance from `y` to the set.
    pub fn distance(&self, y: &Vector) -> Result<f64> {
        Ok(y.distance(&self.project(y)?))
    }

    /// `max_{a ∈ A} |a|`.
    pub fn norm(&self) -> f64 {
        match &self.kind {
            SetKind::Ball { center, radius } => center.norm() + radius,
            SetKind::Polytope { vertices } => vertices.iter().map(Vector::norm).fold(0.0, f64::max),
            SetKind::Interval { lo, hi } => lo.abs().max(hi.abs()),
            SetKind::Singleton { point } => point.norm(),
        }
    }

    /// Smallest and largest element of a subset of the real line.
    pub fn bounds_1d(&self) -> Result<(f64, f64)> {
        if self.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let up = Vector::from_raw(vec![1.0]);
        let down = Vector::from_raw(vec![-1.0]);
        Ok((-self.support_unchecked(&down), self.support_unchecked(&up)))
    }

    /// The set shifted by `offset`.
    pub fn translate(&self, offset: &Vector) -> Result<ConvexSet> {
        self.check_dim(offset)?;
        let kind = match &self.kind {
            SetKind::Ball { center, radius } => SetKind::Ball {
                center: center + offset,
                radius: *radius,
            },
            SetKind::Polytope { vertices } => SetKind::Polytope {
                vertices: vertices.iter().map(|v| v + offset).collect(),
            },
            SetKind::Interval { lo, hi } => SetKind::Interval {
                lo: lo + offset[0],
                hi: hi + offset[0],
            },
            SetKind::Singleton { point } => SetKind::Singleton {
                point: point + offset,
            },
        };
        Ok(ConvexSet { kind })
    }

    fn is_polytope(&self) -> bool {
        matches!(self.kind, SetKind::Polytope { .. })
    }
}

impl TryFrom<SetKind> for ConvexSet {
    type Error = Error;

    fn try_from(kind: SetKind) -> Result<Self> {
        ConvexSet::from_kind(kind)
    }
}

impl From<ConvexSet> for SetKind {
    fn from(set: ConvexSet) -> Self {
        set.kind
    }
}

/// Free-function forms of the set queries.
pub fn support(set: &ConvexSet, dir: &Vector) -> Result<f64> {
    set.support(dir)
}

pub fn project(y: &Vector, set: &ConvexSet) -> Result<Vector> {
    set.project(y)
}

pub fn distance(y: &Vector, set: &ConvexSet) -> Result<f64> {
    set.distance(y)
}

pub fn set_norm(set: &ConvexSet) -> f64 {
    set.norm()
}

/// A Hausdorff distance together with an upper bound on its sampling error.
/// `resolution` is zero when the value is computed in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HausdorffEstimate {
    pub value: f64,
    pub resolution: f64,
}

/// Symmetric Hausdorff distance `dist_H(a, b)`.
pub fn hausdorff(a: &ConvexSet, b: &ConvexSet) -> Result<f64> {
    hausdorff_estimate(a, b).map(|h| h.value)
}

pub fn hausdorff_estimate(a: &ConvexSet, b: &ConvexSet) -> Result<HausdorffEstimate> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.dim(),
        });
    }
    if d == 1 {
        let (alo, ahi) = a.bounds_1d()?;
        let (blo, bhi) = b.bounds_1d()?;
        return Ok(HausdorffEstimate {
            value: (alo - blo).abs().max((ahi - bhi).abs()),
            resolution: 0.0,
        });
    }
    if !a.is_polytope() && !b.is_polytope() {
        let (ca, ra) = ball_parts(a);
        let (cb, rb) = ball_parts(b);
        return Ok(HausdorffEstimate {
            value: ca.distance(cb) + (ra - rb).abs(),
            resolution: 0.0,
        });
    }
    let (directions, spacing) = match d {
        2 => (
            circle_directions(HAUSDORFF_DIRECTIONS_2D),
            PI / HAUSDORFF_DIRECTIONS_2D as f64,
        ),
        3 => (
            sphere_directions(HAUSDORFF_DIRECTIONS_3D),
            (4.0 * PI / HAUSDORFF_DIRECTIONS_3D as f64).sqrt(),
        ),
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let value = directions
        .iter()
        .map(|u| (a.support_unchecked(u) - b.support_unchecked(u)).abs())
        .fold(0.0, f64::max);
    Ok(HausdorffEstimate {
        value,
        resolution: (a.norm() + b.norm()) * spacing,
    })
}

fn ball_parts(set: &ConvexSet) -> (&Vector, f64) {
    match &set.kind {
        SetKind::Ball { center, radius } => (center, *radius),
        SetKind::Singleton { point } => (point, 0.0),
        _ => unreachable!("only balls and points reach the closed form"),
    }
}

fn circle_directions(count: usize) -> Vec<Vector> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / count as f64;
            Vector::from_raw(vec![t.cos(), t.sin()])
        })
        .collect()
}

/// Fibonacci lattice on the unit sphere.
fn sphere_directions(count: usize) -> Vec<Vector> {
    let golden = PI * (1.0 + 5f64.sqrt());
    (0..count)
        .map(|k| {
            let i = k as f64 + 0.5;
            let polar = (1.0 - 2.0 * i / count as f64).acos();
            let azimuth = golden * i;
            Vector::from_raw(vec![
                azimuth.cos() * polar.sin(),
                azimuth.sin() * polar.sin(),
                polar.cos(),
            ])
        })
        .collect()
}

/// Nearest point to `y` in the convex hull of `vertices` (Wolfe, 1976).
///
/// Works on the translated points `p_i = v_i - y` and keeps a corral of
/// affinely independent points with positive weights. Duplicated or affinely
/// dependent vertices need no preprocessing.
fn nearest_point_in_hull(vertices: &[Vector], y: &Vector) -> Result<Vector> {
    let points: Vec<Vector> = vertices.iter().map(|v| v - y).collect();
    let n = points.len();
    let max_sq = points.iter().map(Vector::norm_squared).fold(0.0, f64::max);
    if n == 1 || max_sq == 0.0 {
        return Ok(vertices[0].clone());
    }
    let gap_tol = WOLFE_GAP_TOL * max_sq;
    let cap = 10 * n * n;

    let start = (0..n)
        .min_by(|&i, &j| {
            points[i]
                .norm_squared()
                .total_cmp(&points[j].norm_squared())
        })
        .expect("nonempty");
    let mut corral = vec![start];
    let mut weights = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;

    loop {
        iterations += 1;
        if iterations > cap {
            return Err(Error::ProjectionDidNotConverge { iterations: cap });
        }
        let (entering, min_dot) = (0..n)
            .map(|i| (i, x.dot(&points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if x.norm_squared() - min_dot <= gap_tol || corral.contains(&entering) {
            break;
        }
        corral.push(entering);
        weights.push(0.0);

        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::ProjectionDidNotConverge { iterations: cap });
            }
            let alpha = affine_minimizer(&points, &corral);
            if alpha.iter().all(|&a| a > 0.0) {
                weights = alpha;
                x = combination(&points, &corral, &weights);
                break;
            }
            // Move from the current weights toward `alpha` until a weight hits zero.
            let theta = weights
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= 0.0)
                .map(|(&w, &a)| w / (w - a))
                .fold(1.0, f64::min);
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w = theta * a + (1.0 - theta) * *w;
            }
            let before = corral.len();
            let mut k = 0;
            while k < corral.len() {
                if weights[k] <= 0.0 {
                    corral.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            if corral.is_empty() {
                return Err(Error::ProjectionDidNotConverge { iterations });
            }
            if corral.len() == before {
                // Rounding left every weight positive; drop the smallest.
                let k = (0..weights.len())
                    .min_by(|&i, &j| weights[i].total_cmp(&weights[j]))
                    .expect("nonempty");
                corral.remove(k);
                weights.remove(k);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }
    Ok(combination(vertices, &corral, &weights))
}

fn combination(points: &[Vector], corral: &[usize], weights: &[f64]) -> Vector {
    let mut out = vec![0.0; points[0].dim()];
    for (&i, &w) in corral.iter().zip(weights) {
        for (o, c) in out.iter_mut().zip(points[i].coords()) {
            *o += w * c;
        }
    }
    Vector::from_raw(out)
}

/// Weights `alpha` with `sum alpha = 1` minimising `|sum alpha_i p_i|` over the
/// affine hull of the corral points.
fn affine_minimizer(points: &[Vector], corral: &[usize]) -> Vec<f64> {
    let m = corral.len();
    if m == 1 {
        return vec![1.0];
    }
    let d = points[0].dim();
    let base = &points[corral[0]];
    let edges = DMatrix::from_fn(d, m - 1, |r, c| points[corral[c + 1]][r] - base[r]);
    let rhs = DVector::from_fn(d, |r, _| -base[r]);
    let svd = edges.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let beta = svd
        .solve(&rhs, eps)
        .expect("both singular vector sets were computed");
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta.iter());
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector;
    use approx::assert_abs_diff_eq;

    fn square_q() -> ConvexSet {
        ConvexSet::polytope(vec![
            vector![1, 0],
            vector![0, -1],
            vector![-1, 0],
            vector![0, 1],
        ])
        .unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(ConvexSet::ball(vector![0, 0], -1.0).is_err());
        assert!(ConvexSet::interval(2.0, 1.0).is_err());
        assert!(ConvexSet::polytope(vec![]).is_err());
        assert!(matches!(
            ConvexSet::polytope(vec![vector![0, 0], vector![1]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ConvexSet::ball(vector![0], f64::INFINITY).is_err());
    }

    #[test]
    fn support_examples() {
        let ball = ConvexSet::ball(vector![1, 0], 2.0).unwrap();
        assert_eq!(ball.support(&vector![1, 0]).unwrap(), 3.0);
        assert_eq!(square_q().support(&vector![1, 1]).unwrap(), 1.0);
        let point = ConvexSet::singleton(vector![2, 3]);
        assert_eq!(point.support(&vector![0, 1]).unwrap(), 3.0);
        let interval = ConvexSet::interval(-1.0, 2.0).unwrap();
        assert_eq!(interval.support(&vector![-3]).unwrap(), 3.0);
        assert!(matches!(
            ball.support(&vector![1, 0, 0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn project_examples() {
        let unit = ConvexSet::ball(vector![0, 0], 1.0).unwrap();
        assert_eq!(unit.project(&vector![3, 0]).unwrap(), vector![1, 0]);
        assert_eq!(
            square_q().project(&vector![0.5, 0]).unwrap(),
            vector![0.5, 0]
        );
        // Nearest point computed by dense brute force over convex combinations.
        let p = square_q().project(&vector![2, 2]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
        let interval = ConvexSet::interval(-1.0, 2.0).unwrap();
        assert_eq!(interval.project(&vector![5]).unwrap(), vector![2]);
        assert!(unit.project(&vector![1]).is_err());
    }

    #[test]
    fn distance_examples() {
        let unit = ConvexSet::ball(vector![0, 0], 1.0).unwrap();
        assert_eq!(unit.distance(&vector![3, 0]).unwrap(), 2.0);
        assert_eq!(square_q().distance(&vector![0, 0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            square_q().distance(&vector![2, 2]).unwrap(),
            2.121_320_343_559_642_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hausdorff_examples() {
        let b1 = ConvexSet::ball(vector![0, 0], 1.0).unwrap();
        let b2 = ConvexSet::ball(vector![0, 0], 2.0).unwrap();
        assert_eq!(hausdorff(&b1, &b2).unwrap(), 1.0);
        assert_eq!(hausdorff(&square_q(), &square_q()).unwrap(), 0.0);
        // 1 - 1/sqrt(2), brute-force two-sided distance over dense samples of both sets.
        let h = hausdorff_estimate(&square_q(), &b1).unwrap();
        assert_abs_diff_eq!(h.value, 0.292_893_218_813_452_5, epsilon = 1e-12);
        assert!(h.resolution > 0.0 && h.resolution < 2e-3);
    }

    #[test]
    fn hausdorff_closed_forms_and_limits() {
        let a = ConvexSet::interval(-1.0, 3.0).unwrap();
        let b = ConvexSet::polytope(vec![vector![0], vector![1]]).unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), 2.0);
        let p = ConvexSet::singleton(vector![3, 4]);
        let ball = ConvexSet::ball(vector![0, 0], 1.0).unwrap();
        assert_eq!(hausdorff(&p, &ball).unwrap(), 6.0);

        let cube: Vec<Vector> = (0..8)
            .map(|k| vector![k & 1, (k >> 1) & 1, (k >> 2) & 1])
            .collect();
        let cube = ConvexSet::polytope(cube).unwrap();
        let shifted = cube.translate(&vector![0.5, 0, 0]).unwrap();
        assert_abs_diff_eq!(hausdorff(&cube, &shifted).unwrap(), 0.5, epsilon = 1e-3);

        let simplex4 = ConvexSet::polytope(vec![vector![0, 0, 0, 0], vector![1, 0, 0, 0]]).unwrap();
        assert_eq!(
            hausdorff(&simplex4, &simplex4),
            Err(Error::UnsupportedDimension(4))
        );
    }

    #[test]
    fn set_norm_examples() {
        assert_eq!(ConvexSet::ball(vector![3, 4], 1.0).unwrap().norm(), 6.0);
        assert_eq!(square_q().norm(), 1.0);
        assert_eq!(ConvexSet::singleton(vector![0, 0]).norm(), 0.0);
    }

    #[test]
    fn degenerate_polytopes_project() {
        // Duplicated and collinear vertices.
        let seg = ConvexSet::polytope(vec![
            vector![0, 0],
            vector![1, 1],
            vector![0.5, 0.5],
            vector![1, 1],
            vector![2, 2],
        ])
        .unwrap();
        let p = seg.project(&vector![2, 0]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
        let single = ConvexSet::polytope(vec![vector![1, 2]]).unwrap();
        assert_eq!(single.project(&vector![0, 0]).unwrap(), vector![1, 2]);
    }

    #[test]
    fn projects_onto_3d_polytope() {
        let tetra = ConvexSet::polytope(vec![
            vector![0, 0, 0],
            vector![1, 0, 0],
            vector![0, 1, 0],
            vector![0, 0, 1],
        ])
        .unwrap();
        let p = tetra.project(&vector![1, 1, 1]).unwrap();
        for c in p.coords() {
            assert_abs_diff_eq!(*c, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_eq!(
            tetra.project(&vector![0.1, 0.1, 0.1]).unwrap(),
            vector![0.1, 0.1, 0.1]
        );
    }

    #[test]
    fn json_encoding() {
        let ball: ConvexSet =
            serde_json::from_str(r#"{"ball":{"center":[1,2],"radius":0.5}}"#).unwrap();
        assert_eq!(ball, ConvexSet::ball(vector![1, 2], 0.5).unwrap());
        let poly: ConvexSet =
            serde_json::from_str(r#"{"polytope":{"vertices":[[1,0],[0,1]]}}"#).unwrap();
        assert_eq!(poly.dim(), 2);
        let interval: ConvexSet = serde_json::from_str(r#"{"interval":{"lo":-1,"hi":1}}"#).unwrap();
        assert_eq!(interval.bounds_1d().unwrap(), (-1.0, 1.0));
        let point: ConvexSet = serde_json::from_str(r#"{"singleton":{"point":[3]}}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&point).unwrap(),
            r#"{"singleton":{"point":[3.0]}}"#
        );
        assert!(serde_json::from_str::<ConvexSet>(r#"{"interval":{"lo":2,"hi":1}}"#).is_err());
        assert!(serde_json::from_str::<ConvexSet>(r#"{"polytope":{"vertices":[]}}"#).is_err());
    }
}
