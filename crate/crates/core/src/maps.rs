//! Set-valued maps `F: ℝ^d → CC(ℝ^d)` and empirical checks of their
//! regularity constants.
//!
//! A map is `l`-ROSL (relaxed one-sided Lipschitz) when for all `x, x'` and
//! every `y ∈ F(x)` some `y' ∈ F(x')` satisfies `<y - y', x - x'> ≤ l|x - x'|²`.
//! For compact convex values this is equivalent to the support-function
//! inequality
//!
//! ```text
//! h_{F(x)}(x - x') - h_{F(x')}(x - x') ≤ l |x - x'|²
//! ```
//!
//! which is what [`rosl_pair_check`] and [`estimate_rosl`] evaluate.

use std::fmt;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::{hausdorff, ConvexSet, SetKind};
use crate::vector::Vector;

/// Slack added to the right-hand side of the ROSL inequality.
pub const ROSL_CHECK_SLACK: f64 = 1e-9;
/// Sampled pairs closer than this are redrawn.
pub const MIN_PAIR_SEPARATION: f64 = 1e-6;

/// A set-valued map with nonempty compact convex values.
///
/// Implementors provide [`Multimap::value_at`]; callers use
/// [`Multimap::evaluate`], which validates dimensions on the way in and out.
/// Evaluation must be pure: equal inputs give bit-identical sets.
pub trait Multimap: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn value_at(&self, x: &Vector) -> Result<ConvexSet>;

    /// Declared one-sided Lipschitz constant `l`, if known.
    fn declared_rosl(&self) -> Option<f64> {
        None
    }

    /// Declared Lipschitz constant `L`, if known.
    fn declared_lipschitz(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, x: &Vector) -> Result<ConvexSet> {
        x.check_dim(self.dim())?;
        if !x.is_finite() {
            return Err(Error::NonFinite("map argument"));
        }
        let value = self.value_at(x)?;
        if value.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: value.dim(),
            });
        }
        Ok(value)
    }
}

/// The closed family of maps that can be described in a problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `F(x) = l x + α x⊥` on ℝ² with `α = sqrt(L² - l²)` and
    /// `x⊥ = (x₂, -x₁)`.
    #[serde(rename = "rotation2d")]
    Rotation2D {
        l: f64,
        #[serde(rename = "L")]
        lipschitz: f64,
    },
    /// Scalar map: `-L + l(x - 1)` for `x ≥ 1`, `-L x` on `[-1, 1]`,
    /// `L + l(x + 1)` for `x ≤ -1`.
    #[serde(rename = "piecewise1d")]
    Piecewise1D {
        l: f64,
        #[serde(rename = "L")]
        lipschitz: f64,
    },
    /// `F(x) = M x + A(|x|) P` on ℝ², `A(θ)` the rotation by angle θ.
    RotatedPolytope {
        matrix: Vec<Vec<f64>>,
        polytope: ConvexSet,
    },
    /// `F(x) = M x + S` on ℝ^d.
    Affine {
        matrix: Vec<Vec<f64>>,
        set: ConvexSet,
    },
    /// `F(x) = S`.
    Constant { set: ConvexSet },
}

/// A [`MapSpec`] with optional overrides of its declared constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BuiltinMapRepr", into = "BuiltinMapRepr")]
pub struct BuiltinMap {
    spec: MapSpec,
    declared_l: Option<f64>,
    declared_lipschitz: Option<f64>,
    name: String,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct BuiltinMapRepr {
    #[serde(flatten)]
    spec: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_l: Option<f64>,
    #[serde(
        default,
        rename = "declared_L",
        skip_serializing_if = "Option::is_none"
    )]
    declared_lipschitz: Option<f64>,
}

impl TryFrom<BuiltinMapRepr> for BuiltinMap {
    type Error = Error;

    fn try_from(repr: BuiltinMapRepr) -> Result<Self> {
        let mut map = BuiltinMap::new(repr.spec)?;
        if let Some(l) = repr.declared_l {
            map = map.with_declared_rosl(l)?;
        }
        if let Some(lip) = repr.declared_lipschitz {
            map = map.with_declared_lipschitz(lip)?;
        }
        Ok(map)
    }
}

impl From<BuiltinMap> for BuiltinMapRepr {
    fn from(map: BuiltinMap) -> Self {
        let defaults = default_constants(&map.spec);
        BuiltinMapRepr {
            declared_l: map.declared_l.filter(|&l| Some(l) != defaults.0),
            declared_lipschitz: map
                .declared_lipschitz
                .filter(|&lip| Some(lip) != defaults.1),
            spec: map.spec,
        }
    }
}

fn default_constants(spec: &MapSpec) -> (Option<f64>, Option<f64>) {
    match spec {
        MapSpec::Rotation2D { l, lipschitz } | MapSpec::Piecewise1D { l, lipschitz } => {
            (Some(*l), Some(*lipschitz))
        }
        MapSpec::Constant { .. } => (Some(0.0), Some(0.0)),
        MapSpec::RotatedPolytope { .. } | MapSpec::Affine { .. } => (None, None),
    }
}

fn check_square(matrix: &[Vec<f64>], dim: usize) -> Result<()> {
    if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidMap(format!("matrix must be {dim}x{dim}")));
    }
    if matrix.iter().flatten().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("map matrix"));
    }
    Ok(())
}

fn check_rosl_pair(l: f64, lipschitz: f64) -> Result<()> {
    if !(l.is_finite() && lipschitz.is_finite()) {
        return Err(Error::NonFinite("map constants"));
    }
    if l >= 0.0 {
        return Err(Error::InvalidMap(format!("l = {l} must be negative")));
    }
    if lipschitz < -l {
        return Err(Error::InvalidMap(format!(
            "L = {lipschitz} must satisfy L >= -l = {}",
            -l
        )));
    }
    Ok(())
}

impl BuiltinMap {
    pub fn new(spec: MapSpec) -> Result<Self> {
        let (name, alpha) = match &spec {
            MapSpec::Rotation2D { l, lipschitz } => {
                check_rosl_pair(*l, *lipschitz)?;
                let alpha = (lipschitz * lipschitz - l * l).max(0.0).sqrt();
                (format!("rotation2d(l={l}, L={lipschitz})"), alpha)
            }
            MapSpec::Piecewise1D { l, lipschitz } => {
                check_rosl_pair(*l, *lipschitz)?;
                (format!("piecewise1d(l={l}, L={lipschitz})"), 0.0)
            }
            MapSpec::RotatedPolytope { matrix, polytope } => {
                if polytope.dim() != 2 {
                    return Err(Error::InvalidMap(
                        "rotated_polytope needs a planar set".into(),
                    ));
                }
                check_square(matrix, 2)?;
                ("rotated_polytope".to_string(), 0.0)
            }
            MapSpec::Affine { matrix, set } => {
                check_square(matrix, set.dim())?;
                ("affine".to_string(), 0.0)
            }
            MapSpec::Constant { .. } => ("constant".to_string(), 0.0),
        };
        let (declared_l, declared_lipschitz) = default_constants(&spec);
        Ok(Self {
            spec,
            declared_l,
            declared_lipschitz,
            name,
            alpha,
        })
    }

    pub fn rotation_2d(l: f64, lipschitz: f64) -> Result<Self> {
        Self::new(MapSpec::Rotation2D { l, lipschitz })
    }

    pub fn piecewise_1d(l: f64, lipschitz: f64) -> Result<Self> {
        Self::new(MapSpec::Piecewise1D { l, lipschitz })
    }

    pub fn rotated_polytope(matrix: Vec<Vec<f64>>, polytope: ConvexSet) -> Result<Self> {
        Self::new(MapSpec::RotatedPolytope { matrix, polytope })
    }

    pub fn affine(matrix: Vec<Vec<f64>>, set: ConvexSet) -> Result<Self> {
        Self::new(MapSpec::Affine { matrix, set })
    }

    pub fn constant(set: ConvexSet) -> Self {
        Self::new(MapSpec::Constant { set }).expect("constant maps are always valid")
    }

    pub fn with_declared_rosl(mut self, l: f64) -> Result<Self> {
        if !l.is_finite() {
            return Err(Error::NonFinite("declared_l"));
        }
        self.declared_l = Some(l);
        Ok(self)
    }

    pub fn with_declared_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !lipschitz.is_finite() || lipschitz < 0.0 {
            return Err(Error::InvalidMap(format!("declared_L = {lipschitz}")));
        }
        self.declared_lipschitz = Some(lipschitz);
        Ok(self)
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }
}

fn mat_vec(matrix: &[Vec<f64>], x: &Vector) -> Vector {
    Vector::from_raw(
        matrix
            .iter()
            .map(|row| row.iter().zip(x.coords()).map(|(m, c)| m * c).sum())
            .collect(),
    )
}

fn rotate(angle: f64, p: &Vector) -> Vector {
    let (s, c) = angle.sin_cos();
    Vector::from_raw(vec![c * p[0] - s * p[1], s * p[0] + c * p[1]])
}

/// `A(angle) S + offset` for a planar set.
fn rotate_and_shift(set: &ConvexSet, angle: f64, offset: &Vector) -> Result<ConvexSet> {
    let kind = match set.kind() {
        SetKind::Ball { center, radius } => SetKind::Ball {
            center: &rotate(angle, center) + offset,
            radius: *radius,
        },
        SetKind::Polytope { vertices } => SetKind::Polytope {
            vertices: vertices
                .iter()
                .map(|v| &rotate(angle, v) + offset)
                .collect(),
        },
        SetKind::Singleton { point } => SetKind::Singleton {
            point: &rotate(angle, point) + offset,
        },
        SetKind::Interval { .. } => return Err(Error::UnsupportedDimension(1)),
    };
    ConvexSet::from_kind(kind)
}

impl Multimap for BuiltinMap {
    fn dim(&self) -> usize {
        match &self.spec {
            MapSpec::Rotation2D { .. } | MapSpec::RotatedPolytope { .. } => 2,
            MapSpec::Piecewise1D { .. } => 1,
            MapSpec::Affine { set, .. } | MapSpec::Constant { set } => set.dim(),
        }
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value_at(&self, x: &Vector) -> Result<ConvexSet> {
        match &self.spec {
            MapSpec::Rotation2D { l, .. } => {
                let a = self.alpha;
                Ok(ConvexSet::singleton(Vector::from_raw(vec![
                    l * x[0] + a * x[1],
                    l * x[1] - a * x[0],
                ])))
            }
            MapSpec::Piecewise1D { l, lipschitz } => {
                let t = x[0];
                let y = if t >= 1.0 {
                    -lipschitz + l * (t - 1.0)
                } else if t <= -1.0 {
                    lipschitz + l * (t + 1.0)
                } else {
                    -lipschitz * t
                };
                Ok(ConvexSet::singleton(Vector::from_raw(vec![y])))
            }
            MapSpec::RotatedPolytope { matrix, polytope } => {
                let shift = mat_vec(matrix, x);
                rotate_and_shift(polytope, x.norm(), &shift)
            }
            MapSpec::Affine { matrix, set } => {
                let shift = mat_vec(matrix, x);
                set.translate(&shift)
            }
            MapSpec::Constant { set } => Ok(set.clone()),
        }
    }

    fn declared_rosl(&self) -> Option<f64> {
        self.declared_l
    }

    fn declared_lipschitz(&self) -> Option<f64> {
        self.declared_lipschitz
    }
}

/// Adapts a closure to [`Multimap`].
pub struct FnMultimap<F> {
    name: String,
    dim: usize,
    eval: F,
    declared_l: Option<f64>,
    declared_lipschitz: Option<f64>,
}

impl<F> FnMultimap<F>
where
    F: Fn(&Vector) -> Result<ConvexSet> + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, eval: F) -> Self {
        Self {
            name: name.into(),
            dim,
            eval,
            declared_l: None,
            declared_lipschitz: None,
        }
    }

    pub fn with_constants(mut self, l: Option<f64>, lipschitz: Option<f64>) -> Self {
        self.declared_l = l;
        self.declared_lipschitz = lipschitz;
        self
    }
}

impl<F> Multimap for FnMultimap<F>
where
    F: Fn(&Vector) -> Result<ConvexSet> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value_at(&self, x: &Vector) -> Result<ConvexSet> {
        (self.eval)(x)
    }

    fn declared_rosl(&self) -> Option<f64> {
        self.declared_l
    }

    fn declared_lipschitz(&self) -> Option<f64> {
        self.declared_lipschitz
    }
}

impl fmt::Debug for dyn Multimap + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multimap")
            .field("name", &self.name())
            .field("dim", &self.dim())
            .finish()
    }
}

/// Checks the ROSL inequality with constant `l` for the ordered pair `(x, x2)`.
pub fn rosl_pair_check(map: &dyn Multimap, x: &Vector, x2: &Vector, l: f64) -> Result<bool> {
    let diff = x - x2;
    if diff.norm_squared() == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let lhs = map.evaluate(x)?.support(&diff)? - map.evaluate(x2)?.support(&diff)?;
    Ok(lhs <= l * diff.norm_squared() + ROSL_CHECK_SLACK)
}

/// Axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidMap(
                "box bounds must have equal, positive length".into(),
            ));
        }
        if self.lo.iter().chain(&self.hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box"));
        }
        if self.lo.iter().zip(&self.hi).any(|(lo, hi)| lo > hi) {
            return Err(Error::InvalidMap("box has lo > hi".into()));
        }
        Ok(())
    }

    fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(lo, hi)| lo >= hi)
    }

    fn sample(&self, rng: &mut SplitMix64) -> Vector {
        Vector::from_raw(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(lo, hi)| lo + (hi - lo) * unit_f64(rng))
                .collect(),
        )
    }
}

fn unit_f64(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n_samples` seeded pairs from the box, each pair at least
/// [`MIN_PAIR_SEPARATION`] apart. A shorter run is a prefix of a longer one.
pub fn sample_pairs(
    bounds: &AxisBox,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(Vector, Vector)>> {
    bounds.validate()?;
    if bounds.is_degenerate() {
        return Err(Error::Precondition(
            "sampling box must have positive width".into(),
        ));
    }
    if n_samples < 2 {
        return Err(Error::Precondition("n_samples must be at least 2".into()));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_samples);
    while pairs.len() < n_samples {
        let x = bounds.sample(&mut rng);
        let mut x2 = bounds.sample(&mut rng);
        while x.distance(&x2) < MIN_PAIR_SEPARATION {
            x2 = bounds.sample(&mut rng);
        }
        pairs.push((x, x2));
    }
    Ok(pairs)
}

fn max_over_pairs<F>(pairs: &[(Vector, Vector)], ratio: F) -> Result<f64>
where
    F: Fn(&Vector, &Vector) -> Result<f64> + Sync,
{
    pairs
        .par_iter()
        .map(|(x, x2)| ratio(x, x2))
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

/// Largest sampled `dist_H(F(x), F(x')) / |x - x'|`. A lower bound on the
/// true Lipschitz constant.
pub fn estimate_lipschitz(
    map: &dyn Multimap,
    bounds: &AxisBox,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if bounds.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: bounds.dim(),
        });
    }
    let pairs = sample_pairs(bounds, n_samples, seed)?;
    max_over_pairs(&pairs, |x, x2| {
        Ok(hausdorff(&map.evaluate(x)?, &map.evaluate(x2)?)? / x.distance(x2))
    })
}

/// Largest sampled ROSL ratio `[h_{F(x)}(d) - h_{F(x')}(d)] / |d|²`, taken
/// over both orderings of every pair. Every `l` at or above the result passes
/// [`rosl_pair_check`] on the sample; it is not a certificate for the map.
pub fn estimate_rosl(
    map: &dyn Multimap,
    bounds: &AxisBox,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if bounds.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: bounds.dim(),
        });
    }
    let pairs = sample_pairs(bounds, n_samples, seed)?;
    max_over_pairs(&pairs, |x, x2| {
        let fx = map.evaluate(x)?;
        let fx2 = map.evaluate(x2)?;
        let d = x - x2;
        let back = -&d;
        let sq = d.norm_squared();
        let forward = (fx.support(&d)? - fx2.support(&d)?) / sq;
        let backward = (fx2.support(&back)? - fx.support(&back)?) / sq;
        Ok(forward.max(backward))
    })
}
