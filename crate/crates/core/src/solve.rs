//! Fixed-point schemes for `ȳ ∈ F(x)` with an `l`-ROSL map, `l < 0`.
//!
//! Every scheme moves along the defect vector `v = ȳ - Proj(ȳ, F(x))`:
//!
//! | scheme                 | update                          | admissible constants |
//! |------------------------|---------------------------------|----------------------|
//! | `basic`, `basic_1d`    | `x + v / (2l)`                  | any `l < 0`          |
//! | `lipschitz_refined`    | `x + (l / L²) v`                | `d ≥ 2`, `L ≤ -√2 l` |
//! | `lipschitz_refined_1d` | `x + ½(1/l - 1/L) v`            | `d = 1`, `L ≤ -2l`   |
//! | `adaptive`             | `x + λ v`, backtracking on `λ`  | none                 |
//!
//! At each iterate the solver records a [`Certificate`]: the ball centred at
//! `x + v/(2l)` with radius `-|v|/(2l)` contains a solution, and when `F` is
//! `L`-Lipschitz no solution lies strictly inside `B(x, |v|/L)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::Multimap;
use crate::vector::Vector;

/// Relative slack when comparing constants against scheme thresholds, so
/// that boundary cases such as `L = √2` with `l = -1` are admitted.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "basic_1d")]
    Basic1d,
    #[serde(rename = "lipschitz_refined")]
    LipschitzRefined,
    #[serde(rename = "lipschitz_refined_1d")]
    LipschitzRefined1d,
    #[serde(rename = "adaptive")]
    Adaptive,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Basic => "basic",
            Scheme::Basic1d => "basic_1d",
            Scheme::LipschitzRefined => "lipschitz_refined",
            Scheme::LipschitzRefined1d => "lipschitz_refined_1d",
            Scheme::Adaptive => "adaptive",
        }
    }
}

/// Backtracking parameters for [`Scheme::Adaptive`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveParams {
    /// Initial (and maximal) step factor λ₀ < 0. Defaults to `1/(2l)`.
    pub initial_step: Option<f64>,
    /// A trial is accepted when its defect is at most `(1 - acceptance)|v|`.
    pub acceptance: f64,
    pub shrink: f64,
    pub growth: f64,
    pub max_halvings: usize,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            initial_step: None,
            acceptance: 1e-4,
            shrink: 0.5,
            growth: 1.5,
            max_halvings: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub scheme: Scheme,
    pub l: f64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default = "default_defect_tol")]
    pub defect_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_divergence_threshold")]
    pub divergence_threshold: f64,
    #[serde(default)]
    pub adaptive: AdaptiveParams,
}

fn default_defect_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    10_000
}

fn default_divergence_threshold() -> f64 {
    1e12
}

impl SolveConfig {
    pub fn new(scheme: Scheme, l: f64, lipschitz: Option<f64>) -> Self {
        Self {
            scheme,
            l,
            lipschitz,
            defect_tol: default_defect_tol(),
            max_iter: default_max_iter(),
            divergence_threshold: default_divergence_threshold(),
            adaptive: AdaptiveParams::default(),
        }
    }

    pub fn with_defect_tol(mut self, tol: f64) -> Self {
        self.defect_tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Checks the field invariants and the scheme's constant requirements for
    /// a problem of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.l.is_finite() && self.l < 0.0) {
            return Err(Error::Precondition(format!(
                "l = {} must be negative",
                self.l
            )));
        }
        if let Some(lip) = self.lipschitz {
            if !(lip.is_finite() && lip >= 0.0) {
                return Err(Error::Precondition(format!(
                    "L = {lip} must be nonnegative"
                )));
            }
        }
        if !(self.defect_tol > 0.0) {
            return Err(Error::Precondition("defect_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Precondition("max_iter must be positive".into()));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::Precondition(
                "divergence_threshold must be positive".into(),
            ));
        }
        match self.scheme {
            Scheme::Basic => {}
            Scheme::Basic1d => require_dim_one(self.scheme, dim)?,
            Scheme::LipschitzRefined => {
                if dim < 2 {
                    return Err(Error::Precondition(
                        "lipschitz_refined needs dimension d >= 2".into(),
                    ));
                }
                check_refined(self.l, self.require_lipschitz()?)?;
            }
            Scheme::LipschitzRefined1d => {
                require_dim_one(self.scheme, dim)?;
                check_refined_1d(self.l, self.require_lipschitz()?)?;
            }
            Scheme::Adaptive => {
                let p = &self.adaptive;
                if let Some(step) = p.initial_step {
                    if !(step.is_finite() && step < 0.0) {
                        return Err(Error::Precondition("initial_step must be negative".into()));
                    }
                }
                if !(p.shrink > 0.0 && p.shrink < 1.0) || !(p.growth >= 1.0) {
                    return Err(Error::Precondition(
                        "adaptive needs 0 < shrink < 1 and growth >= 1".into(),
                    ));
                }
                if !(0.0..1.0).contains(&p.acceptance) || p.max_halvings == 0 {
                    return Err(Error::Precondition(
                        "adaptive needs 0 <= acceptance < 1 and max_halvings > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_lipschitz(&self) -> Result<f64> {
        self.lipschitz
            .ok_or_else(|| Error::Precondition(format!("scheme {} needs L", self.scheme.as_str())))
    }
}

fn require_dim_one(scheme: Scheme, dim: usize) -> Result<()> {
    if dim == 1 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "scheme {} needs dimension d = 1, got {dim}",
            scheme.as_str()
        )))
    }
}

fn check_refined(l: f64, lipschitz: f64) -> Result<()> {
    let bound = -2f64.sqrt() * l;
    if l < 0.0 && lipschitz > 0.0 && lipschitz <= bound * (1.0 + THRESHOLD_SLACK) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "lipschitz_refined needs 0 < L <= -sqrt(2) l = {bound}, got L = {lipschitz}"
        )))
    }
}

fn check_refined_1d(l: f64, lipschitz: f64) -> Result<()> {
    let bound = -2.0 * l;
    if l < 0.0 && lipschitz > 0.0 && lipschitz <= bound * (1.0 + THRESHOLD_SLACK) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "lipschitz_refined_1d needs 0 < L <= -2l = {bound}, got L = {lipschitz}"
        )))
    }
}

fn check_l(l: f64) -> Result<()> {
    if l.is_finite() && l < 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("l = {l} must be negative")))
    }
}

/// `v = ȳ - Proj(ȳ, F(x))`.
pub fn defect_vector(map: &dyn Multimap, y_bar: &Vector, x: &Vector) -> Result<Vector> {
    y_bar.check_dim(map.dim())?;
    let value = map.evaluate(x)?;
    Ok(y_bar - &value.project(y_bar)?)
}

/// One step of `x ↦ x + (ȳ - Proj(ȳ, F(x))) / (2l)`. Returns `(x_next, v)`.
pub fn step_basic(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    l: f64,
) -> Result<(Vector, Vector)> {
    check_l(l)?;
    let v = defect_vector(map, y_bar, x)?;
    Ok((x.add_scaled(0.5 / l, &v), v))
}

/// One step of `x ↦ x + (l/L²) v`; needs `d ≥ 2` and `0 < L ≤ -√2 l`.
pub fn step_lipschitz_refined(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    l: f64,
    lipschitz: f64,
) -> Result<(Vector, Vector)> {
    check_l(l)?;
    check_refined(l, lipschitz)?;
    if map.dim() < 2 {
        return Err(Error::Precondition(
            "lipschitz_refined needs dimension d >= 2".into(),
        ));
    }
    let v = defect_vector(map, y_bar, x)?;
    Ok((x.add_scaled(l / (lipschitz * lipschitz), &v), v))
}

/// One step of `x ↦ x + ½(1/l - 1/L) v`, the midpoint of `[x + v/l, x - v/L]`;
/// needs `d = 1` and `0 < L ≤ -2l`.
pub fn step_lipschitz_refined_1d(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    l: f64,
    lipschitz: f64,
) -> Result<(Vector, Vector)> {
    check_l(l)?;
    check_refined_1d(l, lipschitz)?;
    require_dim_one(Scheme::LipschitzRefined1d, map.dim())?;
    let v = defect_vector(map, y_bar, x)?;
    Ok((x.add_scaled(refined_1d_factor(l, lipschitz), &v), v))
}

fn refined_1d_factor(l: f64, lipschitz: f64) -> f64 {
    0.5 * (1.0 / l - 1.0 / lipschitz)
}

/// Step-factor state of the backtracking scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct TrustRegion {
    /// Current step factor λ < 0.
    pub step: f64,
    /// λ₀; growth never takes `|λ|` beyond `|λ₀|`.
    pub initial_step: f64,
    pub acceptance: f64,
    pub shrink: f64,
    pub growth: f64,
    pub max_halvings: usize,
}

impl TrustRegion {
    pub fn new(initial_step: f64) -> Self {
        Self::from_params(&AdaptiveParams::default(), initial_step)
    }

    pub fn from_config(config: &SolveConfig) -> Self {
        let initial = config.adaptive.initial_step.unwrap_or(0.5 / config.l);
        Self::from_params(&config.adaptive, initial)
    }

    fn from_params(params: &AdaptiveParams, initial_step: f64) -> Self {
        Self {
            step: initial_step,
            initial_step,
            acceptance: params.acceptance,
            shrink: params.shrink,
            growth: params.growth,
            max_halvings: params.max_halvings,
        }
    }
}

/// One backtracking step. Trials `x + λ v` are accepted once the defect drops
/// to `(1 - acceptance)|v|`; each rejection multiplies λ by `shrink`. After an
/// acceptance `|λ|` grows by `growth`, capped at `|λ₀|`.
pub fn step_adaptive(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    region: &TrustRegion,
) -> Result<(Vector, Vector, TrustRegion)> {
    let v = defect_vector(map, y_bar, x)?;
    let (x_next, region) = adaptive_update(map, y_bar, x, &v, region)?;
    Ok((x_next, v, region))
}

fn adaptive_update(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    v: &Vector,
    region: &TrustRegion,
) -> Result<(Vector, TrustRegion)> {
    let defect = v.norm();
    if defect == 0.0 {
        return Ok((x.clone(), region.clone()));
    }
    let target = (1.0 - region.acceptance) * defect;
    let mut step = region.step;
    for _ in 0..region.max_halvings {
        let trial = x.add_scaled(step, v);
        if trial.is_finite() && map.evaluate(&trial)?.distance(y_bar)? <= target {
            let grown = (step * region.growth).abs().min(region.initial_step.abs());
            let next = TrustRegion {
                step: grown.copysign(region.initial_step),
                ..region.clone()
            };
            return Ok((trial, next));
        }
        step *= region.shrink;
    }
    Err(Error::Stall {
        halvings: region.max_halvings,
    })
}

/// Inclusion ball and exclusion radius for one iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub inclusion_center: Vector,
    pub inclusion_radius: f64,
    pub exclusion_radius: Option<f64>,
}

impl Certificate {
    /// Certificate at `x` with defect vector `v`. The exclusion part is
    /// present only for a positive Lipschitz constant.
    pub fn from_defect(x: &Vector, v: &Vector, l: f64, lipschitz: Option<f64>) -> Self {
        let defect = v.norm();
        Self {
            inclusion_center: x.add_scaled(0.5 / l, v),
            inclusion_radius: -defect / (2.0 * l),
            exclusion_radius: lipschitz.filter(|&lip| lip > 0.0).map(|lip| defect / lip),
        }
    }
}

/// The ball `B(x + v/(2l), -|v|/(2l))`, which contains a solution whenever
/// `F` is usc and `l`-ROSL. Returns `(center, radius)`.
pub fn inclusion_certificate(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    l: f64,
) -> Result<(Vector, f64)> {
    check_l(l)?;
    let v = defect_vector(map, y_bar, x)?;
    let cert = Certificate::from_defect(x, &v, l, None);
    Ok((cert.inclusion_center, cert.inclusion_radius))
}

/// `dist(ȳ, F(x)) / L`: no solution lies strictly closer to `x` when `F` is
/// `L`-Lipschitz.
pub fn exclusion_radius(
    map: &dyn Multimap,
    y_bar: &Vector,
    x: &Vector,
    lipschitz: f64,
) -> Result<f64> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::Precondition(format!(
            "L = {lipschitz} must be positive"
        )));
    }
    Ok(defect_vector(map, y_bar, x)?.norm() / lipschitz)
}

/// Guaranteed per-step contraction factor of the defect for `scheme` in
/// dimension `dim`, or an error when the constants are outside the range
/// where a rate is known.
///
/// The basic iteration in `d = 1` uses `κ = max{½, |1 + L/(2l)|}`, valid for
/// `L < -4l`; in `d > 1` it uses `L/|2l|`, valid for `L < -2l`.
pub fn contraction_rate(scheme: Scheme, l: f64, lipschitz: Option<f64>, dim: usize) -> Result<f64> {
    check_l(l)?;
    let lip = lipschitz.ok_or_else(|| {
        Error::Precondition(format!("rates for scheme {} need L", scheme.as_str()))
    })?;
    if !(lip.is_finite() && lip >= 0.0) {
        return Err(Error::Precondition(format!(
            "L = {lip} must be nonnegative"
        )));
    }
    match scheme {
        Scheme::Basic if dim > 1 => {
            if lip < -2.0 * l {
                Ok(lip / (-2.0 * l))
            } else {
                Err(Error::Precondition(format!(
                    "basic scheme bounds need L < -2l = {}, got L = {lip}",
                    -2.0 * l
                )))
            }
        }
        Scheme::Basic | Scheme::Basic1d => {
            require_dim_one(Scheme::Basic1d, dim)?;
            if lip < -4.0 * l {
                Ok(0.5f64.max((1.0 + lip / (2.0 * l)).abs()))
            } else {
                Err(Error::Precondition(format!(
                    "one-dimensional bounds need L < -4l = {}, got L = {lip}",
                    -4.0 * l
                )))
            }
        }
        Scheme::LipschitzRefined => {
            check_refined(l, lip)?;
            if lip < -l {
                return Err(Error::Precondition(format!(
                    "refined rate needs L >= -l = {}, got L = {lip}",
                    -l
                )));
            }
            Ok((lip * lip - l * l).max(0.0).sqrt() / lip)
        }
        Scheme::LipschitzRefined1d => {
            check_refined_1d(l, lip)?;
            require_dim_one(scheme, dim)?;
            Ok(0.5 * (1.0 + lip / l).abs())
        }
        Scheme::Adaptive => Err(Error::Precondition(
            "the adaptive scheme has no a-priori rate".into(),
        )),
    }
}

/// Factor `c` in the distance-to-limit bound `c κⁿ/(1-κ) dist(ȳ, F(x₀))`.
fn limit_prefactor(scheme: Scheme, l: f64, lipschitz: f64) -> f64 {
    match scheme {
        Scheme::LipschitzRefined => -l / (lipschitz * lipschitz),
        Scheme::LipschitzRefined1d => 0.5 * (1.0 / lipschitz - 1.0 / l),
        _ => -0.5 / l,
    }
}

/// A-priori error bounds for `n = 1..=n_max`; entry `n - 1` belongs to `x_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AprioriBounds {
    pub rate: f64,
    pub distance_to_set: Vec<f64>,
    pub distance_to_limit: Vec<f64>,
}

/// Bounds on `dist(x_n, S_F(ȳ))` and `|x_n - x̄|` from the initial defect.
pub fn a_priori_bounds(
    defect0: f64,
    l: f64,
    lipschitz: Option<f64>,
    scheme: Scheme,
    dim: usize,
    n_max: usize,
) -> Result<AprioriBounds> {
    if !(defect0.is_finite() && defect0 >= 0.0) {
        return Err(Error::Precondition(format!(
            "defect0 = {defect0} must be nonnegative"
        )));
    }
    let rate = contraction_rate(scheme, l, lipschitz, dim)?;
    let lip = lipschitz.expect("checked by contraction_rate");
    let prefactor = limit_prefactor(scheme, l, lip);
    let (distance_to_set, distance_to_limit) = (1..=n_max)
        .map(|n| {
            let n = n as i32;
            (
                -0.5 / l * rate.powi(n - 1) * defect0,
                prefactor * rate.powi(n) / (1.0 - rate) * defect0,
            )
        })
        .unzip();
    Ok(AprioriBounds {
        rate,
        distance_to_set,
        distance_to_limit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(Status::Converged),
            "max_iter" => Some(Status::MaxIter),
            "diverged" => Some(Status::Diverged),
            _ => None,
        }
    }
}

/// Everything recorded during a solve: iterates `x₀…x_N`, the defect vector
/// and certificate at each, and the outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub iterates: Vec<Vector>,
    pub defect_vectors: Vec<Vector>,
    pub defect_norms: Vec<f64>,
    pub certificates: Vec<Certificate>,
    pub status: Status,
    pub limit: Option<Vector>,
    /// Why the run stopped early, for diverged runs caused by an error.
    pub diagnostic: Option<String>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn final_defect(&self) -> Option<f64> {
        self.defect_norms.last().copied()
    }

    /// `|v_{n+1}| / |v_n|` for consecutive iterates with `|v_n| > 0`.
    pub fn defect_ratios(&self) -> Vec<f64> {
        self.defect_norms
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    fn push(&mut self, x: Vector, v: Vector, cert: Certificate) {
        self.defect_norms.push(v.norm());
        self.iterates.push(x);
        self.defect_vectors.push(v);
        self.certificates.push(cert);
    }
}

/// Runs the configured scheme from `x0` until the defect falls to
/// `defect_tol`, the defect reaches `divergence_threshold` (or an evaluation
/// fails), or `max_iter` steps have been taken.
///
/// Configuration and precondition problems are returned as errors; failures
/// during the iteration end the run with [`Status::Diverged`] and a
/// diagnostic.
pub fn solve(
    map: &dyn Multimap,
    y_bar: &Vector,
    x0: &Vector,
    config: &SolveConfig,
) -> Result<IterationTrace> {
    let dim = map.dim();
    config.validate(dim)?;
    x0.check_dim(dim)?;
    y_bar.check_dim(dim)?;
    if !x0.is_finite() {
        return Err(Error::NonFinite("x0"));
    }

    let l = config.l;
    let coefficient = match config.scheme {
        Scheme::Basic | Scheme::Basic1d => 0.5 / l,
        Scheme::LipschitzRefined => {
            let lip = config.lipschitz.expect("validated");
            l / (lip * lip)
        }
        Scheme::LipschitzRefined1d => refined_1d_factor(l, config.lipschitz.expect("validated")),
        Scheme::Adaptive => f64::NAN,
    };
    let mut region = TrustRegion::from_config(config);
    let mut trace = IterationTrace {
        iterates: Vec::new(),
        defect_vectors: Vec::new(),
        defect_norms: Vec::new(),
        certificates: Vec::new(),
        status: Status::MaxIter,
        limit: None,
        diagnostic: None,
    };

    let mut x = x0.clone();
    let mut steps = 0;
    loop {
        let v = match defect_vector(map, y_bar, &x) {
            Ok(v) => v,
            Err(e) => {
                trace.status = Status::Diverged;
                trace.diagnostic = Some(e.to_string());
                break;
            }
        };
        let defect = v.norm();
        let cert = Certificate::from_defect(&x, &v, l, config.lipschitz);
        if !defect.is_finite() {
            trace.status = Status::Diverged;
            trace.diagnostic = Some("non-finite defect".into());
            break;
        }
        trace.push(x.clone(), v.clone(), cert);
        if defect <= config.defect_tol {
            trace.status = Status::Converged;
            trace.limit = Some(x);
            break;
        }
        if defect >= config.divergence_threshold {
            trace.status = Status::Diverged;
            break;
        }
        if steps == config.max_iter {
            trace.status = Status::MaxIter;
            break;
        }
        steps += 1;
        x = if config.scheme == Scheme::Adaptive {
            match adaptive_update(map, y_bar, &x, &v, &region) {
                Ok((next, next_region)) => {
                    region = next_region;
                    next
                }
                Err(e) => {
                    trace.status = Status::Diverged;
                    trace.diagnostic = Some(e.to_string());
                    break;
                }
            }
        } else {
            x.add_scaled(coefficient, &v)
        };
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::BuiltinMap;
    use crate::sets::ConvexSet;
    use crate::vector;
    use approx::assert_abs_diff_eq;

    fn assert_vec_eq(a: &Vector, b: &Vector, eps: f64) {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.coords().iter().zip(b.coords()) {
            assert_abs_diff_eq!(*x, *y, epsilon = eps);
        }
    }

    fn identity_1d() -> BuiltinMap {
        BuiltinMap::affine(vec![vec![1.0]], ConvexSet::singleton(vector![0])).unwrap()
    }

    #[test]
    fn basic_step_examples() {
        let rot = BuiltinMap::rotation_2d(-1.0, 2f64.sqrt()).unwrap();
        let (next, v) = step_basic(&rot, &vector![0, 0], &vector![1, 0], -1.0).unwrap();
        assert_vec_eq(&v, &vector![1, 1], 1e-12);
        assert_vec_eq(&next, &vector![0.5, -0.5], 1e-12);

        // x_{n+1} = (1 + L/(2l)) x_n with x_n = 1.
        let pw = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
        let (next, _) = step_basic(&pw, &vector![0], &vector![1], -1.0).unwrap();
        assert_eq!(next, vector![-0.5]);

        let (next, v) = step_basic(&pw, &vector![-1.5], &vector![0.5], -1.0).unwrap();
        assert_eq!(v, vector![0]);
        assert_eq!(next, vector![0.5]);

        assert!(step_basic(&pw, &vector![0], &vector![1], 0.5).is_err());
    }

    #[test]
    fn refined_step_examples() {
        let linear = BuiltinMap::rotation_2d(-2.0, 2.0).unwrap();
        let (next, _) =
            step_lipschitz_refined(&linear, &vector![0, 0], &vector![1, 0], -2.0, 2.0).unwrap();
        assert_eq!(next, vector![0, 0]);

        let rot = BuiltinMap::rotation_2d(-1.0, 2f64.sqrt()).unwrap();
        let (next, _) =
            step_lipschitz_refined(&rot, &vector![0, 0], &vector![1, 0], -1.0, 2f64.sqrt())
                .unwrap();
        assert_vec_eq(&next, &vector![0.5, -0.5], 1e-12);
        assert_abs_diff_eq!(next.norm(), 0.5f64.sqrt(), epsilon = 1e-12);

        let err =
            step_lipschitz_refined(&rot, &vector![0, 0], &vector![1, 0], -1.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("sqrt(2)"), "{err}");
    }

    #[test]
    fn refined_1d_step_examples() {
        let pw = BuiltinMap::piecewise_1d(-1.0, 2.0).unwrap();
        let (next, v) =
            step_lipschitz_refined_1d(&pw, &vector![0], &vector![1], -1.0, 2.0).unwrap();
        assert_eq!(v, vector![2]);
        // Midpoint of [1 - 2, 1 - 1].
        assert_eq!(next, vector![-0.5]);

        let (next, v) =
            step_lipschitz_refined_1d(&pw, &vector![-2], &vector![1], -1.0, 2.0).unwrap();
        assert_eq!(v, vector![0]);
        assert_eq!(next, vector![1]);

        assert!(step_lipschitz_refined_1d(&pw, &vector![0], &vector![1], -1.0, 3.0).is_err());
    }

    #[test]
    fn adaptive_step_examples() {
        let rot = BuiltinMap::rotation_2d(-1.0, 1.5).unwrap();
        let region = TrustRegion::new(-0.5);
        let (next, _, region_next) =
            step_adaptive(&rot, &vector![0, 0], &vector![1, 0], &region).unwrap();
        let (basic, _) = step_basic(&rot, &vector![0, 0], &vector![1, 0], -1.0).unwrap();
        assert_eq!(next, basic);
        assert_eq!(region_next.step, -0.5);
        let ratio = defect_vector(&rot, &vector![0, 0], &next).unwrap().norm()
            / defect_vector(&rot, &vector![0, 0], &vector![1, 0])
                .unwrap()
                .norm();
        assert_abs_diff_eq!(ratio, 0.75, epsilon = 1e-12);

        let pw = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
        let (next, v, _) = step_adaptive(&pw, &vector![0], &vector![0], &region).unwrap();
        assert_eq!((next, v), (vector![0], vector![0]));

        assert_eq!(
            step_adaptive(&identity_1d(), &vector![0], &vector![1], &region).unwrap_err(),
            Error::Stall { halvings: 60 }
        );
    }

    #[test]
    fn adaptive_growth_is_capped() {
        let rot = BuiltinMap::rotation_2d(-1.0, 1.5).unwrap();
        let region = TrustRegion {
            step: -0.1,
            ..TrustRegion::new(-0.5)
        };
        let (_, _, next) = step_adaptive(&rot, &vector![0, 0], &vector![1, 0], &region).unwrap();
        assert_abs_diff_eq!(next.step, -0.15, epsilon = 1e-15);
        let region = TrustRegion {
            step: -0.4,
            ..TrustRegion::new(-0.5)
        };
        let (_, _, next) = step_adaptive(&rot, &vector![0, 0], &vector![1, 0], &region).unwrap();
        assert_eq!(next.step, -0.5);
    }

    #[test]
    fn certificate_examples() {
        let rot = BuiltinMap::rotation_2d(-1.0, 2f64.sqrt()).unwrap();
        let (center, radius) =
            inclusion_certificate(&rot, &vector![0, 0], &vector![1, 0], -1.0).unwrap();
        assert_vec_eq(&center, &vector![0.5, -0.5], 1e-12);
        assert_abs_diff_eq!(radius, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(center.norm(), radius, epsilon = 1e-12);
        assert_abs_diff_eq!(
            exclusion_radius(&rot, &vector![0, 0], &vector![1, 0], 2f64.sqrt()).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let pw = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
        let (center, radius) = inclusion_certificate(&pw, &vector![0], &vector![1], -1.0).unwrap();
        assert_eq!((center, radius), (vector![-0.5], 1.5));
        assert_eq!(
            exclusion_radius(&pw, &vector![0], &vector![1], 3.0).unwrap(),
            1.0
        );

        let (center, radius) =
            inclusion_certificate(&pw, &vector![-1.5], &vector![0.5], -1.0).unwrap();
        assert_eq!((center, radius), (vector![0.5], 0.0));
        assert_eq!(
            exclusion_radius(&pw, &vector![-1.5], &vector![0.5], 3.0).unwrap(),
            0.0
        );
        assert!(exclusion_radius(&pw, &vector![0], &vector![1], 0.0).is_err());
    }

    #[test]
    fn a_priori_bound_examples() {
        let b = a_priori_bounds(1.0, -1.0, Some(1.5), Scheme::Basic, 2, 3).unwrap();
        assert_eq!(b.distance_to_set[0], 0.5);
        // L^{n-1} / |2l|^n, evaluated literally.
        for n in 1..=3 {
            let literal = 1.5f64.powi(n - 1) / 2f64.powi(n);
            assert_abs_diff_eq!(b.distance_to_set[n as usize - 1], literal, epsilon = 1e-15);
        }
        let zero = a_priori_bounds(0.0, -1.0, Some(1.5), Scheme::Basic, 2, 5).unwrap();
        assert!(zero
            .distance_to_set
            .iter()
            .chain(&zero.distance_to_limit)
            .all(|&v| v == 0.0));

        let b = a_priori_bounds(2.0, -1.0, Some(3.0), Scheme::Basic1d, 1, 2).unwrap();
        assert_eq!(b.rate, 0.5);
        assert_eq!(b.distance_to_set[1], 0.5 * 0.5 * 2.0);

        assert!(a_priori_bounds(1.0, -1.0, Some(2.5), Scheme::Basic, 2, 3).is_err());
        assert!(a_priori_bounds(1.0, -1.0, Some(4.0), Scheme::Basic1d, 1, 3).is_err());
        assert!(a_priori_bounds(1.0, -1.0, None, Scheme::Basic, 2, 3).is_err());
    }

    #[test]
    fn refined_rates() {
        // Spectral norm of I - (l/L²)(l I + α J), computed separately.
        assert_abs_diff_eq!(
            contraction_rate(Scheme::LipschitzRefined, -1.0, Some(2f64.sqrt()), 2).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            contraction_rate(Scheme::LipschitzRefined, -1.0, Some(1.3), 2).unwrap(),
            0.638_971_066_378_313_5,
            epsilon = 1e-12
        );
        assert_eq!(
            contraction_rate(Scheme::LipschitzRefined1d, -1.0, Some(2.0), 1).unwrap(),
            0.5
        );
        assert_eq!(
            contraction_rate(Scheme::LipschitzRefined1d, -1.0, Some(1.5), 1).unwrap(),
            0.25
        );
        assert!(contraction_rate(Scheme::Adaptive, -1.0, Some(1.0), 2).is_err());
    }

    #[test]
    fn solve_rotation_converges_at_sharp_rate() {
        let rot = BuiltinMap::rotation_2d(-1.0, 1.5).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(1.5));
        let trace = solve(&rot, &vector![0, 0], &vector![1, 0], &config).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.final_defect().unwrap() <= 1e-10);
        for r in trace.defect_ratios() {
            assert_abs_diff_eq!(r, 0.75, epsilon = 1e-9);
        }
        assert_eq!(trace.limit.as_ref(), trace.iterates.last());
        assert_eq!(trace.certificates.len(), trace.iterates.len());
    }

    #[test]
    fn solve_rotation_diverges_past_threshold() {
        let rot = BuiltinMap::rotation_2d(-1.0, 2.5).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(2.5));
        let trace = solve(&rot, &vector![0, 0], &vector![1, 0], &config).unwrap();
        assert_eq!(trace.status, Status::Diverged);
        assert!(trace.limit.is_none());
    }

    #[test]
    fn solve_piecewise_oscillates_at_threshold() {
        let pw = BuiltinMap::piecewise_1d(-1.0, 4.0).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(4.0)).with_max_iter(50);
        let trace = solve(&pw, &vector![0], &vector![0.5], &config).unwrap();
        assert_eq!(trace.status, Status::MaxIter);
        assert_eq!(trace.len(), 51);
        for w in trace.iterates.windows(2) {
            assert_eq!(w[1][0], -w[0][0]);
        }
    }

    #[test]
    fn solve_at_solution_returns_immediately() {
        let pw = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(3.0));
        let trace = solve(&pw, &vector![0], &vector![0], &config).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.limit, Some(vector![0]));
    }

    #[test]
    fn linear_case() {
        // F(x) = l x: the refined step lands on the solution, the basic step
        // halves the distance (rate L/|2l| = 1/2).
        let linear = BuiltinMap::rotation_2d(-2.0, 2.0).unwrap();
        let refined = SolveConfig::new(Scheme::LipschitzRefined, -2.0, Some(2.0));
        let trace = solve(&linear, &vector![0, 0], &vector![3, -1], &refined).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.len(), 2);

        let basic = SolveConfig::new(Scheme::Basic, -2.0, Some(2.0));
        let trace = solve(&linear, &vector![0, 0], &vector![3, -1], &basic).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.iterates[1], vector![1.5, -0.5]);
        assert!(trace.defect_ratios().iter().all(|&r| r == 0.5));
    }

    #[test]
    fn solve_rejects_bad_configs() {
        let pw = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
        let rot = BuiltinMap::rotation_2d(-1.0, 1.5).unwrap();
        let bad_l = SolveConfig::new(Scheme::Basic, 1.0, None);
        assert!(solve(&pw, &vector![0], &vector![1], &bad_l).is_err());
        let refined_1d_on_plane = SolveConfig::new(Scheme::LipschitzRefined1d, -1.0, Some(1.5));
        assert!(solve(&rot, &vector![0, 0], &vector![1, 0], &refined_1d_on_plane).is_err());
        let refined_no_l = SolveConfig::new(Scheme::LipschitzRefined, -1.0, None);
        assert!(solve(&rot, &vector![0, 0], &vector![1, 0], &refined_no_l).is_err());
        let basic = SolveConfig::new(Scheme::Basic, -1.0, None);
        assert!(solve(&rot, &vector![0, 0], &vector![1], &basic).is_err());
    }

    #[test]
    fn adaptive_solve_on_unknown_l() {
        let rot = BuiltinMap::rotation_2d(-1.0, 1.9).unwrap();
        let mut config = SolveConfig::new(Scheme::Adaptive, -1.0, None);
        config.adaptive.initial_step = Some(-2.0);
        let trace = solve(&rot, &vector![0, 0], &vector![1, 0], &config).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.defect_ratios().iter().all(|&r| r <= 1.0 - 1e-4));

        let stall = solve(&identity_1d(), &vector![0], &vector![1], &config).unwrap();
        assert_eq!(stall.status, Status::Diverged);
        assert!(stall.diagnostic.unwrap().contains("stalled"));
    }

    #[test]
    fn config_json_defaults() {
        let c: SolveConfig = serde_json::from_str(r#"{"scheme":"basic_1d","l":-1,"L":3}"#).unwrap();
        assert_eq!(c.scheme, Scheme::Basic1d);
        assert_eq!(c.lipschitz, Some(3.0));
        assert_eq!(c.defect_tol, 1e-10);
        assert_eq!(c.max_iter, 10_000);
        assert_eq!(c.divergence_threshold, 1e12);
        assert_eq!(c.adaptive.max_halvings, 60);
        let c: SolveConfig = serde_json::from_str(
            r#"{"scheme":"adaptive","l":-2,"adaptive":{"initial_step":-0.1,"growth":2}}"#,
        )
        .unwrap();
        assert_eq!(c.adaptive.initial_step, Some(-0.1));
        assert_eq!(c.adaptive.growth, 2.0);
        assert_eq!(c.adaptive.shrink, 0.5);
    }
}
