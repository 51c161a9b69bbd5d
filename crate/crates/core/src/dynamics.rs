//! Parameterized expanding circle maps, positive weights, and their inverse
//! branches.
//!
//! The circle is `[0, 1)` with mod-1 arithmetic. Every map is described by an
//! orientation-preserving lift `T̃_u : ℝ → ℝ` with `T̃_u(x + 1) = T̃_u(x) + d`,
//! so the `d` inverse branches of a point `y` are the solutions of
//! `T̃_u(x) = y + m` for the `d` consecutive integers `m` that land in
//! `[T̃_u(0), T̃_u(0) + d)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `|T'| ≥ EXPANSION_FLOOR` is required wherever a map is differentiated or
/// inverted.
pub const EXPANSION_FLOOR: f64 = 1.0 + 1e-3;

/// Residual target for inverse-branch solves.
pub const NEWTON_TOLERANCE: f64 = 1e-13;

/// Newton iterations before falling back to bisection.
pub const NEWTON_MAX_ITER: usize = 50;

const BISECTION_MAX_ITER: usize = 200;

/// Reduce `x` to `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on `ℝ/ℤ`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(1.0 - d)
}

/// A point of the (finite-dimensional) parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "parameter point needs at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "parameter point has non-finite coordinates: {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    /// One-dimensional parameter.
    pub fn scalar(u: f64) -> Self {
        Self::new(vec![u]).expect("finite scalar parameter")
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self + t·h`.
    pub fn offset(&self, direction: &[f64], t: f64) -> Self {
        assert_eq!(direction.len(), self.dim(), "direction dimension mismatch");
        Self(
            self.0
                .iter()
                .zip(direction)
                .map(|(u, h)| u + t * h)
                .collect(),
        )
    }
}

/// Axis-aligned box of admissible parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidInput(
                "parameter box bounds must be nonempty and of equal length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u)
        {
            return Err(Error::InvalidInput(format!(
                "invalid parameter box {lower:?} .. {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[-radius, radius]^dim`.
    pub fn symmetric(radius: f64, dim: usize) -> Self {
        let r = radius.abs();
        Self::new(vec![-r; dim], vec![r; dim]).expect("finite radius")
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, u: &ParameterPoint) -> bool {
        u.dim() == self.dim()
            && u
                .coords()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(c, (l, h))| *l <= *c && *c <= *h)
    }

    /// Tensor grid with `per_axis` points per coordinate, endpoints included.
    pub fn samples(&self, per_axis: usize) -> Vec<ParameterPoint> {
        let per_axis = per_axis.max(1);
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &h)| {
                if per_axis == 1 || l == h {
                    vec![l]
                } else {
                    (0..per_axis)
                        .map(|k| l + (h - l) * k as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        points.into_iter().map(ParameterPoint).collect()
    }
}

/// A `C¹` family of expanding circle maps `u ↦ T_u` of fixed degree.
///
/// Implementors describe the lift; all derivatives are derivatives of the
/// lift. `d_xu` has a finite-difference default, closed-form families should
/// override it.
pub trait MapFamily: Send + Sync {
    fn degree(&self) -> usize;

    fn param_dim(&self) -> usize;

    fn name(&self) -> String;

    fn lift(&self, u: &ParameterPoint, x: f64) -> f64;

    fn d_x(&self, u: &ParameterPoint, x: f64) -> f64;

    fn d_xx(&self, u: &ParameterPoint, x: f64) -> f64;

    /// `∂_u T̃_u(x)`, one entry per parameter coordinate.
    fn d_u(&self, u: &ParameterPoint, x: f64) -> Vec<f64>;

    /// `∂_u T̃_u'(x)`.
    fn d_xu(&self, u: &ParameterPoint, x: f64) -> Vec<f64> {
        let step = 1e-6;
        (0..u.dim())
            .map(|i| {
                let mut e = vec![0.0; u.dim()];
                e[i] = 1.0;
                (self.d_x(&u.offset(&e, step), x) - self.d_x(&u.offset(&e, -step), x))
                    / (2.0 * step)
            })
            .collect()
    }

    /// `T_u(x)` on the circle.
    fn eval(&self, u: &ParameterPoint, x: f64) -> f64 {
        wrap(self.lift(u, x))
    }
}

/// A positive weight `g(u, x)`.
pub trait WeightFamily: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, u: &ParameterPoint, x: f64) -> f64;

    fn d_x(&self, u: &ParameterPoint, x: f64) -> f64;

    fn d_u(&self, u: &ParameterPoint, x: f64) -> Vec<f64>;
}

/// `T_u(x) = d·x + Σ_i u_i sin(2π k_i x)`.
///
/// With `harmonics = [1]` and `d = 2` this is the reference doubling-plus-sine
/// family.
#[derive(Debug, Clone, PartialEq)]
pub struct SineFamily {
    degree: usize,
    harmonics: Vec<u32>,
}

impl SineFamily {
    pub fn new(degree: usize, harmonics: Vec<u32>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidInput(format!(
                "degree must be at least 2, got {degree}"
            )));
        }
        if harmonics.is_empty() || harmonics.contains(&0) {
            return Err(Error::InvalidInput(
                "sine family needs at least one positive harmonic".into(),
            ));
        }
        Ok(Self { degree, harmonics })
    }

    /// `T_u(x) = 2x + u sin(2πx)`.
    pub fn reference() -> Self {
        Self {
            degree: 2,
            harmonics: vec![1],
        }
    }
}

impl MapFamily for SineFamily {
    fn degree(&self) -> usize {
        self.degree
    }

    fn param_dim(&self) -> usize {
        self.harmonics.len()
    }

    fn name(&self) -> String {
        format!("sine(d={},k={:?})", self.degree, self.harmonics)
    }

    fn lift(&self, u: &ParameterPoint, x: f64) -> f64 {
        let mut v = self.degree as f64 * x;
        for (c, &k) in u.coords().iter().zip(&self.harmonics) {
            v += c * (2.0 * PI * k as f64 * x).sin();
        }
        v
    }

    fn d_x(&self, u: &ParameterPoint, x: f64) -> f64 {
        let mut v = self.degree as f64;
        for (c, &k) in u.coords().iter().zip(&self.harmonics) {
            let w = 2.0 * PI * k as f64;
            v += c * w * (w * x).cos();
        }
        v
    }

    fn d_xx(&self, u: &ParameterPoint, x: f64) -> f64 {
        u.coords()
            .iter()
            .zip(&self.harmonics)
            .map(|(c, &k)| {
                let w = 2.0 * PI * k as f64;
                -c * w * w * (w * x).sin()
            })
            .sum()
    }

    fn d_u(&self, _u: &ParameterPoint, x: f64) -> Vec<f64> {
        self.harmonics
            .iter()
            .map(|&k| (2.0 * PI * k as f64 * x).sin())
            .collect()
    }

    fn d_xu(&self, _u: &ParameterPoint, x: f64) -> Vec<f64> {
        self.harmonics
            .iter()
            .map(|&k| {
                let w = 2.0 * PI * k as f64;
                w * (w * x).cos()
            })
            .collect()
    }
}

/// `T(x) = d·x`, ignoring its parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    degree: usize,
    param_dim: usize,
}

impl LinearMap {
    pub fn new(degree: usize, param_dim: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidInput(format!(
                "degree must be at least 2, got {degree}"
            )));
        }
        Ok(Self {
            degree,
            param_dim: param_dim.max(1),
        })
    }

    pub fn doubling() -> Self {
        Self {
            degree: 2,
            param_dim: 1,
        }
    }
}

impl MapFamily for LinearMap {
    fn degree(&self) -> usize {
        self.degree
    }

    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn name(&self) -> String {
        format!("linear(d={})", self.degree)
    }

    fn lift(&self, _u: &ParameterPoint, x: f64) -> f64 {
        self.degree as f64 * x
    }

    fn d_x(&self, _u: &ParameterPoint, _x: f64) -> f64 {
        self.degree as f64
    }

    fn d_xx(&self, _u: &ParameterPoint, _x: f64) -> f64 {
        0.0
    }

    fn d_u(&self, u: &ParameterPoint, _x: f64) -> Vec<f64> {
        vec![0.0; u.dim()]
    }

    fn d_xu(&self, u: &ParameterPoint, _x: f64) -> Vec<f64> {
        vec![0.0; u.dim()]
    }
}

/// `g ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWeight(pub f64);

impl WeightFamily for ConstantWeight {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }

    fn eval(&self, _u: &ParameterPoint, _x: f64) -> f64 {
        self.0
    }

    fn d_x(&self, _u: &ParameterPoint, _x: f64) -> f64 {
        0.0
    }

    fn d_u(&self, u: &ParameterPoint, _x: f64) -> Vec<f64> {
        vec![0.0; u.dim()]
    }
}

/// `g(u, x) = base + Σ_i slope_i u_i`, constant in space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParameterWeight {
    pub base: f64,
    pub slopes: Vec<f64>,
}

impl WeightFamily for AffineParameterWeight {
    fn name(&self) -> String {
        format!("affine(base={},slopes={:?})", self.base, self.slopes)
    }

    fn eval(&self, u: &ParameterPoint, _x: f64) -> f64 {
        self.base
            + self
                .slopes
                .iter()
                .zip(u.coords())
                .map(|(s, c)| s * c)
                .sum::<f64>()
    }

    fn d_x(&self, _u: &ParameterPoint, _x: f64) -> f64 {
        0.0
    }

    fn d_u(&self, u: &ParameterPoint, _x: f64) -> Vec<f64> {
        (0..u.dim())
            .map(|i| self.slopes.get(i).copied().unwrap_or(0.0))
            .collect()
    }
}

/// `g(u, x) = 1 / |T_u'(x)|`, the Perron–Frobenius weight.
#[derive(Clone)]
pub struct InverseDerivativeWeight {
    map: Arc<dyn MapFamily>,
}

impl InverseDerivativeWeight {
    pub fn new(map: Arc<dyn MapFamily>) -> Self {
        Self { map }
    }
}

impl WeightFamily for InverseDerivativeWeight {
    fn name(&self) -> String {
        format!("one_over_Tprime[{}]", self.map.name())
    }

    fn eval(&self, u: &ParameterPoint, x: f64) -> f64 {
        1.0 / self.map.d_x(u, x).abs()
    }

    fn d_x(&self, u: &ParameterPoint, x: f64) -> f64 {
        let d = self.map.d_x(u, x);
        -self.map.d_xx(u, x) * d.signum() / (d * d)
    }

    fn d_u(&self, u: &ParameterPoint, x: f64) -> Vec<f64> {
        let d = self.map.d_x(u, x);
        self.map
            .d_xu(u, x)
            .into_iter()
            .map(|m| -m * d.signum() / (d * d))
            .collect()
    }
}

/// `g(x) = c₀ + Σ_k a_k cos(2πkx) + b_k sin(2πkx)`, independent of the
/// parameter. Positivity is checked on construction over a fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigWeight {
    constant: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigWeight {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let w = Self { constant, cos, sin };
        let u = ParameterPoint::zeros(1);
        let min = (0..4096)
            .map(|j| w.eval(&u, j as f64 / 4096.0))
            .fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "trigonometric weight is not positive (min ≈ {min})"
            )));
        }
        Ok(w)
    }
}

impl WeightFamily for TrigWeight {
    fn name(&self) -> String {
        format!("trig(c={},a={:?},b={:?})", self.constant, self.cos, self.sin)
    }

    fn eval(&self, _u: &ParameterPoint, x: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * (2.0 * PI * (k + 1) as f64 * x).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * (2.0 * PI * (k + 1) as f64 * x).sin();
        }
        v
    }

    fn d_x(&self, _u: &ParameterPoint, x: f64) -> f64 {
        let mut v = 0.0;
        for (k, a) in self.cos.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v -= a * w * (w * x).sin();
        }
        for (k, b) in self.sin.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v += b * w * (w * x).cos();
        }
        v
    }

    fn d_u(&self, u: &ParameterPoint, _x: f64) -> Vec<f64> {
        vec![0.0; u.dim()]
    }
}

/// All `d^n` preimages of a point under `T_u^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseBranchSet {
    pub target: f64,
    pub order: usize,
    /// Preimages in `[0, 1)`, ordered lexicographically by label.
    pub points: Vec<f64>,
    /// `(T_u^n)'` at each preimage.
    pub derivatives: Vec<f64>,
    /// Branch labels; `label[0]` is the branch taken first when pulling `y`
    /// back, `label[n-1]` the last one.
    pub labels: Vec<Vec<usize>>,
    /// `orbits[b][k] = T_u^k(points[b])` for `0 ≤ k < n`.
    pub orbits: Vec<Vec<f64>>,
}

impl InverseBranchSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_expanding(derivative: f64, x: f64) -> Result<()> {
    if derivative.abs() < EXPANSION_FLOOR || !derivative.is_finite() {
        Err(Error::NotExpanding { x, derivative })
    } else {
        Ok(())
    }
}

/// Solve `F(x) = 0` for increasing `F` on `[lo, hi]` with `F(lo) ≤ 0 ≤ F(hi)`.
fn safeguarded_newton(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    target: f64,
) -> Result<f64> {
    let mut x = start.clamp(lo, hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..NEWTON_MAX_ITER {
        let (v, dv) = f(x);
        if v.abs() < best.0 {
            best = (v.abs(), x);
        }
        if v.abs() <= NEWTON_TOLERANCE {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let next = x - v / dv;
        x = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    for _ in 0..BISECTION_MAX_ITER {
        let (v, _) = f(x);
        if v.abs() < best.0 {
            best = (v.abs(), x);
        }
        if v.abs() <= NEWTON_TOLERANCE || hi - lo <= f64::EPSILON {
            break;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        x = 0.5 * (lo + hi);
    }
    if best.0 <= NEWTON_TOLERANCE {
        Ok(best.1)
    } else {
        Err(Error::NewtonDivergence {
            target,
            residual: best.0,
        })
    }
}

/// The `k`-th order-one preimage of `y` (`0 ≤ k < d`), as a point of `[0, 1)`.
pub fn branch_preimage(
    map: &dyn MapFamily,
    u: &ParameterPoint,
    y: f64,
    k: usize,
) -> Result<f64> {
    let d = map.degree();
    debug_assert!(k < d);
    let y = wrap(y);
    let base = map.lift(u, 0.0);
    let m0 = (base - y).ceil();
    let target = y + m0 + k as f64;
    let start = (target - base) / d as f64;
    let x = safeguarded_newton(
        |x| (map.lift(u, x) - target, map.d_x(u, x)),
        0.0,
        1.0,
        start,
        target,
    )?;
    Ok(wrap(x))
}

/// Solve `T̃_u^n(z) = target` for the lift near `guess`, given
/// `|target - T̃_u^n(guess)| ≤ reach`. Used to follow one inverse branch
/// continuously.
pub fn lift_inverse(
    map: &dyn MapFamily,
    u: &ParameterPoint,
    order: usize,
    guess: f64,
    target: f64,
) -> Result<f64> {
    let iterate = |z: f64| {
        let mut v = z;
        let mut dv = 1.0;
        for _ in 0..order {
            dv *= map.d_x(u, v);
            v = map.lift(u, v);
        }
        (v - target, dv)
    };
    let reach = iterate(guess).0.abs();
    let pad = reach.max(NEWTON_TOLERANCE) * (1.0 + 1e-9) + 1e-15;
    safeguarded_newton(iterate, guess - pad, guess + pad, guess, target)
}

/// All `d^n` preimages of `y` under `T_u^n` with chain-rule derivatives.
pub fn inverse_branches(
    map: &dyn MapFamily,
    u: &ParameterPoint,
    y: f64,
    n: usize,
) -> Result<InverseBranchSet> {
    if n == 0 {
        return Err(Error::InvalidInput("branch order must be at least 1".into()));
    }
    let d = map.degree();
    let y = wrap(y);
    // (point, derivative, label, orbit) with orbit[0] = point
    let mut level: Vec<(f64, f64, Vec<usize>, Vec<f64>)> = vec![(y, 1.0, Vec::new(), Vec::new())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * d);
        for (t, deriv, label, orbit) in &level {
            for k in 0..d {
                let x = branch_preimage(map, u, *t, k)?;
                let dx = map.d_x(u, x);
                check_expanding(dx, x)?;
                let mut l = label.clone();
                l.push(k);
                let mut o = Vec::with_capacity(orbit.len() + 1);
                o.push(x);
                o.extend_from_slice(orbit);
                next.push((x, dx * deriv, l, o));
            }
        }
        level = next;
    }
    if n > 1 {
        for (x, deriv, _, orbit) in level.iter_mut() {
            polish_preimage(map, u, y, n, x, deriv, orbit)?;
        }
    }
    let mut set = InverseBranchSet {
        target: y,
        order: n,
        points: Vec::with_capacity(level.len()),
        derivatives: Vec::with_capacity(level.len()),
        labels: Vec::with_capacity(level.len()),
        orbits: Vec::with_capacity(level.len()),
    };
    for (x, deriv, label, orbit) in level {
        set.points.push(x);
        set.derivatives.push(deriv);
        set.labels.push(label);
        set.orbits.push(orbit);
    }
    Ok(set)
}

/// Newton on the composed lift so that `T^n(x)` lands on `y` to the solver
/// tolerance rather than to the accumulated per-level tolerance.
fn polish_preimage(
    map: &dyn MapFamily,
    u: &ParameterPoint,
    y: f64,
    n: usize,
    x: &mut f64,
    deriv: &mut f64,
    orbit: &mut [f64],
) -> Result<()> {
    let image = |z: f64| {
        let mut v = z;
        for _ in 0..n {
            v = map.lift(u, v);
        }
        v
    };
    let lifted = image(*x);
    let target = y + (lifted - y).round();
    if (lifted - target).abs() > NEWTON_TOLERANCE {
        *x = wrap(lift_inverse(map, u, n, *x, target)?);
    }
    let mut v = *x;
    let mut dv = 1.0;
    for slot in orbit.iter_mut() {
        *slot = v;
        let dx = map.d_x(u, v);
        check_expanding(dx, v)?;
        dv *= dx;
        v = map.eval(u, v);
    }
    *deriv = dv;
    Ok(())
}

/// `X_u(x)·h = (∂_u T_u(x)·h) / T_u'(x)`.
pub fn vector_field_x(
    map: &dyn MapFamily,
    u: &ParameterPoint,
    x: f64,
    h: &[f64],
) -> Result<f64> {
    let dx = map.d_x(u, x);
    check_expanding(dx, x)?;
    let du = map.d_u(u, x);
    if du.len() != h.len() {
        return Err(Error::InvalidInput(format!(
            "direction has dimension {}, map expects {}",
            h.len(),
            du.len()
        )));
    }
    Ok(du.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / dx)
}

/// `min |T_u'(x)| - 1` over a tensor grid of the box and `grid_size` circle
/// points. A non-positive return means the configuration is not expanding.
pub fn expansion_margin(map: &dyn MapFamily, u_box: &ParameterBox, grid_size: usize) -> f64 {
    let grid_size = grid_size.max(16);
    u_box
        .samples(grid_size)
        .iter()
        .flat_map(|u| {
            (0..grid_size).map(move |j| map.d_x(u, j as f64 / grid_size as f64).abs() - 1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn doubling_order_one() {
        let map = LinearMap::doubling();
        let u = ParameterPoint::scalar(0.0);
        let set = inverse_branches(&map, &u, 0.5, 1).unwrap();
        assert_eq!(set.points.len(), 2);
        assert!(close(set.points[0], 0.25, 1e-15));
        assert!(close(set.points[1], 0.75, 1e-15));
        assert_eq!(set.derivatives, vec![2.0, 2.0]);
    }

    #[test]
    fn doubling_order_two_at_zero() {
        let map = LinearMap::doubling();
        let u = ParameterPoint::scalar(0.0);
        let set = inverse_branches(&map, &u, 0.0, 2).unwrap();
        let mut pts = set.points.clone();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, k) in pts.iter().zip(0..4) {
            assert!(close(*p, k as f64 / 4.0, 1e-15), "{pts:?}");
        }
        assert!(set.derivatives.iter().all(|&d| d == 4.0));
        assert_eq!(set.labels.len(), 4);
    }

    #[test]
    fn sine_family_preimages_have_small_residual() {
        let map = SineFamily::reference();
        let u = ParameterPoint::scalar(0.05);
        let set = inverse_branches(&map, &u, 0.3, 1).unwrap();
        assert_eq!(set.len(), 2);
        for &x in &set.points {
            assert!(circle_distance(map.eval(&u, x), 0.3) < 1e-12);
        }
    }

    #[test]
    fn vector_field_examples() {
        let map = SineFamily::reference();
        let u = ParameterPoint::scalar(0.0);
        assert!(close(vector_field_x(&map, &u, 0.25, &[1.0]).unwrap(), 0.5, 1e-15));
        assert_eq!(vector_field_x(&map, &u, 0.37, &[0.0]).unwrap(), 0.0);
        assert!(vector_field_x(&map, &u, 0.0, &[1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn vector_field_rejects_contracting_points() {
        // 2 + 2π·0.2·cos(π) < 1
        let map = SineFamily::reference();
        let u = ParameterPoint::scalar(0.2);
        let err = vector_field_x(&map, &u, 0.5, &[1.0]).unwrap_err();
        assert_eq!(err.name(), "NotExpanding");
    }

    #[test]
    fn expansion_margin_examples() {
        let doubling = LinearMap::doubling();
        assert_eq!(
            expansion_margin(&doubling, &ParameterBox::symmetric(0.3, 1), 16),
            1.0
        );
        let sine = SineFamily::reference();
        let m = expansion_margin(&sine, &ParameterBox::symmetric(0.05, 1), 64);
        assert!(close(m, 1.0 - 0.1 * PI, 1e-12), "{m}");
        assert!(expansion_margin(&sine, &ParameterBox::symmetric(0.2, 1), 64) < 0.0);
    }

    #[test]
    fn inverse_derivative_weight_matches_finite_differences() {
        let map: Arc<dyn MapFamily> = Arc::new(SineFamily::reference());
        let g = InverseDerivativeWeight::new(map);
        let u = ParameterPoint::scalar(0.03);
        let x = 0.41;
        let h = 1e-6;
        let fd_x = (g.eval(&u, x + h) - g.eval(&u, x - h)) / (2.0 * h);
        assert!(close(g.d_x(&u, x), fd_x, 1e-8));
        let fd_u = (g.eval(&ParameterPoint::scalar(0.03 + h), x)
            - g.eval(&ParameterPoint::scalar(0.03 - h), x))
            / (2.0 * h);
        assert!(close(g.d_u(&u, x)[0], fd_u, 1e-8));
    }

    #[test]
    fn default_mixed_derivative_is_consistent() {
        struct Plain(SineFamily);
        impl MapFamily for Plain {
            fn degree(&self) -> usize {
                self.0.degree()
            }
            fn param_dim(&self) -> usize {
                self.0.param_dim()
            }
            fn name(&self) -> String {
                "plain".into()
            }
            fn lift(&self, u: &ParameterPoint, x: f64) -> f64 {
                self.0.lift(u, x)
            }
            fn d_x(&self, u: &ParameterPoint, x: f64) -> f64 {
                self.0.d_x(u, x)
            }
            fn d_xx(&self, u: &ParameterPoint, x: f64) -> f64 {
                self.0.d_xx(u, x)
            }
            fn d_u(&self, u: &ParameterPoint, x: f64) -> Vec<f64> {
                self.0.d_u(u, x)
            }
        }
        let p = Plain(SineFamily::reference());
        let u = ParameterPoint::scalar(0.01);
        let exact = p.0.d_xu(&u, 0.2)[0];
        assert!(close(p.d_xu(&u, 0.2)[0], exact, 1e-7));
    }

    #[test]
    fn parameter_point_rejects_nan() {
        assert!(ParameterPoint::new(vec![f64::NAN]).is_err());
        assert!(ParameterPoint::new(vec![]).is_err());
    }

    #[test]
    fn trig_weight_must_be_positive() {
        assert!(TrigWeight::new(0.5, vec![0.6], vec![]).is_err());
        assert!(TrigWeight::new(1.0, vec![0.3], vec![0.2]).is_ok());
    }

    #[test]
    fn wrap_stays_in_unit_interval() {
        assert_eq!(wrap(-1e-20), 0.0);
        assert_eq!(wrap(1.0), 0.0);
        assert!(close(wrap(-0.25), 0.75, 0.0));
        assert!(close(circle_distance(0.95, 0.05), 0.1, 1e-15));
    }
}
