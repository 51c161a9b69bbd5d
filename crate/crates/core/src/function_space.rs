//! Band-limited periodic grid functions standing in for little Hölder spaces
//! on the circle.
//!
//! A [`GridFunction`] holds samples at `x_j = j/N`. Off-grid values come from
//! the unique trigonometric interpolant with modes `|k| < N/2`, plus the
//! Nyquist mode taken as `cos(πNx)` so that real data interpolate to real
//! functions.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::csv::fmt_float;
use crate::dynamics::circle_distance;
use crate::error::{Error, Result};

/// Smallest grid accepted by [`GridFunction::new`].
pub const MIN_GRID: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Signed frequency of FFT slot `k` on an `n`-point grid.
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn is_nyquist(k: usize, n: usize) -> bool {
    n % 2 == 0 && k == n / 2
}

/// Normalized Fourier coefficients `c_k = N⁻¹ Σ_j f_j e^{-2πikj/N}` in FFT
/// order.
pub fn fourier_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    forward_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`fourier_coefficients`].
pub fn from_fourier_coefficients(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    inverse_plan(coeffs.len()).process(&mut buf);
    buf
}

fn basis_value(k: usize, n: usize, x: f64) -> Complex64 {
    if is_nyquist(k, n) {
        Complex64::new((PI * n as f64 * x).cos(), 0.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * frequency(k, n) as f64 * x)
    }
}

fn basis_derivative(k: usize, n: usize, x: f64) -> Complex64 {
    if is_nyquist(k, n) {
        Complex64::new(-PI * n as f64 * (PI * n as f64 * x).sin(), 0.0)
    } else {
        let w = 2.0 * PI * frequency(k, n) as f64;
        Complex64::new(0.0, w) * Complex64::from_polar(1.0, w * x)
    }
}

/// Row vector `e(x)` with `p(x) = Σ_j e_j(x) f_j` for every grid function `f`
/// on `n` points.
pub fn interpolation_row(x: f64, n: usize) -> Vec<Complex64> {
    let mut w: Vec<Complex64> = (0..n).map(|k| basis_value(k, n, x)).collect();
    forward_plan(n).process(&mut w);
    let scale = 1.0 / n as f64;
    w.iter_mut().for_each(|c| *c *= scale);
    w
}

/// Row vector `e'(x)` with `p'(x) = Σ_j e'_j(x) f_j`.
pub fn interpolation_derivative_row(x: f64, n: usize) -> Vec<Complex64> {
    let mut w: Vec<Complex64> = (0..n).map(|k| basis_derivative(k, n, x)).collect();
    forward_plan(n).process(&mut w);
    let scale = 1.0 / n as f64;
    w.iter_mut().for_each(|c| *c *= scale);
    w
}

/// Regularity index `r = k + s` with `k ∈ {0, 1}` and `s ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HolderIndex(f64);

impl HolderIndex {
    pub fn new(r: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&r) {
            return Err(Error::InvalidInput(format!(
                "Hölder index must lie in [0, 2), got {r}"
            )));
        }
        Ok(Self(r))
    }

    pub fn r(&self) -> f64 {
        self.0
    }

    /// Integer part.
    pub fn k(&self) -> usize {
        self.0.floor() as usize
    }

    /// Fractional part.
    pub fn s(&self) -> f64 {
        self.0 - self.0.floor()
    }
}

/// Trigonometric interpolant of a grid function, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.coeffs.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * basis_value(k, n, x))
            .sum()
    }

    pub fn eval_derivative(&self, x: f64) -> Complex64 {
        let n = self.coeffs.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * basis_derivative(k, n, x))
            .sum()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Samples of a periodic function at `x_j = j/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < MIN_GRID {
            return Err(Error::InvalidInput(format!(
                "grid functions need at least {MIN_GRID} points, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("grid function has non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Sample a complex function on the `n`-point grid.
    pub fn sample(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    /// Sample a real function on the `n`-point grid.
    pub fn sample_real(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::sample(n, |x| Complex64::new(f(x), 0.0))
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::sample_real(n, |_| c)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Grid point `x_j`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.len() as f64
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant {
            coeffs: fourier_coefficients(&self.values),
        }
    }

    /// Value of the trigonometric interpolant at `x`.
    pub fn trig_interpolate(&self, x: f64) -> Complex64 {
        self.interpolant().eval(x)
    }

    /// Grid samples of the interpolant's derivative.
    pub fn spectral_derivative(&self) -> GridFunction {
        let n = self.len();
        let mut c = fourier_coefficients(&self.values);
        for (k, ck) in c.iter_mut().enumerate() {
            if is_nyquist(k, n) {
                *ck = Complex64::new(0.0, 0.0);
            } else {
                *ck *= Complex64::new(0.0, 2.0 * PI * frequency(k, n) as f64);
            }
        }
        GridFunction {
            values: from_fourier_coefficients(&c),
        }
    }

    /// Mean-zero antiderivative of the mean-zero part of `self`.
    pub fn spectral_antiderivative(&self) -> GridFunction {
        let n = self.len();
        let mut c = fourier_coefficients(&self.values);
        for (k, ck) in c.iter_mut().enumerate() {
            if k == 0 || is_nyquist(k, n) {
                *ck = Complex64::new(0.0, 0.0);
            } else {
                *ck /= Complex64::new(0.0, 2.0 * PI * frequency(k, n) as f64);
            }
        }
        GridFunction {
            values: from_fourier_coefficients(&c),
        }
    }

    /// Discrete mean `N⁻¹ Σ_j f_j`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Discrete Hölder seminorm `max_{j≠k} |f_j − f_k| / d(x_j, x_k)^s`.
    pub fn holder_seminorm(&self, s: f64) -> f64 {
        holder_seminorm(&self.values, s)
    }

    /// Discrete `C^r` norm.
    ///
    /// `r = s < 1`: `‖f‖_∞ + |f|_s`; `r = 1 + s`: `‖f‖_∞ + ‖f'‖_∞ + |f'|_s`,
    /// with `|·|_0 := 0`.
    pub fn cr_norm(&self, r: HolderIndex) -> f64 {
        let s = r.s();
        match r.k() {
            0 => self.sup_norm() + holder_seminorm(&self.values, s),
            _ => {
                let df = self.spectral_derivative();
                self.sup_norm() + df.sup_norm() + holder_seminorm(&df.values, s)
            }
        }
    }

    pub fn scale(&self, a: Complex64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// CSV with header `x,value_re[,value_im]`; the imaginary column is
    /// written only for complex data.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        let complex = !self.is_real();
        if complex {
            writeln!(w, "x,value_re,value_im")?;
        } else {
            writeln!(w, "x,value_re")?;
        }
        for (j, v) in self.values.iter().enumerate() {
            let x = fmt_float(self.point(j), precision);
            if complex {
                writeln!(
                    w,
                    "{x},{},{}",
                    fmt_float(v.re, precision),
                    fmt_float(v.im, precision)
                )?;
            } else {
                writeln!(w, "{x},{}", fmt_float(v.re, precision))?;
            }
        }
        Ok(())
    }
}

pub fn sup_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Hölder seminorm of samples at `j/len`, exhaustive over all pairs.
/// Returns 0 for `s ≤ 0`.
pub fn holder_seminorm(values: &[Complex64], s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let n = values.len();
    let weights: Vec<f64> = (0..n)
        .map(|m| {
            let d = circle_distance(0.0, m as f64 / n as f64);
            if m == 0 {
                0.0
            } else {
                d.powf(-s)
            }
        })
        .collect();
    let mut best = 0.0f64;
    for j in 0..n {
        for k in (j + 1)..n {
            best = best.max((values[j] - values[k]).norm() * weights[k - j]);
        }
    }
    best
}

/// Number of extra Weierstrass terms `J`: the largest `J` with `b^J < N/2`.
pub fn weierstrass_terms(b: u32, n: usize) -> usize {
    let b = b.max(2) as f64;
    let half = n as f64 / 2.0;
    let mut j = 0usize;
    while b.powi(j as i32 + 1) < half {
        j += 1;
    }
    j
}

/// `Σ_{j=0}^{J} b^{-rj} cos(2π b^j x)` sampled on `n` points, `J` from
/// [`weierstrass_terms`].
pub fn weierstrass_test(r: f64, b: u32, n: usize) -> Result<GridFunction> {
    weierstrass_with_terms(r, b, n, weierstrass_terms(b, n))
}

/// Weierstrass sum truncated after `terms + 1` modes.
pub fn weierstrass_with_terms(r: f64, b: u32, n: usize, terms: usize) -> Result<GridFunction> {
    if b < 2 {
        return Err(Error::InvalidInput(format!("Weierstrass base must be ≥ 2, got {b}")));
    }
    let bf = b as f64;
    if bf.powi(terms as i32) >= n as f64 / 2.0 {
        return Err(Error::InvalidInput(format!(
            "mode {b}^{terms} is not below the Nyquist limit of an {n}-point grid"
        )));
    }
    GridFunction::sample_real(n, |x| {
        (0..=terms)
            .map(|j| {
                let freq = bf.powi(j as i32);
                freq.powf(-r) * (2.0 * PI * freq * x).cos()
            })
            .sum()
    })
}
