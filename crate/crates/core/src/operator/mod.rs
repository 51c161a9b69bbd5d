//! Collocation matrices of the weighted transfer operator and its parameter
//! derivative.
//!
//! Row `j` of the order-`n` matrix is `Σ_b g⁽ⁿ⁾(x_b) e(x_b)`, where `x_b`
//! runs over the `d^n` preimages of the grid point `x_j` and `e(x)` is the
//! trigonometric interpolation row. Applied to samples of a band-limited
//! function this reproduces the branch sum exactly.

mod lasota_yorke;
mod norms;

pub use lasota_yorke::{
    derivative_decomposition_check, ly_constants, ly_empirical_check, write_ly_csv,
    BranchContribution, DecompositionReport, LyEmpiricalReport, LyOptions, LyProbeEntry,
    LyReport,
};
pub use norms::{default_probe_suite, operator_norm_holder};

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::dynamics::{inverse_branches, vector_field_x, MapFamily, ParameterPoint, WeightFamily};
use crate::error::{Error, Result};
use crate::function_space::{
    interpolation_derivative_row, interpolation_row, GridFunction, MIN_GRID,
};
use crate::CMatrix;

/// Which operator a [`TransferMatrix`] discretizes.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `𝓛_u^n`.
    Transfer,
    /// `∂_u 𝓛_u · h`.
    ParameterDerivative { direction: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMeta {
    pub u: Vec<f64>,
    pub order: usize,
    pub grid_size: usize,
    pub map: String,
    pub weight: String,
    pub kind: OperatorKind,
}

/// Dense `N × N` collocation matrix acting on grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub matrix: CMatrix,
    pub meta: MatrixMeta,
}

impl TransferMatrix {
    pub fn grid_size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        apply_matrix(&self.matrix, f)
    }

    /// Row-major CSV, each entry as an `re,im` pair, with a header row.
    pub fn write_csv<W: Write>(&self, w: W, precision: usize) -> io::Result<()> {
        write_matrix_csv(&self.matrix, w, precision)
    }
}

/// `A·f` on grid values.
pub fn apply_matrix(a: &CMatrix, f: &GridFunction) -> GridFunction {
    assert_eq!(a.ncols(), f.len(), "matrix/grid size mismatch");
    let v = nalgebra::DVector::from_column_slice(f.values());
    let out = a * v;
    GridFunction::new(out.as_slice().to_vec()).expect("finite product of finite data")
}

/// Row-major CSV of a complex matrix: header `c0_re,c0_im,c1_re,...`.
pub fn write_matrix_csv<W: Write>(a: &CMatrix, mut w: W, precision: usize) -> io::Result<()> {
    let header: Vec<String> = (0..a.ncols())
        .flat_map(|j| [format!("c{j}_re"), format!("c{j}_im")])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols())
            .flat_map(|j| {
                let z = a[(i, j)];
                [fmt_float(z.re, precision), fmt_float(z.im, precision)]
            })
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `g⁽ⁿ⁾(x) = Π_{k<n} g(T^k x)` along a stored orbit.
pub fn cocycle(weight: &dyn WeightFamily, u: &ParameterPoint, orbit: &[f64]) -> f64 {
    orbit.iter().map(|&x| weight.eval(u, x)).product()
}

/// `D[g⁽ⁿ⁾](x) = Σ_k g'(T^k x)·(T^k)'(x)·Π_{m≠k} g(T^m x)`.
pub fn cocycle_derivative(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    orbit: &[f64],
) -> f64 {
    let values: Vec<f64> = orbit.iter().map(|&x| weight.eval(u, x)).collect();
    let mut total = 0.0;
    let mut chain = 1.0;
    for (k, &x) in orbit.iter().enumerate() {
        let others: f64 = values
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != k)
            .map(|(_, v)| v)
            .product();
        total += weight.d_x(u, x) * chain * others;
        chain *= map.d_x(u, x);
    }
    total
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(Error::InvalidInput(format!(
            "grid size must be at least {MIN_GRID}, got {n}"
        )));
    }
    Ok(())
}

fn check_param(map: &dyn MapFamily, u: &ParameterPoint) -> Result<()> {
    if u.dim() != map.param_dim() {
        return Err(Error::InvalidInput(format!(
            "parameter has dimension {}, map {} expects {}",
            u.dim(),
            map.name(),
            map.param_dim()
        )));
    }
    Ok(())
}

/// `𝓛_u^n f` evaluated at each grid point directly from the branch sum, with
/// `f` evaluated off-grid through its trigonometric interpolant.
pub fn apply_transfer_exact(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    f: &GridFunction,
    n: usize,
) -> Result<GridFunction> {
    check_param(map, u)?;
    let p = f.interpolant();
    let size = f.len();
    let values = (0..size)
        .into_par_iter()
        .map(|j| {
            let set = inverse_branches(map, u, j as f64 / size as f64, n)?;
            Ok(set
                .points
                .iter()
                .zip(&set.orbits)
                .map(|(&x, orbit)| p.eval(x) * cocycle(weight, u, orbit))
                .sum())
        })
        .collect::<Result<Vec<Complex64>>>()?;
    GridFunction::new(values)
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Dense collocation matrix of `𝓛_u^n` on an `N`-point grid.
pub fn assemble_transfer(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    grid_size: usize,
    n: usize,
) -> Result<TransferMatrix> {
    check_grid(grid_size)?;
    check_param(map, u)?;
    let rows = (0..grid_size)
        .into_par_iter()
        .map(|j| {
            let set = inverse_branches(map, u, j as f64 / grid_size as f64, n)?;
            let mut row = vec![Complex64::new(0.0, 0.0); grid_size];
            for (&x, orbit) in set.points.iter().zip(&set.orbits) {
                let gn = cocycle(weight, u, orbit);
                for (r, e) in row.iter_mut().zip(interpolation_row(x, grid_size)) {
                    *r += e * gn;
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferMatrix {
        matrix: matrix_from_rows(rows),
        meta: MatrixMeta {
            u: u.coords().to_vec(),
            order: n,
            grid_size,
            map: map.name(),
            weight: weight.name(),
            kind: OperatorKind::Transfer,
        },
    })
}

/// Dense matrix of `φ ↦ 𝓛_u[φ·(∂_u g/g)·h − φ·(g'/g)·X_u h − φ'·X_u h]`.
///
/// Every factor is evaluated at the branch points themselves, so the result
/// is the exact parameter derivative of [`assemble_transfer`] at order one.
pub fn assemble_du_transfer(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    h: &[f64],
    grid_size: usize,
) -> Result<TransferMatrix> {
    check_grid(grid_size)?;
    check_param(map, u)?;
    if h.len() != u.dim() {
        return Err(Error::InvalidInput(format!(
            "direction has dimension {}, parameter has {}",
            h.len(),
            u.dim()
        )));
    }
    let rows = (0..grid_size)
        .into_par_iter()
        .map(|j| {
            let set = inverse_branches(map, u, j as f64 / grid_size as f64, 1)?;
            let mut row = vec![Complex64::new(0.0, 0.0); grid_size];
            for &x in &set.points {
                let g = weight.eval(u, x);
                let dg = weight.d_x(u, x);
                let dug: f64 = weight.d_u(u, x).iter().zip(h).map(|(a, b)| a * b).sum();
                let xu = vector_field_x(map, u, x, h)?;
                let value_coeff = dug - dg * xu;
                let slope_coeff = -g * xu;
                if value_coeff != 0.0 {
                    for (r, e) in row.iter_mut().zip(interpolation_row(x, grid_size)) {
                        *r += e * value_coeff;
                    }
                }
                if slope_coeff != 0.0 {
                    for (r, e) in row
                        .iter_mut()
                        .zip(interpolation_derivative_row(x, grid_size))
                    {
                        *r += e * slope_coeff;
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferMatrix {
        matrix: matrix_from_rows(rows),
        meta: MatrixMeta {
            u: u.coords().to_vec(),
            order: 1,
            grid_size,
            map: map.name(),
            weight: weight.name(),
            kind: OperatorKind::ParameterDerivative {
                direction: h.to_vec(),
            },
        },
    })
}
