//! Parameter dependence of resolvents and spectral projectors.
//!
//! For `R(λ,u) = (λI − 𝓛_u)⁻¹` the derivative in direction `h` is
//! `R(λ,u)·(∂_u𝓛_u·h)·R(λ,u)`, which follows from the exact identity
//! `R(λ,u) − R(λ,v) = R(λ,u)(𝓛_u − 𝓛_v)R(λ,v)`. The projector derivative is
//! the same integrand integrated over a fixed contour.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::dynamics::{MapFamily, ParameterPoint, WeightFamily};
use crate::error::{Error, Result};
use crate::function_space::{GridFunction, HolderIndex};
use crate::operator::{assemble_du_transfer, assemble_transfer, operator_norm_holder};
use crate::spectral::{
    contour_integral, eigenvalues, max_entry, projector_quadrature, resolvent_matrix, ContourSpec,
    Resolvent,
};
use crate::CMatrix;

/// Differences below this max-entry size are treated as exact invariance.
pub const INVARIANCE_FLOOR: f64 = 1e-13;

/// Minimum number of nonzero norms needed for a slope fit.
pub const MIN_FIT_POINTS: usize = 3;

fn unit(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `R(λ,u)` after checking that `λ` is off the spectrum.
pub fn resolvent_at(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    lambda: Complex64,
    grid_size: usize,
) -> Result<CMatrix> {
    let l = assemble_transfer(map, weight, u, grid_size, 1)?;
    resolvent_matrix(&l.matrix, lambda)
}

/// Max-entry residual of `R(λ,u) − R(λ,v) − R(λ,u)(𝓛_u − 𝓛_v)R(λ,v)`.
pub fn resolvent_difference_check(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    v: &ParameterPoint,
    lambda: Complex64,
    grid_size: usize,
) -> Result<f64> {
    let lu = assemble_transfer(map, weight, u, grid_size, 1)?;
    let lv = assemble_transfer(map, weight, v, grid_size, 1)?;
    let ru = resolvent_matrix(&lu.matrix, lambda)?;
    let rv = resolvent_matrix(&lv.matrix, lambda)?;
    let rhs = &ru * (&lu.matrix - &lv.matrix) * &rv;
    Ok(max_entry(&(&ru - &rv - rhs)))
}

/// `∂_u R(λ,u)·h`.
pub fn du_resolvent(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    h: &[f64],
    lambda: Complex64,
    grid_size: usize,
) -> Result<CMatrix> {
    let r = resolvent_at(map, weight, u, lambda, grid_size)?;
    let d = assemble_du_transfer(map, weight, u, h, grid_size)?;
    Ok(&r * &d.matrix * &r)
}

/// `∂_uΠ_u·h` by trapezoidal quadrature of `∂_u R(z,u)·h` over `contour`.
pub fn du_projector(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    h: &[f64],
    contour: &ContourSpec,
    grid_size: usize,
) -> Result<CMatrix> {
    let l = assemble_transfer(map, weight, u, grid_size, 1)?;
    contour.check(&eigenvalues(&l.matrix)?)?;
    let d = assemble_du_transfer(map, weight, u, h, grid_size)?;
    contour_integral(contour, |z| {
        let r = Resolvent::new(&l.matrix, z)?.matrix()?;
        Ok(&r * &d.matrix * &r)
    })
}

/// `Π_u` over a fixed contour, checked against the spectrum at `u`.
pub fn projector_at(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    contour: &ContourSpec,
    grid_size: usize,
) -> Result<CMatrix> {
    let l = assemble_transfer(map, weight, u, grid_size, 1)?;
    contour.check(&eigenvalues(&l.matrix)?)?;
    projector_quadrature(&l.matrix, contour)
}

/// `[F(u + t h) − F(u − t h)] / 2t`.
pub fn central_difference<F>(u: &ParameterPoint, h: &[f64], step: f64, f: F) -> Result<CMatrix>
where
    F: Fn(&ParameterPoint) -> Result<CMatrix>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let plus = f(&u.offset(h, step))?;
    let minus = f(&u.offset(h, -step))?;
    Ok((plus - minus) / unit(2.0 * step))
}

/// Least-squares slope of `log y` against `log x` and its standard error.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let sse: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

/// Finite-difference comparison of an analytic derivative across steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub steps: Vec<f64>,
    /// Max-entry distance between the analytic derivative and the central
    /// difference at each step.
    pub errors: Vec<f64>,
    /// Log-log slope of error against step.
    pub slope: f64,
    /// `‖analytic‖_max`.
    pub analytic_norm: f64,
}

impl DerivativeCheck {
    pub fn error_at(&self, step: f64) -> Option<f64> {
        self.steps
            .iter()
            .position(|s| (s - step).abs() <= 1e-12 * step)
            .map(|i| self.errors[i])
    }

    /// CSV with columns `step,error`, then `convergence_slope` and
    /// `analytic_max_entry` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "step,error")?;
        for (s, e) in self.steps.iter().zip(&self.errors) {
            writeln!(w, "{},{}", fmt_float(*s, precision), fmt_float(*e, precision))?;
        }
        writeln!(w, "convergence_slope,{}", fmt_float(self.slope, precision))?;
        writeln!(w, "analytic_max_entry,{}", fmt_float(self.analytic_norm, precision))
    }
}

/// Compare `analytic` with central differences of `f` at each step.
pub fn derivative_check<F>(
    analytic: &CMatrix,
    u: &ParameterPoint,
    h: &[f64],
    steps: &[f64],
    f: F,
) -> Result<DerivativeCheck>
where
    F: Fn(&ParameterPoint) -> Result<CMatrix> + Sync,
{
    let errors = steps
        .par_iter()
        .map(|&t| central_difference(u, h, t, &f).map(|fd| max_entry(&(analytic - fd))))
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<(f64, f64)> = steps
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(s, e)| (*s, *e))
        .collect();
    let slope = if usable.len() >= 2 {
        let (s, e): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        loglog_fit(&s, &e).0
    } else {
        f64::NAN
    };
    Ok(DerivativeCheck {
        steps: steps.to_vec(),
        errors,
        slope,
        analytic_norm: max_entry(analytic),
    })
}

/// `du_resolvent` against central differences of `R(λ,·)`.
#[allow(clippy::too_many_arguments)]
pub fn du_resolvent_check(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    h: &[f64],
    lambda: Complex64,
    grid_size: usize,
    steps: &[f64],
) -> Result<DerivativeCheck> {
    let analytic = du_resolvent(map, weight, u, h, lambda, grid_size)?;
    derivative_check(&analytic, u, h, steps, |p| {
        resolvent_at(map, weight, p, lambda, grid_size)
    })
}

/// Agreement data for the projector derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorDerivativeCheck {
    pub fd: DerivativeCheck,
    /// `‖(∂Π)Π + Π(∂Π) − ∂Π‖_max`.
    pub product_rule: f64,
    /// `‖Π² − Π‖_max` at the base parameter.
    pub idempotence: f64,
}

impl ProjectorDerivativeCheck {
    /// The finite-difference table followed by `product_rule` and
    /// `idempotence` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        self.fd.write_csv(&mut w, precision)?;
        writeln!(w, "product_rule,{}", fmt_float(self.product_rule, precision))?;
        writeln!(w, "idempotence,{}", fmt_float(self.idempotence, precision))
    }
}

/// `du_projector` against central differences of `Π` over the same contour,
/// plus the differentiated idempotence relation.
#[allow(clippy::too_many_arguments)]
pub fn du_projector_check(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    h: &[f64],
    contour: &ContourSpec,
    grid_size: usize,
    steps: &[f64],
) -> Result<ProjectorDerivativeCheck> {
    let dp = du_projector(map, weight, u, h, contour, grid_size)?;
    let p = projector_at(map, weight, u, contour, grid_size)?;
    let product_rule = max_entry(&(&dp * &p + &p * &dp - &dp));
    let idempotence = max_entry(&(&p * &p - &p));
    let fd = derivative_check(&dp, u, h, steps, |v| {
        projector_at(map, weight, v, contour, grid_size)
    })?;
    Ok(ProjectorDerivativeCheck {
        fd,
        product_rule,
        idempotence,
    })
}

/// Operator-norm differences along a ray `u₀ + t h` and their log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityScan {
    pub u0: ParameterPoint,
    pub direction: Vec<f64>,
    pub offsets: Vec<f64>,
    pub norms: Vec<f64>,
    /// `None` when every difference vanished.
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// `α − β`.
    pub gamma_target: f64,
    pub exact_invariance: bool,
    /// `trace(Π_{u₀+t h})` for projector scans; empty otherwise.
    pub traces: Vec<Complex64>,
    pub base_trace: Option<Complex64>,
}

impl RegularityScan {
    /// `fitted_slope ≥ γ − slack`, counting exact invariance as a pass.
    pub fn meets_target(&self, slack: f64) -> bool {
        match self.fitted_slope {
            Some(s) => s >= self.gamma_target - slack,
            None => self.exact_invariance,
        }
    }

    /// CSV with columns `t,norm,log_t,log_norm` and a final
    /// `fitted_slope,<v>,gamma_target,<v>` row.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "t,norm,log_t,log_norm")?;
        for (t, n) in self.offsets.iter().zip(&self.norms) {
            let log_norm = if *n > 0.0 { fmt_float(n.ln(), precision) } else { "-inf".into() };
            writeln!(
                w,
                "{},{},{},{}",
                fmt_float(*t, precision),
                fmt_float(*n, precision),
                fmt_float(t.ln(), precision),
                log_norm
            )?;
        }
        let slope = self
            .fitted_slope
            .map_or_else(|| "nan".to_string(), |s| fmt_float(s, precision));
        writeln!(
            w,
            "fitted_slope,{slope},gamma_target,{}",
            fmt_float(self.gamma_target, precision)
        )
    }
}

fn validate_offsets(u0: &ParameterPoint, h: &[f64], offsets: &[f64]) -> Result<()> {
    if h.len() != u0.dim() {
        return Err(Error::InvalidInput(format!(
            "direction has dimension {}, parameter has {}",
            h.len(),
            u0.dim()
        )));
    }
    if offsets.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("offsets must be positive and finite".into()));
    }
    if offsets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("offsets must be strictly decreasing".into()));
    }
    Ok(())
}

fn scan_from_differences(
    u0: &ParameterPoint,
    h: &[f64],
    offsets: &[f64],
    differences: &[CMatrix],
    r_in: HolderIndex,
    r_out: HolderIndex,
    probes: &[GridFunction],
) -> Result<RegularityScan> {
    let invariant = differences.iter().all(|d| max_entry(d) <= INVARIANCE_FLOOR);
    let norms = if invariant {
        vec![0.0; differences.len()]
    } else {
        differences
            .par_iter()
            .map(|d| operator_norm_holder(d, r_in, r_out, probes))
            .collect::<Result<Vec<_>>>()?
    };
    let (fitted_slope, slope_stderr) = if invariant {
        (None, None)
    } else {
        let usable: Vec<(f64, f64)> = offsets
            .iter()
            .zip(&norms)
            .filter(|(_, n)| **n > 0.0 && n.is_finite())
            .map(|(t, n)| (*t, *n))
            .collect();
        if usable.len() < MIN_FIT_POINTS {
            return Err(Error::DegenerateFit {
                usable: usable.len(),
            });
        }
        let (t, n): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        let (s, e) = loglog_fit(&t, &n);
        (Some(s), Some(e))
    };
    Ok(RegularityScan {
        u0: u0.clone(),
        direction: h.to_vec(),
        offsets: offsets.to_vec(),
        norms,
        fitted_slope,
        slope_stderr,
        gamma_target: r_in.r() - r_out.r(),
        exact_invariance: invariant,
        traces: Vec::new(),
        base_trace: None,
    })
}

/// Scan of `‖R(λ,u₀+t h) − R(λ,u₀)‖_{C^{r_in}→C^{r_out}}` over the offsets.
/// The grid size is taken from the probes.
#[allow(clippy::too_many_arguments)]
pub fn holder_exponent_scan(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u0: &ParameterPoint,
    h: &[f64],
    lambda: Complex64,
    r_in: HolderIndex,
    r_out: HolderIndex,
    offsets: &[f64],
    probes: &[GridFunction],
) -> Result<RegularityScan> {
    validate_offsets(u0, h, offsets)?;
    let n = probes.first().ok_or(Error::EmptyProbeSet)?.len();
    let base = resolvent_at(map, weight, u0, lambda, n)?;
    let differences = offsets
        .par_iter()
        .map(|t| resolvent_at(map, weight, &u0.offset(h, *t), lambda, n).map(|r| r - &base))
        .collect::<Result<Vec<_>>>()?;
    scan_from_differences(u0, h, offsets, &differences, r_in, r_out, probes)
}

fn trace(a: &CMatrix) -> Complex64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// Scan of `‖Π_{u₀+t h} − Π_{u₀}‖_{C^{r_in}→C^{r_out}}` over a fixed contour.
#[allow(clippy::too_many_arguments)]
pub fn projector_holder_scan(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u0: &ParameterPoint,
    h: &[f64],
    contour: &ContourSpec,
    offsets: &[f64],
    r_in: HolderIndex,
    r_out: HolderIndex,
    probes: &[GridFunction],
) -> Result<RegularityScan> {
    validate_offsets(u0, h, offsets)?;
    let n = probes.first().ok_or(Error::EmptyProbeSet)?.len();
    let base = projector_at(map, weight, u0, contour, n)?;
    let projectors = offsets
        .par_iter()
        .map(|t| projector_at(map, weight, &u0.offset(h, *t), contour, n))
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<CMatrix> = projectors.iter().map(|p| p - &base).collect();
    let mut scan = scan_from_differences(u0, h, offsets, &differences, r_in, r_out, probes)?;
    scan.traces = projectors.iter().map(trace).collect();
    scan.base_trace = Some(trace(&base));
    Ok(scan)
}
