//! Lasota–Yorke data for `𝓛^n` on `C^{1+α}`.
//!
//! `s_{n,α} = Σ_{branches} sup_{x₁,x₂} |g⁽ⁿ⁾(x_b(x₁))| · |(T^n)'(x_b(x₁))|⁻¹ ·
//! (d(x_b(x₁), x_b(x₂)) / d(x₁, x₂))^α`, where `x_b(·)` is one continuous
//! inverse branch of `T^n`. The supremum is taken over a sample grid, with
//! pairs restricted to `d(x₁, x₂) ≤ diam_guard` so that both points lie in
//! the domain of a single local inverse.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::dynamics::{inverse_branches, lift_inverse, InverseBranchSet, MapFamily, ParameterPoint, WeightFamily};
use crate::error::{Error, Result};
use crate::function_space::{GridFunction, HolderIndex};

use super::{apply_transfer_exact, cocycle, cocycle_derivative};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyOptions {
    /// Points in the `(x₁, x₂)` sample grid.
    pub sample_grid: usize,
    /// Largest `d(x₁, x₂)` paired in the supremum.
    pub diam_guard: f64,
    /// Largest admissible `d^n`.
    pub branch_budget: usize,
}

impl Default for LyOptions {
    fn default() -> Self {
        Self {
            sample_grid: 128,
            diam_guard: 0.25,
            branch_budget: 4096,
        }
    }
}

/// Per-branch factors of `s_{n,α}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchContribution {
    pub label: Vec<usize>,
    /// `sup |g⁽ⁿ⁾|` along the branch.
    pub sup_weight: f64,
    /// `sup |(T^n)'|⁻¹` along the branch.
    pub sup_inverse_derivative: f64,
    /// Sampled Lipschitz constant of the branch, i.e. its contraction ratio.
    pub contraction: f64,
    /// `contraction^α`.
    pub contraction_alpha: f64,
    /// This branch's term in `s_{n,α}`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyReport {
    pub n: usize,
    pub alpha: f64,
    pub s_n_alpha: f64,
    /// `s_{n,0}`.
    pub s_n_zero: f64,
    /// `C₁(n) = s_{n,0} + sup Σ |D g⁽ⁿ⁾|·|(T^n)'|⁻¹ + sup Σ |g⁽ⁿ⁾|`.
    pub c_n: f64,
    /// `s_{n,α}^{1/n}`.
    pub ess_radius_estimate: f64,
    pub branches: Vec<BranchContribution>,
    pub sample_grid: usize,
    pub diam_guard: f64,
}

/// Signed representative of `b - a` in `[-1/2, 1/2)`.
fn signed_offset(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - d.round()
}

/// Lasota–Yorke constants of order `n`.
pub fn ly_constants(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    n: usize,
    alpha: f64,
    options: LyOptions,
) -> Result<LyReport> {
    if n == 0 {
        return Err(Error::InvalidInput("Lasota–Yorke order must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("α must lie in [0, 1], got {alpha}")));
    }
    let branches = map
        .degree()
        .checked_pow(n as u32)
        .filter(|&b| b <= options.branch_budget)
        .ok_or(Error::BranchExplosion {
            branches: map.degree().saturating_pow(n as u32),
            budget: options.branch_budget,
        })?;
    let m = options.sample_grid.max(2);
    let samples: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
    let sets: Vec<InverseBranchSet> = samples
        .par_iter()
        .map(|&y| inverse_branches(map, u, y, n))
        .collect::<Result<_>>()?;

    // amplitude a_b(y) = |g⁽ⁿ⁾| / |(T^n)'| and its companions per sample
    let weights: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| s.orbits.iter().map(|o| cocycle(weight, u, o).abs()).collect())
        .collect();
    let inverse_derivs: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| s.derivatives.iter().map(|d| 1.0 / d.abs()).collect())
        .collect();

    let partners: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| {
            let samples = &samples;
            (0..m).filter_map(move |k| {
                let delta = signed_offset(samples[i], samples[k]);
                (k != i && delta.abs() <= options.diam_guard + 1e-15).then_some((i, k, delta))
            })
        })
        .collect();

    let per_branch = (0..branches)
        .into_par_iter()
        .map(|b| {
            let mut sup_weight = 0.0f64;
            let mut sup_inv = 0.0f64;
            let mut sup_amp = 0.0f64;
            for i in 0..m {
                sup_weight = sup_weight.max(weights[i][b]);
                sup_inv = sup_inv.max(inverse_derivs[i][b]);
                sup_amp = sup_amp.max(weights[i][b] * inverse_derivs[i][b]);
            }
            let mut contraction = 0.0f64;
            let mut product = if alpha == 0.0 { sup_amp } else { 0.0 };
            for &(i, _k, delta) in &partners {
                let z1 = sets[i].points[b];
                let mut image = z1;
                for _ in 0..n {
                    image = map.lift(u, image);
                }
                let z2 = lift_inverse(map, u, n, z1, image + delta)?;
                let ratio = (z2 - z1).abs() / delta.abs();
                contraction = contraction.max(ratio);
                if alpha > 0.0 {
                    product = product.max(weights[i][b] * inverse_derivs[i][b] * ratio.powf(alpha));
                }
            }
            Ok(BranchContribution {
                label: sets[0].labels[b].clone(),
                sup_weight,
                sup_inverse_derivative: sup_inv,
                contraction,
                contraction_alpha: contraction.powf(alpha),
                contribution: product,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let s_n_alpha: f64 = per_branch.iter().map(|c| c.contribution).sum();
    let s_n_zero: f64 = (0..branches)
        .map(|b| {
            (0..m)
                .map(|i| weights[i][b] * inverse_derivs[i][b])
                .fold(0.0, f64::max)
        })
        .sum();
    let mut sup_dg = 0.0f64;
    let mut sup_g = 0.0f64;
    for (set, (w, inv)) in sets.iter().zip(weights.iter().zip(&inverse_derivs)) {
        let dg: f64 = set
            .orbits
            .iter()
            .zip(inv)
            .map(|(o, i)| cocycle_derivative(map, weight, u, o).abs() * i)
            .sum();
        sup_dg = sup_dg.max(dg);
        sup_g = sup_g.max(w.iter().sum());
    }
    Ok(LyReport {
        n,
        alpha,
        s_n_alpha,
        s_n_zero,
        c_n: s_n_zero + sup_dg + sup_g,
        ess_radius_estimate: s_n_alpha.powf(1.0 / n as f64),
        branches: per_branch,
        sample_grid: m,
        diam_guard: options.diam_guard,
    })
}

/// CSV with columns `n,s_n_alpha,c_n,ess_radius_estimate`.
pub fn write_ly_csv<W: Write>(reports: &[LyReport], mut w: W, precision: usize) -> io::Result<()> {
    writeln!(w, "n,s_n_alpha,c_n,ess_radius_estimate")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{}",
            r.n,
            fmt_float(r.s_n_alpha, precision),
            fmt_float(r.c_n, precision),
            fmt_float(r.ess_radius_estimate, precision)
        )?;
    }
    Ok(())
}

/// One probe at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct LyProbeEntry {
    pub n: usize,
    pub probe: usize,
    /// `‖𝓛^nφ‖_{C^{1+α}}`.
    pub strong_image: f64,
    /// `‖φ‖_{C^{1+α}}`.
    pub strong_input: f64,
    /// `‖𝓛^nφ‖_{C¹}`.
    pub weak_image: f64,
    /// `‖φ‖_{C¹}`.
    pub weak_input: f64,
    /// Smallest `C` with `‖𝓛^nφ‖_{C^{1+α}} ≤ s_{n,α}‖φ‖_{C^{1+α}} + C‖φ‖_{C¹}`.
    pub required_strong: f64,
    /// Smallest `C` with `‖𝓛^nφ‖_{C¹} ≤ C‖φ‖_{C¹}`.
    pub required_weak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyEmpiricalReport {
    pub alpha: f64,
    pub entries: Vec<LyProbeEntry>,
    /// `(n, C(n))`: smallest constant satisfying both inequalities for every
    /// probe at order `n`.
    pub constants: Vec<(usize, f64)>,
    /// `C(n)^{1/n}` in the same order.
    pub growth_rates: Vec<f64>,
    /// Every `C(n)^{1/n}` stays below `max(1, C(n₀)^{1/n₀})·(1 + growth_slack)`,
    /// with `n₀` the smallest order checked.
    pub subexponential: bool,
}

/// Allowed relative excess of `C(n)^{1/n}` over its first value.
pub const GROWTH_SLACK: f64 = 0.05;

/// Evaluate both Lasota–Yorke inequalities on a probe suite and report the
/// smallest admissible `C(n)` per order.
pub fn ly_empirical_check(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    reports: &[LyReport],
    probes: &[GridFunction],
) -> Result<LyEmpiricalReport> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no Lasota–Yorke reports to check".into()));
    }
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    let alpha = reports[0].alpha;
    let strong = HolderIndex::new(1.0 + alpha.min(0.999_999))?;
    let weak = HolderIndex::new(1.0)?;
    let mut entries = Vec::new();
    let mut constants = Vec::new();
    for report in reports {
        let mut c_n = 0.0f64;
        for (p, phi) in probes.iter().enumerate() {
            let image = apply_transfer_exact(map, weight, u, phi, report.n)?;
            let strong_image = image.cr_norm(strong);
            let strong_input = phi.cr_norm(strong);
            let weak_image = image.cr_norm(weak);
            let weak_input = phi.cr_norm(weak);
            if weak_input == 0.0 {
                continue;
            }
            let required_strong =
                ((strong_image - report.s_n_alpha * strong_input) / weak_input).max(0.0);
            let required_weak = weak_image / weak_input;
            c_n = c_n.max(required_strong).max(required_weak);
            entries.push(LyProbeEntry {
                n: report.n,
                probe: p,
                strong_image,
                strong_input,
                weak_image,
                weak_input,
                required_strong,
                required_weak,
            });
        }
        constants.push((report.n, c_n));
    }
    let growth_rates: Vec<f64> = constants
        .iter()
        .map(|&(n, c)| c.powf(1.0 / n as f64))
        .collect();
    let cap = growth_rates[0].max(1.0) * (1.0 + GROWTH_SLACK);
    let subexponential = growth_rates.iter().all(|&g| g.is_finite() && g <= cap);
    Ok(LyEmpiricalReport {
        alpha,
        entries,
        constants,
        growth_rates,
        subexponential,
    })
}

/// Residual of `D[𝓛^nφ] = K^n(Dφ) + R⁽ⁿ⁾(φ)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    /// `‖D[𝓛^nφ] − K^n(Dφ) − R⁽ⁿ⁾(φ)‖_∞`.
    pub residual: f64,
    /// `‖K^n(Dφ)‖_∞`.
    pub k_sup: f64,
    /// `‖R⁽ⁿ⁾(φ)‖_∞`.
    pub r_sup: f64,
}

/// Compare the spectral derivative of `𝓛^nφ` with the two branch sums
/// `K^n(Dφ) = Σ g⁽ⁿ⁾ Dφ / (T^n)'` and `R⁽ⁿ⁾(φ) = Σ φ D[g⁽ⁿ⁾] / (T^n)'`.
pub fn derivative_decomposition_check(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    phi: &GridFunction,
    n: usize,
) -> Result<DecompositionReport> {
    let image = apply_transfer_exact(map, weight, u, phi, n)?;
    let d_image = image.spectral_derivative();
    let p = phi.interpolant();
    let size = phi.len();
    let mut residual = 0.0f64;
    let mut k_sup = 0.0f64;
    let mut r_sup = 0.0f64;
    for j in 0..size {
        let set = inverse_branches(map, u, j as f64 / size as f64, n)?;
        let mut k_term = num_complex::Complex64::new(0.0, 0.0);
        let mut r_term = num_complex::Complex64::new(0.0, 0.0);
        for ((&x, orbit), &deriv) in set.points.iter().zip(&set.orbits).zip(&set.derivatives) {
            k_term += p.eval_derivative(x) * (cocycle(weight, u, orbit) / deriv);
            r_term += p.eval(x) * (cocycle_derivative(map, weight, u, orbit) / deriv);
        }
        residual = residual.max((d_image.values()[j] - k_term - r_term).norm());
        k_sup = k_sup.max(k_term.norm());
        r_sup = r_sup.max(r_term.norm());
    }
    Ok(DecompositionReport {
        residual,
        k_sup,
        r_sup,
    })
}
