//! Eigenstructure, resolvents and contour-integral spectral projectors of
//! collocation matrices.
//!
//! Eigenvalues are computed from a complex Schur form of the matrix expressed
//! in the Fourier basis, after flushing entries below the assembly round-off
//! floor. Truncated transfer operators carry long nilpotent Jordan chains
//! (mode halving), and without the flush round-off splits each chain into a
//! ring of spurious eigenvalues of size `ε^{1/k}`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DVector, Dyn, LU};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::dynamics::{MapFamily, ParameterPoint, WeightFamily};
use crate::error::{Error, Result};
use crate::function_space::{from_fourier_coefficients, fourier_coefficients, GridFunction, HolderIndex};
use crate::operator::{apply_matrix, assemble_transfer, TransferMatrix};
use crate::CMatrix;

/// Lead eigenvalue is considered simple only if `|λ₁| − |λ₂|` exceeds this.
pub const SIMPLICITY_GAP: f64 = 1e-12;

/// Minimum distance between a resolvent point and the spectrum.
pub const RESOLVENT_MARGIN: f64 = 1e-8;

/// Relative residual accepted from a resolvent solve.
pub const RESOLVENT_RESIDUAL: f64 = 1e-10;

/// Eigenvalues within this distance across resolutions count as reliable.
pub const RELIABLE_TOLERANCE: f64 = 1e-8;

/// Contours must keep every eigenvalue this fraction of the radius away.
pub const CONTOUR_GUARD: f64 = 0.05;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `⟨ℓ, φ⟩ = N⁻¹ Σ_j conj(ℓ_j) φ_j`.
pub fn pairing(ell: &GridFunction, phi: &GridFunction) -> Complex64 {
    assert_eq!(ell.len(), phi.len(), "grid size mismatch");
    ell.values()
        .iter()
        .zip(phi.values())
        .map(|(l, p)| l.conj() * p)
        .sum::<Complex64>()
        / phi.len() as f64
}

/// `F A F⁻¹` with `F` the DFT matrix, i.e. the matrix acting on Fourier
/// coefficients.
pub fn to_fourier_basis(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    // F·A: transform every column
    let mut fa = CMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<Complex64> = a.column(j).iter().copied().collect();
        let t = fourier_coefficients(&col);
        for (i, v) in t.into_iter().enumerate() {
            fa[(i, j)] = v * n as f64;
        }
    }
    // (F·A)·F⁻¹: row times conj(F)/N is an unnormalized inverse DFT over N
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<Complex64> = fa.row(i).iter().copied().collect();
        let t = from_fourier_coefficients(&row);
        for (j, v) in t.into_iter().enumerate() {
            out[(i, j)] = v / n as f64;
        }
    }
    out
}

/// Sort by decreasing modulus; moduli equal to round-off are ordered by
/// increasing argument.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
    let mut start = 0;
    while start < values.len() {
        let tol = 1e-12 * values[start].norm().max(1.0);
        let mut end = start + 1;
        while end < values.len() && (values[end - 1].norm() - values[end].norm()).abs() <= tol {
            end += 1;
        }
        values[start..end].sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        start = end;
    }
}

/// All eigenvalues of `a`, sorted by [`sort_spectrum`].
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidInput("eigenvalues need a nonempty square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut b = to_fourier_basis(a);
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = 16.0 * n as f64 * f64::EPSILON * scale;
    b.iter_mut().for_each(|z| {
        if z.norm() <= floor {
            *z = c(0.0);
        }
    });
    let mut values = Vec::with_capacity(n);
    for block in strongly_connected_blocks(&b) {
        let m = block.len();
        let sub = CMatrix::from_fn(m, m, |i, j| b[(block[i], block[j])]);
        if m == 1 {
            values.push(sub[(0, 0)]);
            continue;
        }
        let schur = sub
            .try_schur(f64::EPSILON, 0)
            .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        values.extend((0..m).map(|i| t[(i, i)]));
    }
    sort_spectrum(&mut values);
    Ok(values)
}

/// Index sets of the strongly connected components of the nonzero pattern
/// of `a`. Permuting `a` to these blocks gives a block-triangular matrix, so
/// its spectrum is the union of the spectra of the diagonal blocks.
fn strongly_connected_blocks(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != c(0.0) {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&graph)
        .into_iter()
        .map(|block| block.into_iter().map(|v| v.index()).collect())
        .collect()
}

/// Sorted spectrum with the normalized leading eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub lead_value: Complex64,
    /// `φ_u`: real, positive with mean 1 when that is possible.
    pub lead_right: GridFunction,
    /// `ℓ_u`, scaled so that `⟨ℓ_u, φ_u⟩ = 1`.
    pub lead_left: GridFunction,
    /// `|λ₁| − |λ₂|`.
    pub gap: f64,
}

impl SpectralData {
    /// CSV with columns `index,re,im,modulus`.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "index,re,im,modulus")?;
        for (i, z) in self.eigenvalues.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{}",
                fmt_float(z.re, precision),
                fmt_float(z.im, precision),
                fmt_float(z.norm(), precision)
            )?;
        }
        Ok(())
    }
}

fn inverse_iteration(a: &CMatrix, eigenvalue: Complex64) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let mut shift = eigenvalue + c(1e-10 * eigenvalue.norm().max(1.0));
    for _attempt in 0..4 {
        let m = a - CMatrix::identity(n, n) * shift;
        let lu = m.lu();
        let mut x = DVector::from_fn(n, |j, _| c(1.0 + 0.37 * (j as f64 / n as f64)));
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&x) {
                Some(y) => {
                    let s = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if !(s > 0.0) || !s.is_finite() {
                        ok = false;
                        break;
                    }
                    x = y / c(s);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        shift += c(1e-9 * eigenvalue.norm().max(1.0));
    }
    Err(Error::NearSingular(format!(
        "inverse iteration failed at eigenvalue {eigenvalue}"
    )))
}

/// Dense eigendecomposition with the leading pair normalized as documented on
/// [`SpectralData`].
pub fn eigendecompose(l: &TransferMatrix) -> Result<SpectralData> {
    eigendecompose_matrix(&l.matrix)
}

pub fn eigendecompose_matrix(a: &CMatrix) -> Result<SpectralData> {
    let values = eigenvalues(a)?;
    let lead = values[0];
    let gap = if values.len() > 1 {
        lead.norm() - values[1].norm()
    } else {
        lead.norm()
    };
    if gap < SIMPLICITY_GAP {
        return Err(Error::DegenerateLead { gap });
    }
    let right = inverse_iteration(a, lead)?;
    let left = inverse_iteration(&a.adjoint(), lead.conj())?;
    let mut phi: Vec<Complex64> = right.iter().copied().collect();
    let mut ell: Vec<Complex64> = left.iter().copied().collect();

    // phase: make the largest entry real positive
    let pivot = phi
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(c(1.0));
    let phase = pivot / pivot.norm();
    phi.iter_mut().for_each(|z| *z /= phase);
    let sup = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let real_lead = lead.im.abs() <= 1e-12 * lead.norm().max(1.0);
    let nearly_real = phi.iter().all(|z| z.im.abs() <= 1e-10 * sup);
    let positive = phi.iter().all(|z| z.re > 0.0);
    if real_lead && nearly_real && positive {
        phi.iter_mut().for_each(|z| z.im = 0.0);
        let mean = phi.iter().map(|z| z.re).sum::<f64>() / phi.len() as f64;
        phi.iter_mut().for_each(|z| *z /= mean);
    } else {
        phi.iter_mut().for_each(|z| *z /= sup);
    }
    let phi = GridFunction::new(phi)?;
    let p = pairing(&GridFunction::new(ell.clone())?, &phi);
    if p.norm() == 0.0 {
        return Err(Error::DegenerateLead { gap });
    }
    let scale = c(1.0) / p.conj();
    ell.iter_mut().for_each(|z| *z *= scale);
    Ok(SpectralData {
        eigenvalues: values,
        lead_value: lead,
        lead_right: phi,
        lead_left: GridFunction::new(ell)?,
        gap,
    })
}

/// LU factorization of `λI − A`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    lambda: Complex64,
    shifted: CMatrix,
    lu: LU<Complex64, Dyn, Dyn>,
}

impl Resolvent {
    /// Factor `λI − A`. Fails with `NearSingular` on a pivot below the
    /// round-off floor; does not check the distance to the spectrum.
    pub fn new(a: &CMatrix, lambda: Complex64) -> Result<Self> {
        let n = a.nrows();
        let shifted = CMatrix::identity(n, n) * lambda - a;
        let lu = shifted.clone().lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 1e-14 * max) {
            return Err(Error::NearSingular(format!(
                "λ = {lambda}: pivot ratio {:e}",
                min / max
            )));
        }
        Ok(Self { lambda, shifted, lu })
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Solve `(λI − A)x = f` with one refinement step and a residual check.
    pub fn solve(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = DVector::from_column_slice(f);
        let mut x = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::NearSingular(format!("λ = {}: singular factor", self.lambda)))?;
        let r = &rhs - &self.shifted * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        let res = (&rhs - &self.shifted * &x)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let fnorm = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if res > RESOLVENT_RESIDUAL * fnorm {
            return Err(Error::NearSingular(format!(
                "λ = {}: residual {res:e} exceeds tolerance",
                self.lambda
            )));
        }
        Ok(x.as_slice().to_vec())
    }

    /// `(λI − A)⁻¹` as a dense matrix.
    pub fn matrix(&self) -> Result<CMatrix> {
        self.lu
            .try_inverse()
            .ok_or_else(|| Error::NearSingular(format!("λ = {}: singular factor", self.lambda)))
    }
}

/// `(λI − A)⁻¹` after checking the distance to the spectrum.
pub fn resolvent_matrix(a: &CMatrix, lambda: Complex64) -> Result<CMatrix> {
    check_resolvent_point(&eigenvalues(a)?, lambda)?;
    Resolvent::new(a, lambda)?.matrix()
}

fn check_resolvent_point(spectrum: &[Complex64], lambda: Complex64) -> Result<()> {
    if let Some(z) = spectrum
        .iter()
        .find(|z| (**z - lambda).norm() <= RESOLVENT_MARGIN)
    {
        return Err(Error::NearSingular(format!(
            "λ = {lambda} lies within {RESOLVENT_MARGIN:e} of eigenvalue {z}"
        )));
    }
    Ok(())
}

/// `x = (λI − L)⁻¹ f`.
pub fn resolvent_apply(
    l: &TransferMatrix,
    lambda: Complex64,
    f: &GridFunction,
) -> Result<GridFunction> {
    check_resolvent_point(&eigenvalues(&l.matrix)?, lambda)?;
    GridFunction::new(Resolvent::new(&l.matrix, lambda)?.solve(f.values())?)
}

/// Circle `|z − center| = radius` discretized with `nodes` trapezoidal nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("contour radius must be positive, got {radius}")));
        }
        if nodes < 8 {
            return Err(Error::InvalidInput(format!("contour needs at least 8 nodes, got {nodes}")));
        }
        Ok(Self {
            center,
            radius,
            nodes,
        })
    }

    /// Circle centred on `spectrum[target]` with half the distance to the
    /// nearest other listed eigenvalue as radius.
    pub fn around(spectrum: &[Complex64], target: usize, nodes: usize) -> Result<Self> {
        let center = *spectrum
            .get(target)
            .ok_or_else(|| Error::InvalidInput(format!("no eigenvalue with index {target}")))?;
        let nearest = spectrum
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target)
            .map(|(_, z)| (z - center).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = if nearest.is_finite() { 0.5 * nearest } else { 0.5 * center.norm().max(1.0) };
        Self::new(center, radius, nodes)
    }

    /// `(z_k, r e^{iθ_k} / K)` for `θ_k = 2πk/K`.
    pub fn quadrature(&self) -> Vec<(Complex64, Complex64)> {
        (0..self.nodes)
            .map(|k| {
                let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / self.nodes as f64);
                (self.center + e * self.radius, e * (self.radius / self.nodes as f64))
            })
            .collect()
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        Self { nodes, ..*self }
    }

    /// Number of listed eigenvalues strictly inside the circle.
    pub fn enclosed(&self, spectrum: &[Complex64]) -> usize {
        spectrum
            .iter()
            .filter(|z| (**z - self.center).norm() < self.radius)
            .count()
    }

    /// Fail with `ContourTooClose` if any eigenvalue sits within
    /// `CONTOUR_GUARD·radius` of the circle.
    pub fn check(&self, spectrum: &[Complex64]) -> Result<usize> {
        let guard = CONTOUR_GUARD * self.radius;
        for z in spectrum {
            let distance = ((*z - self.center).norm() - self.radius).abs();
            if distance < guard {
                return Err(Error::ContourTooClose {
                    eigenvalue: format!("{z}"),
                    distance,
                    guard,
                });
            }
        }
        Ok(self.enclosed(spectrum))
    }
}

/// `(1/K) Σ_k r e^{iθ_k} F(z_k)` for a matrix-valued integrand.
pub fn contour_integral<F>(contour: &ContourSpec, integrand: F) -> Result<CMatrix>
where
    F: Fn(Complex64) -> Result<CMatrix> + Sync,
{
    let terms = contour
        .quadrature()
        .into_par_iter()
        .map(|(z, w)| integrand(z).map(|m| m * w))
        .collect::<Result<Vec<_>>>()?;
    let mut iter = terms.into_iter();
    let mut sum = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("contour without nodes".into()))?;
    for t in iter {
        sum += t;
    }
    Ok(sum)
}

/// Trapezoidal approximation of `(2πi)⁻¹ ∮ (z − A)⁻¹ dz`, without the
/// spectrum check.
pub fn projector_quadrature(a: &CMatrix, contour: &ContourSpec) -> Result<CMatrix> {
    contour_integral(contour, |z| Resolvent::new(a, z)?.matrix())
}

/// Spectral projector onto the eigenvalues enclosed by `contour`.
pub fn spectral_projector(l: &TransferMatrix, contour: &ContourSpec) -> Result<CMatrix> {
    contour.check(&eigenvalues(&l.matrix)?)?;
    projector_quadrature(&l.matrix, contour)
}

/// Double the node count of `contour`, starting from its own, until
/// `‖Π_K − Π_{2K}‖_max ≤ tol`; returns the first such `K` and the change.
pub fn certify_nodes(
    a: &CMatrix,
    contour: &ContourSpec,
    tol: f64,
    max_nodes: usize,
) -> Result<(ContourSpec, f64)> {
    contour.check(&eigenvalues(a)?)?;
    let mut current = *contour;
    let mut p = projector_quadrature(a, &current)?;
    loop {
        let next = current.with_nodes(2 * current.nodes);
        let q = projector_quadrature(a, &next)?;
        let change = max_entry(&(&p - &q));
        if change <= tol {
            return Ok((current, change));
        }
        if next.nodes > max_nodes {
            return Err(Error::NearSingular(format!(
                "quadrature not converged at {} nodes (change {change:e})",
                next.nodes
            )));
        }
        current = next;
        p = q;
    }
}

/// One eigenvalue seen at two resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedEigenvalue {
    pub coarse: Complex64,
    pub fine: Complex64,
    pub discrepancy: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliableSpectrum {
    pub rho: f64,
    pub coarse_grid: usize,
    pub fine_grid: usize,
    pub pairs: Vec<MatchedEigenvalue>,
}

impl ReliableSpectrum {
    pub fn all_reliable(&self) -> bool {
        self.pairs.iter().all(|p| p.reliable)
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.pairs.iter().map(|p| p.discrepancy).fold(0.0, f64::max)
    }

    /// CSV with columns
    /// `index,coarse_re,coarse_im,fine_re,fine_im,discrepancy,reliable`.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        writeln!(w, "index,coarse_re,coarse_im,fine_re,fine_im,discrepancy,reliable")?;
        for (i, p) in self.pairs.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{},{},{}",
                fmt_float(p.coarse.re, precision),
                fmt_float(p.coarse.im, precision),
                fmt_float(p.fine.re, precision),
                fmt_float(p.fine.im, precision),
                fmt_float(p.discrepancy, precision),
                p.reliable
            )?;
        }
        Ok(())
    }
}

/// Match the eigenvalues above `rho` at two resolutions.
pub fn match_spectra(coarse: &[Complex64], fine: &[Complex64], rho: f64) -> Result<Vec<MatchedEigenvalue>> {
    let a: Vec<Complex64> = coarse.iter().copied().filter(|z| z.norm() > rho).collect();
    let mut b: Vec<Complex64> = fine.iter().copied().filter(|z| z.norm() > rho).collect();
    if a.len() != b.len() {
        return Err(Error::MatchFailure {
            coarse: a.len(),
            fine: b.len(),
        });
    }
    let mut pairs = Vec::with_capacity(a.len());
    for z in a {
        let (idx, _) = b
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| (**x - z).norm().total_cmp(&(**y - z).norm()))
            .expect("equal counts");
        let w = b.remove(idx);
        let discrepancy = (w - z).norm();
        pairs.push(MatchedEigenvalue {
            coarse: z,
            fine: w,
            discrepancy,
            reliable: discrepancy < RELIABLE_TOLERANCE,
        });
    }
    Ok(pairs)
}

/// Eigenvalues of modulus above `rho` at grids `n1` and `n2 ≥ 2·n1`, matched
/// by proximity.
pub fn reliable_spectrum(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u: &ParameterPoint,
    n1: usize,
    n2: usize,
    rho: f64,
) -> Result<ReliableSpectrum> {
    if n2 < 2 * n1 {
        return Err(Error::InvalidInput(format!(
            "fine grid {n2} must be at least twice the coarse grid {n1}"
        )));
    }
    let coarse = eigenvalues(&assemble_transfer(map, weight, u, n1, 1)?.matrix)?;
    let fine = eigenvalues(&assemble_transfer(map, weight, u, n2, 1)?.matrix)?;
    Ok(ReliableSpectrum {
        rho,
        coarse_grid: n1,
        fine_grid: n2,
        pairs: match_spectra(&coarse, &fine, rho)?,
    })
}

/// One `(u, probe)` sample of a uniform-bound scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub u: Vec<f64>,
    pub probe: usize,
    /// `‖R(z,u) f‖_strong`.
    pub norm_strong: f64,
    /// `‖R(z,u) f‖_weak`.
    pub norm_weak: f64,
    /// `‖f‖_strong`.
    pub input_strong: f64,
    /// `‖f‖_weak`.
    pub input_weak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBoundScan {
    pub z: Complex64,
    /// Fitted `(a, b)` minimizing `a + b` subject to
    /// `‖R f‖_strong ≤ a‖f‖_strong + b‖f‖_weak` on every sample.
    pub a: f64,
    pub b: f64,
    pub samples: Vec<ScanSample>,
    /// `max_f ‖R(z,u) f‖_strong / ‖f‖_strong` for each parameter.
    pub per_u: Vec<(Vec<f64>, f64)>,
}

impl UniformBoundScan {
    /// `max_u / min_u` of the per-parameter strong norms.
    pub fn spread_ratio(&self) -> f64 {
        let (lo, hi) = self.extremes();
        hi / lo
    }

    /// `max_u − min_u` of the per-parameter strong norms.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self.extremes();
        hi - lo
    }

    fn extremes(&self) -> (f64, f64) {
        self.per_u.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, v)| {
            (lo.min(*v), hi.max(*v))
        })
    }

    /// CSV with columns `u0,...,norm_strong,norm_weak`.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> io::Result<()> {
        let dim = self.samples.first().map_or(1, |s| s.u.len());
        let mut header: Vec<String> = (0..dim).map(|i| format!("u{i}")).collect();
        header.push("norm_strong".into());
        header.push("norm_weak".into());
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row: Vec<String> = s.u.iter().map(|v| fmt_float(*v, precision)).collect();
            row.push(fmt_float(s.norm_strong, precision));
            row.push(fmt_float(s.norm_weak, precision));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Smallest `a + b` (with `a, b ≥ 0`) such that `a·s_i + b·w_i ≥ r_i` for
/// every `(s_i, w_i, r_i)`. The optimum of this two-variable program sits on
/// a vertex, so every vertex is enumerated.
pub fn fit_uniform_bound(samples: &[(f64, f64, f64)]) -> (f64, f64) {
    let feasible = |a: f64, b: f64| {
        a >= 0.0
            && b >= 0.0
            && samples
                .iter()
                .all(|&(s, w, r)| a * s + b * w >= r * (1.0 - 1e-12) - 1e-300)
    };
    let mut candidates = Vec::new();
    let a_only = samples
        .iter()
        .filter(|t| t.0 > 0.0)
        .map(|&(s, _, r)| r / s)
        .fold(0.0, f64::max);
    let b_only = samples
        .iter()
        .filter(|t| t.1 > 0.0)
        .map(|&(_, w, r)| r / w)
        .fold(0.0, f64::max);
    candidates.push((a_only, 0.0));
    candidates.push((0.0, b_only));
    for (i, &(s1, w1, r1)) in samples.iter().enumerate() {
        for &(s2, w2, r2) in &samples[i + 1..] {
            let det = s1 * w2 - s2 * w1;
            if det.abs() <= 1e-14 * (s1 * w2).abs().max((s2 * w1).abs()) {
                continue;
            }
            let a = (r1 * w2 - r2 * w1) / det;
            let b = (s1 * r2 - s2 * r1) / det;
            candidates.push((a, b));
        }
    }
    candidates
        .into_iter()
        .filter(|&(a, b)| feasible(a, b))
        .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
        .unwrap_or((a_only.max(b_only), 0.0))
}

/// Options of [`uniform_bound_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub grid_size: usize,
    /// Required distance from `z` to every spectrum on the grid.
    pub min_distance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_size: 64,
            min_distance: 1e-2,
        }
    }
}

/// Resolvent norms `‖R(z,u) f‖` over a parameter grid and a probe suite,
/// with the fitted uniform bound `‖R f‖_strong ≤ a‖f‖_strong + b‖f‖_weak`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_bound_scan(
    map: &dyn MapFamily,
    weight: &dyn WeightFamily,
    u_grid: &[ParameterPoint],
    z: Complex64,
    r_strong: HolderIndex,
    r_weak: HolderIndex,
    probes: &[GridFunction],
    options: ScanOptions,
) -> Result<UniformBoundScan> {
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    if u_grid.is_empty() {
        return Err(Error::InvalidInput("empty parameter grid".into()));
    }
    let per_u_samples = u_grid
        .par_iter()
        .map(|u| {
            let l = assemble_transfer(map, weight, u, options.grid_size, 1)?;
            let spectrum = eigenvalues(&l.matrix)?;
            let distance = spectrum.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
            if distance <= options.min_distance {
                return Err(Error::NearSingular(format!(
                    "z = {z} within {distance:e} of the spectrum at u = {:?}",
                    u.coords()
                )));
            }
            let res = Resolvent::new(&l.matrix, z)?;
            probes
                .iter()
                .enumerate()
                .map(|(p, f)| {
                    let rf = GridFunction::new(res.solve(f.values())?)?;
                    Ok(ScanSample {
                        u: u.coords().to_vec(),
                        probe: p,
                        norm_strong: rf.cr_norm(r_strong),
                        norm_weak: rf.cr_norm(r_weak),
                        input_strong: f.cr_norm(r_strong),
                        input_weak: f.cr_norm(r_weak),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let per_u = per_u_samples
        .iter()
        .map(|rows| {
            let worst = rows
                .iter()
                .filter(|s| s.input_strong > 0.0)
                .map(|s| s.norm_strong / s.input_strong)
                .fold(0.0, f64::max);
            (rows[0].u.clone(), worst)
        })
        .collect();
    let samples: Vec<ScanSample> = per_u_samples.into_iter().flatten().collect();
    let triples: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.input_strong, s.input_weak, s.norm_strong))
        .collect();
    let (a, b) = fit_uniform_bound(&triples);
    Ok(UniformBoundScan {
        z,
        a,
        b,
        samples,
        per_u,
    })
}

/// `‖A‖_max`.
pub fn max_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `A·f` for a plain matrix; re-exported for convenience.
pub fn apply(a: &CMatrix, f: &GridFunction) -> GridFunction {
    apply_matrix(a, f)
}
