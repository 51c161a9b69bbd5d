//! Probe-based operator norms between discrete Hölder spaces.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::function_space::{weierstrass_test, GridFunction, HolderIndex};
use crate::CMatrix;

use super::apply_matrix;

/// Lower bound for `‖A‖_{C^{r_in} → C^{r_out}}`:
/// `max_f ‖A f‖_{r_out} / ‖f‖_{r_in}` over the probe suite.
pub fn operator_norm_holder(
    a: &CMatrix,
    r_in: HolderIndex,
    r_out: HolderIndex,
    probes: &[GridFunction],
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    let mut best = 0.0f64;
    for f in probes {
        let denom = f.cr_norm(r_in);
        if !(denom > 0.0) {
            return Err(Error::InvalidInput(
                "probe with vanishing input norm".into(),
            ));
        }
        best = best.max(apply_matrix(a, f).cr_norm(r_out) / denom);
    }
    Ok(best)
}

/// Constants, a few low Fourier modes, and Weierstrass sums of regularity
/// `r_in` in bases 2 and 3 (plus a phase-shifted copy).
pub fn default_probe_suite(n: usize, r_in: HolderIndex) -> Result<Vec<GridFunction>> {
    let mut probes = vec![GridFunction::constant(n, 1.0)?];
    for k in 1..=3u32 {
        if (k as usize) * 2 >= n {
            break;
        }
        let w = 2.0 * PI * k as f64;
        probes.push(GridFunction::sample_real(n, |x| (w * x).cos())?);
        probes.push(GridFunction::sample_real(n, |x| (w * x).sin())?);
    }
    let r = r_in.r();
    probes.push(weierstrass_test(r, 2, n)?);
    probes.push(weierstrass_test(r, 3, n)?);
    let base = weierstrass_test(r, 2, n)?;
    let shifted = base.interpolant();
    probes.push(GridFunction::sample(n, |x| shifted.eval(x + 0.1))?);
    Ok(probes)
}
