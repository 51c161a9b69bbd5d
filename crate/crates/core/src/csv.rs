//! Fixed-format float rendering shared by every CSV writer.

/// `v` in scientific notation with `significant` significant digits.
/// Negative zero is rendered as zero so output is byte-stable.
pub fn fmt_float(v: f64, significant: usize) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{:.*e}", significant.max(1) - 1, v)
}
