//! Experiment configuration: parsing, defaults and validation.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use circle_transfer::dynamics::{
    expansion_margin, ConstantWeight, InverseDerivativeWeight, LinearMap, MapFamily, ParameterBox,
    ParameterPoint, SineFamily, TrigWeight, WeightFamily,
};
use circle_transfer::function_space::HolderIndex;
use circle_transfer::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Configuration problems; the CLI exits with status 2 on these.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub map: MapSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub holder: HolderSection,
    #[serde(default)]
    pub resolvent: ResolventSection,
    #[serde(default)]
    pub contour: ContourSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub ly: LySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    /// `"sine"` (`d·x + Σ u_i sin 2πk_i x`) or `"linear"` (`d·x`).
    pub family: String,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Harmonics `k_i` of the sine family.
    #[serde(default = "default_harmonics")]
    pub harmonics: Vec<u32>,
    /// Parameter dimension of the linear family.
    #[serde(default = "default_one")]
    pub param_dim: usize,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    /// `"constant"`, `"one_over_Tprime"` or `"trig"`.
    pub kind: String,
    pub value: Option<f64>,
    pub constant: Option<f64>,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl Default for WeightSection {
    fn default() -> Self {
        Self {
            kind: "one_over_Tprime".into(),
            value: None,
            constant: None,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub n_refine: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 64, n_refine: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSection {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for HolderSection {
    fn default() -> Self {
        Self { alpha: 0.6, beta: 0.1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    pub lambda_re: f64,
    #[serde(default)]
    pub lambda_im: f64,
}

impl Default for ResolventSection {
    fn default() -> Self {
        Self {
            lambda_re: 2.0,
            lambda_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSection {
    /// Defaults to the lead eigenvalue at the base parameter.
    pub center_re: Option<f64>,
    pub center_im: Option<f64>,
    /// Defaults to half the distance to the nearest other eigenvalue.
    pub radius: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Double the node count until the projector changes by at most
    /// `certify_tolerance`.
    #[serde(default = "default_true")]
    pub certify: bool,
    #[serde(default = "default_certify_tolerance")]
    pub certify_tolerance: f64,
}

impl Default for ContourSection {
    fn default() -> Self {
        Self {
            center_re: None,
            center_im: None,
            radius: None,
            nodes: default_nodes(),
            certify: true,
            certify_tolerance: default_certify_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Base parameter; defaults to the origin.
    pub u0: Option<Vec<f64>>,
    /// Direction; defaults to the first unit vector.
    pub h: Option<Vec<f64>>,
    #[serde(default = "default_offsets")]
    pub offsets: Vec<f64>,
    #[serde(default = "default_fd_steps")]
    pub fd_steps: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            u0: None,
            h: None,
            offsets: default_offsets(),
            fd_steps: default_fd_steps(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LySection {
    pub n_max: usize,
    #[serde(default = "default_sample_grid")]
    pub sample_grid: usize,
}

impl Default for LySection {
    fn default() -> Self {
        Self {
            n_max: 5,
            sample_grid: default_sample_grid(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            precision: default_precision(),
        }
    }
}

fn default_degree() -> usize {
    2
}
fn default_harmonics() -> Vec<u32> {
    vec![1]
}
fn default_one() -> usize {
    1
}
fn default_nodes() -> usize {
    32
}
fn default_true() -> bool {
    true
}
fn default_certify_tolerance() -> f64 {
    1e-12
}
fn default_offsets() -> Vec<f64> {
    (0..6).map(|k| 1e-2 * 0.5f64.powi(k)).collect()
}
fn default_fd_steps() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}
fn default_sample_grid() -> usize {
    128
}
fn default_precision() -> usize {
    17
}

/// A validated experiment.
pub struct Experiment {
    pub map: Arc<dyn MapFamily>,
    pub weight: Arc<dyn WeightFamily>,
    pub u0: ParameterPoint,
    pub h: Vec<f64>,
    pub n: usize,
    pub n_refine: usize,
    pub r_in: HolderIndex,
    pub r_out: HolderIndex,
    pub alpha: f64,
    pub lambda: Complex64,
    pub contour: ContourSection,
    pub offsets: Vec<f64>,
    pub fd_steps: Vec<f64>,
    pub ly: LySection,
    pub directory: Option<PathBuf>,
    pub precision: usize,
    /// SHA-256 of the configuration text.
    pub hash: String,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        let hash = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Self::validate(raw, hash)
    }

    fn validate(raw: RawConfig, hash: String) -> Result<Self, ConfigError> {
        let mut warnings = Vec::new();
        let map: Arc<dyn MapFamily> = match raw.map.family.as_str() {
            "sine" => Arc::new(
                SineFamily::new(raw.map.degree, raw.map.harmonics.clone())
                    .map_err(|e| invalid(format!("map: {e}")))?,
            ),
            "linear" => Arc::new(
                LinearMap::new(raw.map.degree, raw.map.param_dim)
                    .map_err(|e| invalid(format!("map: {e}")))?,
            ),
            other => return Err(invalid(format!("map.family: unknown family {other:?}"))),
        };
        let u_box = ParameterBox::new(raw.map.box_lower.clone(), raw.map.box_upper.clone())
            .map_err(|e| invalid(format!("map: {e}")))?;
        if u_box.dim() != map.param_dim() {
            return Err(invalid(format!(
                "map: box has dimension {}, family expects {}",
                u_box.dim(),
                map.param_dim()
            )));
        }
        let margin = expansion_margin(map.as_ref(), &u_box, 64);
        if !(margin > 0.0) {
            return Err(invalid(format!(
                "map: not uniformly expanding on the parameter box (expansion margin {margin:.3e})"
            )));
        }

        let weight: Arc<dyn WeightFamily> = match raw.weight.kind.as_str() {
            "constant" => Arc::new(ConstantWeight(raw.weight.value.ok_or_else(|| {
                invalid("weight.value is required for kind = \"constant\"")
            })?)),
            "one_over_Tprime" => Arc::new(InverseDerivativeWeight::new(map.clone())),
            "trig" => Arc::new(
                TrigWeight::new(
                    raw.weight.constant.ok_or_else(|| invalid("weight.constant is required for kind = \"trig\""))?,
                    raw.weight.cos.clone(),
                    raw.weight.sin.clone(),
                )
                .map_err(|e| invalid(format!("weight: {e}")))?,
            ),
            other => return Err(invalid(format!("weight.kind: unknown kind {other:?}"))),
        };

        let n = raw.grid.n;
        if n < 8 {
            return Err(invalid(format!("grid.n must be at least 8, got {n}")));
        }
        if !n.is_power_of_two() {
            warnings.push(format!("warning: grid.n = {n} is not a power of two"));
        }
        let n_refine = raw.grid.n_refine.unwrap_or(2 * n);
        if n_refine < 2 * n {
            return Err(invalid(format!(
                "grid.n_refine must be at least 2·n = {}, got {n_refine}",
                2 * n
            )));
        }

        let HolderSection { alpha, beta } = raw.holder;
        if !(0.0 <= beta && beta < alpha && alpha < 1.0) {
            return Err(invalid(format!(
                "holder: need 0 <= beta < alpha < 1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        let r_in = HolderIndex::new(1.0 + alpha).map_err(|e| invalid(format!("holder: {e}")))?;
        let r_out = HolderIndex::new(1.0 + beta).map_err(|e| invalid(format!("holder: {e}")))?;

        let lambda = Complex64::new(raw.resolvent.lambda_re, raw.resolvent.lambda_im);
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(invalid("resolvent: lambda must be finite"));
        }

        let contour = raw.contour;
        if contour.nodes < 8 {
            return Err(invalid(format!("contour.nodes must be at least 8, got {}", contour.nodes)));
        }
        if let Some(r) = contour.radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(invalid(format!("contour.radius must be positive, got {r}")));
            }
        }
        if !(contour.certify_tolerance > 0.0) {
            return Err(invalid("contour.certify_tolerance must be positive"));
        }

        let dim = map.param_dim();
        let u0 = ParameterPoint::new(raw.scan.u0.clone().unwrap_or_else(|| vec![0.0; dim]))
            .map_err(|e| invalid(format!("scan.u0: {e}")))?;
        let h = raw.scan.h.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; dim];
            e[0] = 1.0;
            e
        });
        if u0.dim() != dim || h.len() != dim {
            return Err(invalid(format!("scan: u0 and h must have dimension {dim}")));
        }
        if h.iter().all(|v| *v == 0.0) || h.iter().any(|v| !v.is_finite()) {
            return Err(invalid("scan.h must be a finite nonzero direction"));
        }
        let offsets = raw.scan.offsets.clone();
        if offsets.len() < 3 || offsets.iter().any(|t| !(*t > 0.0)) || offsets.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("scan.offsets: need at least 3 strictly decreasing positive values"));
        }
        let fd_steps = raw.scan.fd_steps.clone();
        if fd_steps.is_empty() || fd_steps.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("scan.fd_steps: need positive steps"));
        }
        let reach = offsets[0].max(fd_steps.iter().copied().fold(0.0, f64::max));
        for p in [u0.clone(), u0.offset(&h, reach), u0.offset(&h, -reach)] {
            if !u_box.contains(&p) {
                return Err(invalid(format!(
                    "scan: parameter {:?} lies outside the box",
                    p.coords()
                )));
            }
        }

        if raw.ly.n_max == 0 || raw.ly.sample_grid < 2 {
            return Err(invalid("ly: need n_max >= 1 and sample_grid >= 2"));
        }
        let precision = raw.output.precision;
        if !(1..=17).contains(&precision) {
            return Err(invalid(format!("output.precision must be in 1..=17, got {precision}")));
        }

        Ok(Self {
            map,
            weight,
            u0,
            h,
            n,
            n_refine,
            r_in,
            r_out,
            alpha,
            lambda,
            contour,
            offsets,
            fd_steps,
            ly: raw.ly,
            directory: raw.output.directory,
            precision,
            hash,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[map]
family = "sine"
box_lower = [-0.05]
box_upper = [0.05]
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let e = Experiment::parse(MINIMAL).unwrap();
        assert_eq!(e.n, 64);
        assert_eq!(e.n_refine, 128);
        assert_eq!(e.precision, 17);
        assert_eq!(e.hash.len(), 64);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[holder]\nalpha = 0.6\nbeta = 0.1\ngamma = 0.5\n");
        assert!(Experiment::parse(&text).err().unwrap().0.contains("gamma"));
    }

    #[test]
    fn exponent_order_is_checked() {
        let text = format!("{MINIMAL}\n[holder]\nalpha = 0.2\nbeta = 0.4\n");
        assert!(Experiment::parse(&text).is_err());
    }

    #[test]
    fn non_expanding_box_is_rejected() {
        let text = "[map]\nfamily = \"sine\"\nbox_lower = [-0.5]\nbox_upper = [0.5]\n";
        assert!(Experiment::parse(text).err().unwrap().0.contains("expansion"));
    }
}
