use std::fmt;
use std::fs;
use std::io;
use std::path::PathBuf;

use circle_transfer::csv::fmt_float;
use circle_transfer::operator::{
    assemble_transfer, default_probe_suite, ly_constants, write_ly_csv, write_matrix_csv, LyOptions,
};
use circle_transfer::response::{du_projector_check, du_resolvent_check, holder_exponent_scan, projector_holder_scan};
use circle_transfer::spectral::{
    certify_nodes, eigendecompose, eigenvalues, max_entry, reliable_spectrum, spectral_projector,
    ContourSpec,
};
use circle_transfer::{Complex64, Error};

use crate::config::{ConfigError, Experiment};

/// Largest finite-difference disagreement tolerated by `response`.
pub const PROJECTOR_FD_LIMIT: f64 = 1e-6;
/// Largest product-rule residual tolerated by `response`.
pub const PRODUCT_RULE_LIMIT: f64 = 1e-7;
/// Node ceiling for contour certification.
const MAX_NODES: usize = 1024;
/// Margin added to the essential-radius estimate when filtering the spectrum.
const RELIABILITY_MARGIN: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(Error),
    Io(PathBuf, io::Error),
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Mismatch(_) => 3,
            CliError::Io(..) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "InvalidConfig: {e}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "IoError: {}: {e}", path.display()),
            CliError::Mismatch(msg) => write!(f, "ResponseMismatch: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Writes CSV files into one directory, each stamped with the config hash.
pub struct Sink {
    dir: PathBuf,
    hash: String,
    precision: usize,
    quiet: bool,
}

impl Sink {
    pub fn new(dir: PathBuf, exp: &Experiment, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
        Ok(Self {
            dir,
            hash: exp.hash.clone(),
            precision: exp.precision,
            quiet,
        })
    }

    fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>, usize) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        body(&mut buf, self.precision)
            .and_then(|_| io::Write::write_all(&mut buf, format!("# config-hash: {}\n", self.hash).as_bytes()))
            .map_err(|e| CliError::Io(path.clone(), e))?;
        fs::write(&path, buf).map_err(|e| CliError::Io(path.clone(), e))?;
        self.note(&format!("wrote {}", path.display()));
        Ok(())
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

fn ly_reports(exp: &Experiment) -> Result<Vec<circle_transfer::operator::LyReport>, Error> {
    let options = LyOptions {
        sample_grid: exp.ly.sample_grid,
        ..LyOptions::default()
    };
    (1..=exp.ly.n_max)
        .map(|n| ly_constants(exp.map.as_ref(), exp.weight.as_ref(), &exp.u0, n, exp.alpha, options))
        .collect()
}

/// The configured contour, or a circle around the lead eigenvalue at `u0`;
/// certified against the node count when requested.
fn contour(exp: &Experiment, sink: &Sink) -> Result<ContourSpec, Error> {
    let l = assemble_transfer(exp.map.as_ref(), exp.weight.as_ref(), &exp.u0, exp.n, 1)?;
    let spectrum = eigenvalues(&l.matrix)?;
    let cfg = &exp.contour;
    let start = match (cfg.center_re, cfg.radius) {
        (Some(re), Some(radius)) => {
            ContourSpec::new(Complex64::new(re, cfg.center_im.unwrap_or(0.0)), radius, cfg.nodes)?
        }
        _ => {
            let around = ContourSpec::around(&spectrum, 0, cfg.nodes)?;
            let center = match cfg.center_re {
                Some(re) => Complex64::new(re, cfg.center_im.unwrap_or(0.0)),
                None => around.center,
            };
            ContourSpec::new(center, cfg.radius.unwrap_or(around.radius), cfg.nodes)?
        }
    };
    let enclosed = start.check(&spectrum)?;
    let chosen = if cfg.certify {
        let (c, change) = certify_nodes(&l.matrix, &start, cfg.certify_tolerance, MAX_NODES)?;
        sink.note(&format!("contour certified at {} nodes (change {change:.3e})", c.nodes));
        c
    } else {
        start
    };
    sink.note(&format!(
        "contour: center {:.12}, radius {:.6e}, {} nodes, {enclosed} eigenvalue(s) enclosed",
        chosen.center, chosen.radius, chosen.nodes
    ));
    Ok(chosen)
}

pub fn spectrum(exp: &Experiment, sink: &Sink) -> Result<(), CliError> {
    let l = assemble_transfer(exp.map.as_ref(), exp.weight.as_ref(), &exp.u0, exp.n, 1)?;
    let data = eigendecompose(&l)?;
    sink.write("spectrum.csv", |w, p| data.write_csv(w, p))?;
    sink.write("lead_eigenfunction.csv", |w, p| data.lead_right.write_csv(w, p))?;
    let rho = ly_reports(exp)?
        .iter()
        .map(|r| r.ess_radius_estimate)
        .fold(f64::INFINITY, f64::min)
        + RELIABILITY_MARGIN;
    let reliable = reliable_spectrum(exp.map.as_ref(), exp.weight.as_ref(), &exp.u0, exp.n, exp.n_refine, rho)?;
    sink.write("reliability.csv", |w, p| reliable.write_csv(w, p))?;
    sink.note(&format!(
        "lead eigenvalue {:.12}, gap {:.6e}, {} eigenvalue(s) above {rho:.4}, max discrepancy {:.3e}",
        data.lead_value,
        data.gap,
        reliable.pairs.len(),
        reliable.max_discrepancy()
    ));
    Ok(())
}

pub fn response(exp: &Experiment, sink: &Sink) -> Result<(), CliError> {
    let (map, weight) = (exp.map.as_ref(), exp.weight.as_ref());
    let resolvent = du_resolvent_check(map, weight, &exp.u0, &exp.h, exp.lambda, exp.n, &exp.fd_steps)?;
    sink.write("du_resolvent_check.csv", |w, p| resolvent.write_csv(w, p))?;
    let c = contour(exp, sink)?;
    let projector = du_projector_check(map, weight, &exp.u0, &exp.h, &c, exp.n, &exp.fd_steps)?;
    sink.write("du_projector_check.csv", |w, p| projector.write_csv(w, p))?;
    let best_fd = projector.fd.errors.iter().copied().fold(f64::INFINITY, f64::min);
    sink.note(&format!(
        "resolvent derivative: slope {:.3}; projector derivative: best FD error {best_fd:.3e}, product rule {:.3e}",
        resolvent.slope, projector.product_rule
    ));
    if !(best_fd <= PROJECTOR_FD_LIMIT) || !(projector.product_rule <= PRODUCT_RULE_LIMIT) {
        return Err(CliError::Mismatch(format!(
            "projector derivative FD error {best_fd:e} (limit {PROJECTOR_FD_LIMIT:e}), product rule {:e} (limit {PRODUCT_RULE_LIMIT:e})",
            projector.product_rule
        )));
    }
    Ok(())
}

pub fn holder_scan(exp: &Experiment, sink: &Sink) -> Result<(), CliError> {
    let (map, weight) = (exp.map.as_ref(), exp.weight.as_ref());
    let probes = default_probe_suite(exp.n, exp.r_in)?;
    let scan = holder_exponent_scan(
        map, weight, &exp.u0, &exp.h, exp.lambda, exp.r_in, exp.r_out, &exp.offsets, &probes,
    )?;
    sink.write("scan.csv", |w, p| scan.write_csv(w, p))?;
    let c = contour(exp, sink)?;
    let pscan = projector_holder_scan(
        map, weight, &exp.u0, &exp.h, &c, &exp.offsets, exp.r_in, exp.r_out, &probes,
    )?;
    sink.write("projector_scan.csv", |w, p| pscan.write_csv(w, p))?;
    let show = |s: Option<f64>| s.map_or_else(|| "none (exact invariance)".to_string(), |v| format!("{v:.4}"));
    sink.note(&format!(
        "target exponent {:.4}; resolvent slope {}; projector slope {}",
        scan.gamma_target,
        show(scan.fitted_slope),
        show(pscan.fitted_slope)
    ));
    Ok(())
}

pub fn ly(exp: &Experiment, sink: &Sink) -> Result<(), CliError> {
    let reports = ly_reports(exp)?;
    sink.write("ly.csv", |w, p| write_ly_csv(&reports, w, p))?;
    if let Some(best) = reports.iter().min_by(|a, b| a.ess_radius_estimate.total_cmp(&b.ess_radius_estimate)) {
        sink.note(&format!(
            "smallest essential-radius estimate {:.6} at n = {}",
            best.ess_radius_estimate, best.n
        ));
    }
    Ok(())
}

pub fn projector(exp: &Experiment, sink: &Sink) -> Result<(), CliError> {
    let l = assemble_transfer(exp.map.as_ref(), exp.weight.as_ref(), &exp.u0, exp.n, 1)?;
    let c = contour(exp, sink)?;
    let p = spectral_projector(&l, &c)?;
    sink.write("projector.csv", |w, prec| write_matrix_csv(&p, w, prec))?;
    let idempotence = max_entry(&(&p * &p - &p));
    let commutator = max_entry(&(&l.matrix * &p - &p * &l.matrix));
    let trace: Complex64 = (0..p.nrows()).map(|i| p[(i, i)]).sum();
    sink.write("projector_report.csv", |w, prec| {
        report_rows(w, prec, &c, trace, idempotence, commutator)
    })?;
    sink.note(&format!(
        "projector: trace {trace:.12}, idempotence {idempotence:.3e}, commutator {commutator:.3e}"
    ));
    Ok(())
}

fn report_rows(
    w: &mut Vec<u8>,
    precision: usize,
    c: &ContourSpec,
    trace: Complex64,
    idempotence: f64,
    commutator: f64,
) -> io::Result<()> {
    use io::Write;
    writeln!(w, "quantity,value")?;
    let rows: [(&str, f64); 7] = [
        ("center_re", c.center.re),
        ("center_im", c.center.im),
        ("radius", c.radius),
        ("nodes", c.nodes as f64),
        ("trace_re", trace.re),
        ("idempotence", idempotence),
        ("commutator", commutator),
    ];
    for (name, v) in rows {
        writeln!(w, "{name},{}", fmt_float(v, precision))?;
    }
    Ok(())
}
