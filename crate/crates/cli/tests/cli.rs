use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const REFERENCE: &str = r#"
[map]
family = "sine"
harmonics = [1]
box_lower = [-0.05]
box_upper = [0.05]

[grid]
n = 32

[holder]
alpha = 0.6
beta = 0.1

[ly]
n_max = 3
"#;

const DOUBLING: &str = r#"
[map]
family = "linear"
degree = 2
box_lower = [-0.1]
box_upper = [0.1]

[weight]
kind = "constant"
value = 0.5

[grid]
n = 32

[ly]
n_max = 4
"#;

struct Run {
    dir: TempDir,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exit code")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

fn run(command: &str, config: &str) -> Run {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("experiment.toml");
    fs::write(&path, config).unwrap();
    let output = run_at(command, &path, &dir.path().join("out"));
    Run { dir, output }
}

fn run_at(command: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circle-transfer"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

/// Data rows of a CSV, without header and hash line, split on commas.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

fn with_contour(base: &str, section: &str) -> String {
    format!("{base}\n[contour]\n{section}\n")
}

#[test]
fn spectrum_leads_with_unit_modulus() {
    let r = run("spectrum", REFERENCE);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let spectrum = rows(&r.read("spectrum.csv"));
    assert!((num(&spectrum[0][3]) - 1.0).abs() < 1e-10);
    for name in ["spectrum.csv", "lead_eigenfunction.csv", "reliability.csv"] {
        let text = r.read(name);
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("# config-hash: "), "{name}: {last}");
        assert_eq!(last.len(), "# config-hash: ".len() + 64);
    }
    let reliability = rows(&r.read("reliability.csv"));
    assert_eq!(reliability[0][6], "true");
}

#[test]
fn output_is_deterministic() {
    let a = run("spectrum", REFERENCE);
    let b = run("spectrum", REFERENCE);
    for name in ["spectrum.csv", "lead_eigenfunction.csv", "reliability.csv"] {
        assert_eq!(a.read(name), b.read(name), "{name}");
    }
}

#[test]
fn config_hash_tracks_the_file_contents() {
    let a = run("ly", REFERENCE);
    let b = run("ly", &format!("{REFERENCE}\n# comment\n"));
    let hash = |r: &Run| r.read("ly.csv").lines().last().unwrap().to_owned();
    assert_ne!(hash(&a), hash(&b));
}

#[test]
fn non_expanding_box_is_a_config_error() {
    let config = REFERENCE.replace("[-0.05]", "[-0.5]").replace("[0.05]", "[0.5]");
    let r = run("spectrum", &config);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("expansion"), "{}", r.stderr());
}

#[test]
fn unknown_key_is_a_config_error() {
    let r = run("spectrum", &REFERENCE.replace("n = 32", "n = 32\nresolution = 4"));
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("resolution"), "{}", r.stderr());
}

#[test]
fn misordered_exponents_are_a_config_error() {
    let r = run("ly", &REFERENCE.replace("alpha = 0.6", "alpha = 0.05"));
    assert_eq!(r.code(), 2);
}

#[test]
fn small_refinement_grid_is_a_config_error() {
    let r = run("spectrum", &REFERENCE.replace("n = 32", "n = 32\nn_refine = 40"));
    assert_eq!(r.code(), 2);
}

#[test]
fn non_power_of_two_grid_warns() {
    let r = run("spectrum", &REFERENCE.replace("n = 32", "n = 48"));
    assert_eq!(r.code(), 0, "{}", r.stderr());
    assert!(r.stderr().contains("power of two"), "{}", r.stderr());
}

#[test]
fn response_errors_shrink_with_step() {
    let r = run("response", REFERENCE);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let table = rows(&r.read("du_resolvent_check.csv"));
    let errors: Vec<f64> = table.iter().take(3).map(|row| num(&row[1])).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let projector = rows(&r.read("du_projector_check.csv"));
    let product = projector.iter().find(|row| row[0] == "product_rule").unwrap();
    assert!(num(&product[1]) < 1e-7);
}

#[test]
fn parameter_independent_family_has_zero_response() {
    let r = run("response", DOUBLING);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let table = rows(&r.read("du_resolvent_check.csv"));
    assert!(table.iter().take(3).all(|row| num(&row[1]) == 0.0));
    let scan = run("holder-scan", DOUBLING);
    assert_eq!(scan.code(), 0, "{}", scan.stderr());
    let norms = rows(&scan.read("scan.csv"));
    assert!(norms.iter().filter(|row| row[0] != "fitted_slope").all(|row| num(&row[1]) == 0.0));
}

#[test]
fn contour_through_the_spectrum_is_a_numerical_error() {
    let config = with_contour(DOUBLING, "center_re = 1.0\nradius = 1.0");
    let r = run("projector", &config);
    assert_eq!(r.code(), 3);
    assert!(r.stderr().starts_with("ContourTooClose"), "{}", r.stderr());
}

#[test]
fn ly_contraction_matches_closed_form() {
    let config = DOUBLING.replace("kind = \"constant\"\nvalue = 0.5", "kind = \"one_over_Tprime\"");
    let r = run("ly", &config);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let table = rows(&r.read("ly.csv"));
    assert_eq!(table.len(), 4);
    for row in table {
        let n = num(&row[0]);
        let expected = 2f64.powf(-n * 1.6);
        assert!((num(&row[1]) - expected).abs() < 1e-12 * expected.max(1.0), "{row:?}");
    }
}

#[test]
fn holder_scan_reaches_target_exponent() {
    let r = run("holder-scan", REFERENCE);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    for name in ["scan.csv", "projector_scan.csv"] {
        let text = r.read(name);
        let footer = text.lines().find(|l| l.starts_with("fitted_slope")).unwrap();
        let fields: Vec<&str> = footer.split(',').collect();
        let (slope, gamma) = (num(fields[1]), num(fields[3]));
        assert!(slope >= gamma - 0.1, "{name}: {footer}");
    }
}

#[test]
fn doubling_projector_is_idempotent() {
    let r = run("projector", DOUBLING);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let report = rows(&r.read("projector_report.csv"));
    let idempotence = report.iter().find(|row| row[0] == "idempotence").unwrap();
    assert!(num(&idempotence[1]) < 1e-8);
    let trace = report.iter().find(|row| row[0] == "trace_re").unwrap();
    assert!((num(&trace[1]) - 1.0).abs() < 1e-10);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = run_at("ly", &dir.path().join("absent.toml"), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}
