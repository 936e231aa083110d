use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn fieldwork(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldwork")).args(args).output().expect("binary runs")
}

fn run_to(command: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, cfg.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fieldwork(&args)
}

/// Data rows (after the header) as parsed numbers.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn empty_config_is_a_parse_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.conf");
    fs::write(&cfg, "").unwrap();
    let out = dir.path().join("out.csv");
    let r = run_to("pdf", &cfg, &out, &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());
}

#[test]
fn unknown_key_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    let text = fs::read_to_string(config("reference_thermal.conf")).unwrap() + "colour = blue\n";
    fs::write(&cfg, &text).unwrap();
    let out = dir.path().join("out.csv");
    let r = run_to("moments", &cfg, &out, &[]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("colour"), "{err}");
    assert!(err.contains(&format!("line {}", text.lines().count())), "{err}");
    assert!(!out.exists());
}

#[test]
fn vacuum_density_is_zero_below_zero_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pdf.csv");
    let r = run_to("pdf", &config("reference_vacuum.conf"), &out, &[]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# atom_weight = ")));
    assert_eq!(csv.lines().find(|l| !l.starts_with('#')), Some("W[energy],density[1/energy]"));
    let data = rows(&csv);
    let negative: Vec<&Vec<f64>> = data.iter().filter(|r| r[0] < 0.0).collect();
    assert!(negative.len() > 100);
    // Zero at the resolution of the inversion: negative values below the
    // clamp floor are already set to 0, positive ones of the same size remain.
    let peak = data.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(peak > 0.0);
    assert!(negative.iter().all(|r| r[1].abs() <= 1e-6 * peak));
    assert!(negative.iter().all(|r| r[1] >= 0.0));
}

#[test]
fn jarzynski_deviation_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("jz.csv");
    let r = run_to("check-jarzynski", &config("reference_thermal.conf"), &out, &[]);
    assert!(r.status.success());
    let data = rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(data.len(), 1);
    assert_eq!(data[0][0], 1.0);
    assert!(data[0][3] <= 1e-8);
}

#[test]
fn jarzynski_on_the_vacuum_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("jz.csv");
    let r = run_to("check-jarzynski", &config("reference_vacuum.conf"), &out, &[]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("finite β"));
    assert!(!out.exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let r = run_to("charfn", &config("reference_thermal.conf"), out, &["--set", "grids.mu_count=21"]);
        assert!(r.status.success());
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);
    let csv = String::from_utf8(a).unwrap();
    assert!(!csv.contains('\r'));
    let data = rows(&csv);
    assert_eq!(data.len(), 21);
    assert_eq!(data[10], vec![0.0, 1.0, 0.0]);
}

#[test]
fn override_changes_the_scenario() {
    let r = fieldwork(&["moments", config("reference_thermal.conf").to_str().unwrap(), "--set", "field.beta=2"]);
    assert!(r.status.success());
    let csv = String::from_utf8(r.stdout).unwrap();
    assert!(csv.contains("beta=2"), "{csv}");
    let data = rows(&csv);
    assert_eq!(data.len(), 1);
    // ⟨e^{−βW}⟩ = 1
    assert!((data[0][3] - 1.0).abs() < 1e-8);
}

#[test]
fn delta_pdf_and_ramsey_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("delta.csv");
    let r = run_to("pdf", &config("reference_delta.conf"), &out, &[]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let atom: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("# atom_weight = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(atom > 0.99 && atom < 1.0);

    let out = dir.path().join("ramsey.csv");
    let r = run_to("ramsey", &config("reference_delta.conf"), &out, &["--set", "grids.mu_count=11"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let data = rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(data.len(), 11);
    assert!(data.iter().all(|r| r[5] < 1e-4));
}
