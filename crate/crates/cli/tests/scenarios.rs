use std::fs;
use std::process::Command;

use cfnet::quantum::Cavity;
use cfnet_cli::{parse_config_str, recipe, run, write_outputs, Experiment, Figure, UnitMode};

const KSWEEP: &str = r#"
experiment = "g2-ksweep"

[params]
gamma = 2.0
gamma_f = 2.5
kappa = 1.0
chi = 10.0
delta_s = 50.0
epsilon = 0.1

[grids]
k = [0.9, 1.0, 1.1]

[truncation]
dims = [3, 3]
escalate = false
"#;

#[test]
fn reproduce_fig5_has_both_detunings() {
    let s = parse_config_str("reproduce = \"fig5\"\n", "x").unwrap();
    assert_eq!(s.experiment, Experiment::G2Ksweep);
    assert_eq!(s.grids.delta_s, Some(vec![50.0, 10.0]));
    assert_eq!(s.cavities, vec![Cavity::A, Cavity::C]);
    assert_eq!(s.params.epsilon, 0.1 * s.params.kappa);
}

#[test]
fn reproduce_rejects_extra_keys() {
    let err = parse_config_str("reproduce = \"fig5\"\ncavity = \"a\"\n", "x").unwrap_err();
    assert!(format!("{err:#}").contains("cavity"), "{err:#}");
}

#[test]
fn negative_kappa_names_the_field() {
    let text = KSWEEP.replace("kappa = 1.0", "kappa = -1.0");
    let err = parse_config_str(&text, "x").unwrap_err();
    assert!(format!("{err:#}").contains("kappa"), "{err:#}");
}

#[test]
fn malformed_configs_are_rejected() {
    let cases = [
        (KSWEEP.replace("gamma = 2.0\n", ""), "gamma"),
        (KSWEEP.replace("chi = 10.0", "chi = \"ten\""), "chi"),
        (KSWEEP.replace("g2-ksweep", "g3-ksweep"), "g3-ksweep"),
        (KSWEEP.replace("epsilon = 0.1", "epsilon = 0.1\nkerr = 3.0"), "kerr"),
        (KSWEEP.replace("k = [0.9, 1.0, 1.1]", "k = []"), "grids.k"),
        (KSWEEP.replace("k = [0.9, 1.0, 1.1]", "epsilon = [0.1]"), "grids.k"),
        (KSWEEP.replace("epsilon = 0.1\n", ""), "epsilon"),
    ];
    for (text, needle) in cases {
        let err = format!("{:#}", parse_config_str(&text, "x").unwrap_err());
        assert!(err.contains(needle), "expected `{needle}` in: {err}");
    }
}

#[test]
fn qubit_block_derives_chi_into_the_manifest() {
    let text = KSWEEP.replace("chi = 10.0\n", "").replace("[grids]", "[qubit]\ng = 2000.0\nOmega = 2000.0\ndelta_qT = 20000.0\n\n[grids]");
    let s = parse_config_str(&text, "qubit").unwrap();
    assert!((s.params.chi - 10.0).abs() < 1e-12);
    assert!(s.kerr.is_some());
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &s, &Default::default(), false).unwrap();
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("chi = 10.0 (from the qubit block)"), "{manifest}");
    assert!(manifest.contains("delta_qT 20000.0"));

    let both = text.replace("delta_s = 50.0", "delta_s = 50.0\nchi = 1.0");
    assert!(parse_config_str(&both, "x").is_err());
}

#[test]
fn runs_are_byte_identical_and_hashed() {
    let s = parse_config_str(KSWEEP, "ksweep").unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = run(&s);
        assert_eq!(out.exit_code(), 0);
        write_outputs(d.path(), &s, &out, true).unwrap();
    }
    for f in ["ksweep.csv", "ksweep.svg", "manifest.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.path().join("ksweep.csv")).unwrap();
    let manifest = fs::read_to_string(a.path().join("manifest.txt")).unwrap();
    let mut lines = csv.lines().skip_while(|l| l.starts_with('#'));
    let header = lines.next().unwrap();
    assert!(header.starts_with("K,g2_numeric,g2_analytic,"));
    assert!(header.ends_with(",params_hash"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let hash = r.rsplit(',').next().unwrap();
        assert_eq!(hash.len(), 16);
        assert!(manifest.contains(&format!("{hash} gamma=2.0;")), "{hash}");
    }
}

#[test]
fn failed_points_are_reported_and_the_rest_written() {
    let text = KSWEEP.replace("g2-ksweep", "g2-drive-sweep").replace("k = [0.9, 1.0, 1.1]", "epsilon = [0.0, 0.1]");
    let s = parse_config_str(&text, "drive").unwrap();
    let out = run(&s);
    assert_eq!(out.exit_code(), 2);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].at, "0.0");
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &s, &out, false).unwrap();
    let csv = fs::read_to_string(dir.path().join("drive.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("drive at 0.0 ["), "{manifest}");
}

#[test]
fn angular_mode_scales_annotated_fields_only() {
    let tau = std::f64::consts::TAU;
    let fig3 = recipe(Figure::Fig3).with_unit_mode(UnitMode::Angular);
    assert!((fig3.params.kappa - 3.0 * tau).abs() < 1e-12);
    assert!((fig3.params.chi - 10.0 * tau).abs() < 1e-12);
    let fig4 = recipe(Figure::Fig4).with_unit_mode(UnitMode::Angular).with_unit_mode(UnitMode::Angular);
    assert!((fig4.params.gamma - 2.0 * tau).abs() < 1e-12);
    assert_eq!(fig4.params.kappa, 1.0);
    assert_eq!(fig4.grids.delta_s, Some(vec![50.0]));
}

#[test]
fn reproduce_fig3_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cfnet"))
        .args(["reproduce", "fig3", "--plot", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "epsilon,root_index,C0_sq,A0_sq,stable,params_hash");
    assert!(csv.contains("# three_root_window = epsilon in ["));
    assert!(dir.path().join("fig3.svg").exists());
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, KSWEEP.replace("kappa = 1.0", "kappa = -2.0")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cfnet")).arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}
