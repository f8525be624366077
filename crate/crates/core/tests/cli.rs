use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circpatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_exits_zero() {
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_and_validation_errors_exit_one() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["spectrum", "--radius", "16e-3"]).status.code(), Some(1));
    assert_eq!(bin(&["spectrum", "--radius", "-1", "--eps-eff", "4"]).status.code(), Some(1));
    assert_eq!(bin(&["coupling", "--fp1", "2.7e9", "--fp2", "2.5e9"]).status.code(), Some(1));
    assert_eq!(bin(&["design", "--config", "/nonexistent/file.conf"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "radius_m = 16e-3\nfrequency = 2e9\n").unwrap();
    let o = bin(&["design", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `frequency`"));
}

#[test]
fn flags_override_config() {
    let conf = preset("single_band.conf");
    let o = bin(&["design", "--config", conf.to_str().unwrap(), "--radius", "20e-3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("radius: 20.0000 mm"));
}

#[test]
fn design_dual_from_flags() {
    let o = bin(&["design", "--kind", "dual", "--f-target", "2.77e9", "--radius", "16e-3"]);
    let text = stdout(&o);
    assert!(text.contains("output_angle_deg: 45.000000"), "{text}");
    assert!(text.contains("via_sites: 5"));
    assert!(text.contains("slot_sites: 4"));
    assert!(text.contains("passband_2: 6.3205"));
}

#[test]
fn fieldmap_and_nulls_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tm21.csv");
    let o = bin(&[
        "fieldmap", "--radius", "16e-3", "--eps-eff", "3.93", "--mode", "2,1", "--n-rho", "5", "--n-phi", "8", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("rho_m,phi_rad,Ez_re"));
    assert_eq!(text.lines().count(), 1 + 5 * 8);

    let o = bin(&["nulls", "--radius", "16e-3", "--eps-eff", "3.93", "--mode", "2,1"]);
    let angles: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(angles, vec![45.0, 135.0, 225.0, 315.0]);

    let o = bin(&["nulls", "--radius", "16e-3", "--eps-eff", "3.93", "--mode", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sparams_writes_touchstone_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let conf = preset("single_band.conf");
    let o = bin(&[
        "sparams", "--config", conf.to_str().unwrap(), "--points", "11", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s2p = fs::read_to_string(dir.path().join("sparams.s2p")).unwrap();
    assert_eq!(s2p.lines().next(), Some("# Hz S RI R 50"));
    assert_eq!(s2p.lines().filter(|l| !l.starts_with(['#', '!'])).count(), 11);
    let csv = fs::read_to_string(dir.path().join("sparams.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("freq_hz,sdd11_re,sdd11_im,sdd21_re,sdd21_im,scc21_re,scc21_im"));
    // no stray temporaries left behind
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn report_writes_dossier() {
    let dir = tempfile::tempdir().unwrap();
    let conf = preset("dual_band.conf");
    let o = bin(&["report", "--config", conf.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("generated: "));
    assert!(report.contains("phi2: fabricated 45.0 deg, computed 45.000 deg"));
    let json = fs::read_to_string(dir.path().join("design.json")).unwrap();
    assert!(json.contains("\"kind\": \"dual\""));
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 5);
}

#[test]
fn corrupted_design_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("design.json");
    fs::write(&bad, "{\"spec\": {\"radius_m\": -1}}").unwrap();
    let o = bin(&["sparams", "--design", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
