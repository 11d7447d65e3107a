use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cheshire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheshire"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Vec<(String, String)> {
    let text = fs::read_to_string(dir.join("photon_summary.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# scenario=photon-cat"));
    assert_eq!(lines.next(), Some("quantity,value"));
    lines
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn value(rows: &[(String, String)], key: &str) -> f64 {
    rows.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .1
        .parse()
        .unwrap()
}

/// Parses `neutron_<probe>.csv` into columns `p_d1, p_d2, p_absorbed, p_rejected`.
fn sweep(dir: &Path, probe: &str) -> Vec<[f64; 4]> {
    let text = fs::read_to_string(dir.join(format!("neutron_{probe}.csv"))).unwrap();
    text.lines()
        .skip(2)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            [f[1], f[2], f[3], f[4]]
        })
        .collect()
}

#[test]
fn photon_defaults_write_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cheshire(&["photon-cat", "--out", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "photon_arm_i.csv",
        "photon_arm_i.pgm",
        "photon_arm_ii.csv",
        "photon_arm_ii.pgm",
        "photon_density.csv",
        "photon_density.pgm",
        "photon_summary.csv",
        "weak_values.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let rows = summary(dir.path());
    assert!((value(&rows, "centroid_x") - 0.1).abs() < 3e-3);
    assert!((value(&rows, "centroid_y") - 0.1).abs() < 2e-3);
    assert!(value(&rows, "mass_x_positive") > value(&rows, "mass_x_negative"));

    let pgm = fs::read(dir.path().join("photon_density.pgm")).unwrap();
    let header = b"P5\n512 512\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 512 * 512);
}

#[test]
fn zero_displacement_leaves_pointers_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cheshire(&[
        "photon-cat",
        "--out",
        d,
        "--dx",
        "0",
        "--dy",
        "0",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let rows = summary(dir.path());
    assert!(value(&rows, "centroid_x").abs() < 1e-12);
    assert!(value(&rows, "centroid_y").abs() < 1e-12);
    assert!((value(&rows, "postselection_probability") - 0.25).abs() < 1e-12);
    assert!(!dir.path().join("photon_density.pgm").exists());
}

#[test]
fn strong_coupling_reports_lobe_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cheshire(&[
        "photon-cat",
        "--out",
        d,
        "--dx",
        "5",
        "--dy",
        "5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let rows = summary(dir.path());
    assert!((value(&rows, "lobe_weight_arm_ii") - 2.0 / 3.0).abs() < 1e-3);
    assert!((value(&rows, "lobe_weight_arm_i_plus") - 1.0 / 6.0).abs() < 1e-3);
    assert!((value(&rows, "lobe_weight_arm_i_minus") - 1.0 / 6.0).abs() < 1e-3);
    assert!((value(&rows, "pointer1_purity") - 5.0 / 9.0).abs() < 1e-6);
}

#[test]
fn neutron_probes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cheshire(&["neutron-cat", "--out", d, "--t", "0.5", "--alpha", "0.2"]);
    assert!(out.status.success());

    for row in sweep(dir.path(), "baseline") {
        assert!((row[0] - 0.25).abs() < 1e-12);
        assert!((row[1] - 0.5).abs() < 1e-12);
    }
    for row in sweep(dir.path(), "absorber_i") {
        assert!((row[0] - 0.25).abs() < 1e-12);
    }
    for row in sweep(dir.path(), "absorber_ii") {
        assert!((row[0] - 0.125).abs() < 1e-12);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    let vis = fs::read_to_string(dir.path().join("neutron_visibility.csv")).unwrap();
    let field_i: Vec<&str> = vis
        .lines()
        .find(|l| l.starts_with("field_i,"))
        .unwrap()
        .split(',')
        .collect();
    let v: f64 = field_i[1].parse().unwrap();
    let s = (0.1f64).sin();
    let expected = 2.0 * s / (1.0 + s * s);
    assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
    let field_ii: Vec<&str> = vis
        .lines()
        .find(|l| l.starts_with("field_ii,"))
        .unwrap()
        .split(',')
        .collect();
    assert!(field_ii[1].parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn neutron_counts_are_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let d = dir.path().to_str().unwrap();
        let out = cheshire(&["neutron-cat", "--out", d, "--samples", "500", "--seed", "7"]);
        assert!(out.status.success());
    }
    let ta = fs::read(a.path().join("neutron_field_i.csv")).unwrap();
    let tb = fs::read(b.path().join("neutron_field_i.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("n_d1,n_d2,n_absorbed,n_rejected"));
    for l in text.lines().skip(2) {
        let n: u64 = l
            .split(',')
            .skip(5)
            .map(|s| s.parse::<u64>().unwrap())
            .sum();
        assert_eq!(n, 500);
    }
}

#[test]
fn weak_values_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = cheshire(&["weak-values", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let file = fs::read_to_string(dir.path().join("weak_values.csv")).unwrap();
    assert_eq!(stdout, file);
    assert!(stdout.starts_with("# scenario=weak-values "));
    let re = |op: &str| -> f64 {
        let line = stdout
            .lines()
            .find(|l| l.starts_with(&format!("{op},")))
            .unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((re("sigma_Pi_I") - 1.0).abs() < 1e-12);
    assert!((re("Pi_II") - 1.0).abs() < 1e-12);
    assert!(re("Pi_I").abs() < 1e-12);
}

#[test]
fn verify_is_deterministic_and_passes() {
    let a = cheshire(&["verify"]);
    let b = cheshire(&["verify"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
}

#[test]
fn tampered_verify_fails() {
    let out = cheshire(&["verify", "--tamper"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]  1"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cheshire(&["photon-cat", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        cheshire(&["photon-cat", "--w", "-1"]).status.code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "w = 1\nnot_a_key = 3\n").unwrap();
    let out = cheshire(&["photon-cat", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));
}

#[test]
fn coarse_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cheshire(&["photon-cat", "--out", d, "--grid-n", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# photon run\nw = 2\ndx = 0.2\ndy = 0.2\nformat = csv\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = cheshire(&[
        "photon-cat",
        "--config",
        cfg.to_str().unwrap(),
        "--dy",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(out_dir.join("photon_summary.csv")).unwrap();
    assert!(text.starts_with("# scenario=photon-cat w=2 dx=0.2 dy=0 "));
    let rows = summary(&out_dir);
    assert!(value(&rows, "centroid_y").abs() < 1e-12);
}
