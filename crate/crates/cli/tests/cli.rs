use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &Path, cmd: &str, config: &Value, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, serde_json::to_string(config).unwrap()).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_spinwave"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap()
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn cube_config() -> Value {
    json!({
        "seed": 5,
        "ensemble": { "geometry": { "cube": { "side_um": 10.0 } }, "atoms": 100 }
    })
}

fn assert_success(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn out_entries(dir: &Path) -> usize {
    fs::read_dir(dir.join("out")).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn ensemble_file_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_success(&run(a.path(), "ensemble", &cube_config(), &[]));
    assert_success(&run(b.path(), "ensemble", &cube_config(), &[]));
    let fa = fs::read(out_file(a.path(), "ensemble.txt")).unwrap();
    let fb = fs::read(out_file(b.path(), "ensemble.txt")).unwrap();
    assert_eq!(fa, fb);
    let text = String::from_utf8(fa).unwrap();
    assert!(text.starts_with("# ensemble v1 N=100 seed=5 geometry=cube"));
    assert_eq!(text.lines().count(), 101);
    let meta = read_json(out_file(a.path(), "ensemble.json"));
    let meta_b = read_json(out_file(b.path(), "ensemble.json"));
    assert_eq!(meta["config_sha256"], meta_b["config_sha256"]);
    assert_eq!(meta["result"]["N"], 100);
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = TempDir::new().unwrap();
    let mut cfg = cube_config();
    cfg.as_object_mut().unwrap().remove("seed");
    let o = run(dir.path(), "ensemble", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(out_entries(dir.path()), 0);

    let mut cfg = cube_config();
    cfg["ensemble"]["side_length"] = json!(3.0);
    assert_eq!(run(dir.path(), "ensemble", &cfg, &[]).status.code(), Some(2));

    let o = run(dir.path(), "ensemble", &cube_config(), &["--sweep", "ensemble.atoms=10,many"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(out_entries(dir.path()), 0);
}

#[test]
fn numeric_failure_exits_3_and_leaves_nothing() {
    let dir = TempDir::new().unwrap();
    let ens = dir.path().join("pair.txt");
    fs::write(&ens, "# ensemble v1 N=2 seed=0 geometry=explicit wavelength_nm=780\n0 0 0\n0 0 0\n").unwrap();
    let cfg = json!({
        "seed": 1,
        "ensemble": { "file": ens },
        "g2": {
            "amplitudes": { "truncated_coherent": { "alpha": 1.0 } },
            "interaction": { "vdw": { "c6_dimensionless": 1.0 } },
            "storage_times_inv_gamma": [1.0]
        }
    });
    let o = run(dir.path(), "g2", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(out_entries(dir.path()), 0);
}

#[test]
fn single_atom_gamma_is_one() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 2,
        "ensemble": { "geometry": { "sphere": { "radius_um": 1.0 } }, "atoms": 1 },
        "kernel": "complex"
    });
    assert_success(&run(dir.path(), "gamma", &cfg, &[]));
    let meta = read_json(out_file(dir.path(), "gamma.json"));
    assert_eq!(meta["result"]["re_gamma_over_Gamma"], json!(1.0));
    assert_eq!(meta["result"]["im_gamma_over_Gamma"], json!(0.0));
    assert_eq!(meta["result"]["mode"], "complex");
}

#[test]
fn g2_without_interactions_is_e_over_4() {
    let dir = TempDir::new().unwrap();
    let mut cfg = cube_config();
    cfg["g2"] = json!({
        "amplitudes": { "truncated_coherent": { "alpha": 1.0 } },
        "interaction": "none",
        "storage_times_inv_gamma": [0.0, 1.0, 10.0]
    });
    assert_success(&run(dir.path(), "g2", &cfg, &[]));
    let (h, rows) = read_csv(out_file(dir.path(), "g2.csv"));
    assert_eq!(h, ["T", "g2", "g2_asymptotic", "overlap_sym_re", "overlap_sym_im"]);
    for r in rows {
        assert!((r[1] - std::f64::consts::E / 4.0).abs() < 1e-12);
        assert!((r[3] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spectrum_fwhm_matches_collective_rate() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 3,
        "ensemble": { "geometry": { "sphere": { "radius_um": 1.0 } }, "atoms": 60 }
    });
    assert_success(&run(dir.path(), "spectrum", &cfg, &[]));
    let (h, rows) = read_csv(out_file(dir.path(), "spectrum_fit.csv"));
    let (fwhm, re) = (column(&h, "fwhm"), column(&h, "re_gamma"));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][fwhm] / rows[0][re] - 1.0).abs() < 0.02, "{:?}", rows[0]);
    let (h, rows) = read_csv(out_file(dir.path(), "spectrum.csv"));
    assert_eq!(h, ["delta_omega", "direction_x", "direction_y", "direction_z", "intensity"]);
    assert_eq!(rows.len(), 512);
}

#[test]
fn coupling_map_cut_and_patch() {
    let dir = TempDir::new().unwrap();
    let mut cfg = json!({
        "seed": 4,
        "ensemble": { "geometry": { "sphere": { "radius_um": 5.0 } }, "density_per_cm3": 1e12 },
        "scan": { "cut": { "t_min_keg": -0.4, "t_max_keg": 0.4, "points": 201 } },
        "element": { "kind": "ground", "ell": 0 }
    });
    assert_success(&run(dir.path(), "coupling-map", &cfg, &[]));
    let (h, rows) = read_csv(out_file(dir.path(), "coupling_v0g.csv"));
    assert_eq!(h, ["kx", "ky", "kz", "re", "im", "|v|"]);
    assert!((rows[100][5] - 1.0).abs() < 1e-12);
    let meta = read_json(out_file(dir.path(), "coupling_map.json"));
    assert_eq!(meta["result"]["N"], 524);
    assert!(meta["result"]["panels"]["v0g"]["fwhm_keg"].as_f64().unwrap() > 0.0);
    assert!(out_file(dir.path(), "coupling_element.csv").exists());

    let dir = TempDir::new().unwrap();
    cfg["scan"] = json!({ "patch": { "half_width_keg": 0.3, "points": 11 } });
    assert_success(&run(dir.path(), "coupling-map", &cfg, &[]));
    let (_, sym) = read_csv(out_file(dir.path(), "coupling_symmetric.csv"));
    let (_, agg) = read_csv(out_file(dir.path(), "coupling_nonsymmetric_total.csv"));
    assert_eq!(sym.len(), 121);
    assert!((sym[60][5] - 1.0).abs() < 1e-12);
    assert!(agg[60][5] < 1e-10);
}

#[test]
fn sweep_writes_numbered_outputs_reproducibly() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 9,
        "ensemble": { "geometry": { "sphere": { "radius_um": 1.0 } }, "atoms": 10 }
    });
    let args = ["--sweep", "ensemble.atoms=10,20,40", "--threads", "2"];
    assert_success(&run(a.path(), "gamma", &cfg, &args));
    assert_success(&run(b.path(), "gamma", &cfg, &args));
    for i in 0..3 {
        let ma = read_json(out_file(a.path(), &format!("gamma_{i:03}.json")));
        let mb = read_json(out_file(b.path(), &format!("gamma_{i:03}.json")));
        assert_eq!(ma["result"], mb["result"]);
        assert_eq!(ma["sweep"]["index"], i);
        assert_eq!(ma["result"]["N"], [10, 20, 40][i]);
    }
}

#[test]
fn dynamics_closed_form_and_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 6,
        "ensemble": { "geometry": { "sphere": { "radius_um": 2.0 } }, "atoms": 30 },
        "pulse": { "shape": "sin_squared", "mean_rabi_gamma": 200.0 },
        "times": { "start_inv_gamma": 0.0, "end_inv_gamma": 1.0, "points": 21 },
        "ode_oracle": true
    });
    assert_success(&run(dir.path(), "dynamics", &cfg, &[]));
    let (h, rows) = read_csv(out_file(dir.path(), "dynamics_e0.csv"));
    assert_eq!(h, ["t", "re", "im"]);
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][1], 0.0);
    let meta = read_json(out_file(dir.path(), "dynamics.json"));
    let ratio = meta["result"]["validity_ratio"].as_f64().unwrap();
    assert!(meta["result"]["oracle_max_deviation"].as_f64().unwrap() < 2.0 * ratio + 0.05);

    let mut slow = cfg.clone();
    slow["pulse"]["mean_rabi_gamma"] = json!(1.0);
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), "dynamics", &slow, &[]).status.code(), Some(2));
}

#[test]
fn cascade_tables_and_ode_check() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 7,
        "ensemble": { "geometry": { "sphere": { "radius_um": 1.5 } }, "atoms": 20 },
        "modes": { "detuning_points": 3 },
        "times": { "end_inv_gamma": 2.0, "points": 5 },
        "cascade_ode_check": true
    });
    assert_success(&run(dir.path(), "cascade", &cfg, &[]));
    let (_, g) = read_csv(out_file(dir.path(), "cascade_g.csv"));
    assert_eq!(g.len(), 9);
    let (_, e02) = read_csv(out_file(dir.path(), "cascade_e02.csv"));
    assert_eq!(e02[0][1], 1.0);
    let meta = read_json(out_file(dir.path(), "cascade.json"));
    assert!(meta["result"]["ode_check"]["relative_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn csv_output_is_byte_identical_across_runs_and_threads() {
    let cfg = json!({
        "seed": 11,
        "ensemble": { "geometry": { "gaussian": { "sigma_um": 2.0 } }, "atoms": 300 },
        "modes": { "sphere": { "n_theta": 6, "n_phi": 6 }, "detuning_points": 33 },
        "scan": { "patch": { "half_width_keg": 0.4, "points": 9 } }
    });
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (cmd, file) in [("spectrum", "spectrum.csv"), ("coupling-map", "coupling_s_aggregate.csv")] {
        assert_success(&run(a.path(), cmd, &cfg, &["--threads", "1"]));
        assert_success(&run(b.path(), cmd, &cfg, &["--threads", "3"]));
        assert_eq!(fs::read(out_file(a.path(), file)).unwrap(), fs::read(out_file(b.path(), file)).unwrap());
    }
}
