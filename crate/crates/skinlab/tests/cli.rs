use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skinlab::runner::Manifest;

fn skinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Manifest {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = skinlab(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn file_bytes(dir: &Path, m: &Manifest) -> Vec<(String, Vec<u8>)> {
    m.files
        .iter()
        .map(|f| (f.path.clone(), fs::read(dir.join(&f.path)).unwrap()))
        .collect()
}

const SPECTRA: &str = r#"{"experiment": "spectra",
    "model": {"kind": "cosine", "j": 1.0, "r": 1.0},
    "phis": [0.0, 1.5707963267948966], "n_sites": 12, "n_pbc": 256}"#;

const TRAJ: &str = r#"{"experiment": "trajectories",
    "model": {"kind": "cosine", "j": 1.0, "r": 1.0, "phi": 1.5707963267948966},
    "n_sites": 5, "times": [0.1, 0.3], "n_traj": 70, "master_seed": 9}"#;

#[test]
fn validate_accepts_shipped_configs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        let o = skinlab(&["validate", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert!(n >= 8);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.json", r#"{"experiment": "spectra", "model": {"kind": "cosine", "j": 1, "r": 1}, "n_sites": 5, "bogus": 1}"#),
        ("syntax.json", r#"{"experiment": "#),
        ("times.json", r#"{"experiment": "obc_relax", "model": {"kind": "cosine", "j": 1, "r": 1}, "n_sites": 5, "times": [2, 1]}"#),
        ("dt.json", r#"{"experiment": "trajectories", "model": {"kind": "cosine", "j": 1, "r": 1}, "n_sites": 5, "times": [1], "dt": 0.5}"#),
        ("bulk.json", r#"{"experiment": "bulk_relax", "model": {"kind": "cosine", "j": 1, "r": 1}, "n_k": 64, "times": [1000]}"#),
    ];
    for (name, body) in cases {
        let p = write_config(tmp.path(), name, body);
        for args in [vec!["validate", p.to_str().unwrap()], vec!["run", p.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]] {
            let o = skinlab(&args);
            assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let p = write_config(tmp.path(), "ok.json", SPECTRA);
    let o = skinlab(&["run", p.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        "huge.json",
        r#"{"experiment": "obc_relax", "model": {"kind": "cosine", "j": 1, "r": 1e160, "phi": 0.5}, "n_sites": 5, "times": [0, 1]}"#,
    );
    let o = skinlab(&["run", p.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = skinlab(&["validate", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_and_headers_carry_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "spectra.json", SPECTRA);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (ma, mb) = (run(&p, &a, &[]), run(&p, &b, &[]));
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert_eq!(ma.files, mb.files);
    assert_eq!(file_bytes(&a, &ma), file_bytes(&b, &mb));
    assert_eq!(ma.figure, "fig1");
    for f in &ma.files {
        let text = fs::read_to_string(a.join(&f.path)).unwrap();
        assert!(text.contains(&ma.config_sha256), "{}", f.path);
        if f.path.ends_with(".csv") {
            assert!(text.starts_with("# skinlab "));
            assert!(text.contains("# figure: fig1"));
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["meta"]["config_sha256"], ma.config_sha256.as_str());
        }
        assert_eq!(skinlab::formats::sha256_hex(text.as_bytes()), f.sha256);
    }
}

#[test]
fn trajectories_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "traj.json", TRAJ);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ma = run(&p, &a, &["--threads", "1"]);
    let mb = run(&p, &b, &["--threads", "4"]);
    assert_eq!(file_bytes(&a, &ma), file_bytes(&b, &mb));

    let c = tmp.path().join("c");
    let mc = run(&p, &c, &["--seed", "10"]);
    assert_ne!(ma.config_sha256, mc.config_sha256);
    assert_ne!(
        fs::read(a.join("traj_model_t0_rho.csv")).unwrap(),
        fs::read(c.join("traj_model_t0_rho.csv")).unwrap()
    );
}

#[test]
fn every_experiment_runs_on_a_small_config() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        r#"{"experiment": "bulk_relax", "model": {"kind": "cosine", "j": 1, "r": 1, "phi": 1.5707963267948966}, "n_k": 64, "window": 6, "times": [0, 1, 2, 3, 4]}"#,
        r#"{"experiment": "obc_relax", "model": {"kind": "cosine", "j": 1, "r": 1}, "phis": [0, 1], "n_sites": 7, "times": [0, 1, 5]}"#,
        r#"{"experiment": "liouvillian_spectrum", "model": {"kind": "cosine", "j": 1, "r": 1}, "phis": [0, 0.785], "n_sites": 5}"#,
        r#"{"experiment": "entropy_trace", "model": {"kind": "cosine", "j": 1, "r": 1}, "phis": [0, 1.57], "n_sites": 5, "times": [0, 1, 10]}"#,
        r#"{"experiment": "hatano_nelson", "model": {"kind": "hatano_nelson", "j1": 1, "j2": 2}, "n_sites": 7, "times": [0, 1, 4]}"#,
        r#"{"experiment": "semiclassical_drift", "model": {"kind": "cosine", "j": 1, "r": 1, "phi": 1.5707963267948966}, "n_sites": 15, "times": [0, 0.5, 1]}"#,
        r#"{"experiment": "spectra", "model": {"kind": "fourier", "h": [[1, 1, 0], [-1, 1, 0]], "p": [[0, 1, 0], [1, 0.4, 0.2], [-1, 0.4, -0.2]], "label": "custom"}, "n_sites": 8}"#,
    ];
    for (i, body) in configs.iter().enumerate() {
        let p = write_config(tmp.path(), &format!("c{i}.json"), body);
        let dir = tmp.path().join(format!("o{i}"));
        let m = run(&p, &dir, &[]);
        assert!(!m.files.is_empty(), "{body}");
        for f in &m.files {
            let bytes = fs::read(dir.join(&f.path)).unwrap();
            assert_eq!(bytes.len() as u64, f.bytes);
        }
    }
}
