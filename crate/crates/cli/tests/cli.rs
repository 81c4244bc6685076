use std::path::Path;
use std::process::{Command, Output};

const FAST: &str = r#"{
  "ray_grid": [0, 1, 2, 4, 6],
  "max_word_len": 9,
  "length_cap": 10.0,
  "fd_step": 0.5,
  "pressure_end": 2.0,
  "derivative_nodes": [0.5, 1.0, 1.5],
  "mass_rows": 1000
}"#;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitchin-forge")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn graft_sweep_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fast.json", FAST);
    let out = dir.path().join("sweep.csv");
    let o = forge(&["graft-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,height,delta,stderr,I,J,boundary_mass");
    assert_eq!(lines.len(), 6);
    assert!(text.contains("# config "));
    assert!(text.contains("# r_star "));
    assert!(text.starts_with(&format!("# hitchin-forge {}", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn outputs_are_deterministic_and_stream_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fast.json", FAST);
    let a = forge(&["entropy", "--config", &cfg, "--out", "-"]);
    let b = forge(&["entropy", "--config", &cfg, "--out", "-"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(data_lines(&text)[0], "label,t,delta,stderr,r0,r1,samples");
    assert_eq!(data_lines(&text).len(), 6);
}

#[test]
fn census_round_trips_through_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fast.json", FAST);
    let census = dir.path().join("census.csv.gz");
    let c = census.to_str().unwrap();
    assert!(forge(&["census", "--config", &cfg, "--out", c]).status.success());
    let direct = forge(&["entropy", "--config", &cfg]);
    let loaded = forge(&["entropy", "--census", c, "--config", &cfg, "--strict"]);
    assert!(loaded.status.success(), "{}", String::from_utf8_lossy(&loaded.stderr));
    assert_eq!(direct.stdout, loaded.stdout);

    // a different seed changes the config hash
    let o = forge(&["entropy", "--census", c, "--config", &cfg, "--strict", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash"));
    assert!(forge(&["entropy", "--census", c, "--config", &cfg, "--seed", "7"]).status.success());
}

#[test]
fn config_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"d\": 3,\n  \"ray_grd\": [0, 1]\n}");
    let o = forge(&["entropy", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("ray_grd"), "{err}");

    let o = forge(&["entropy", "--config", &cfg.replace("bad", "missing")]);
    assert_eq!(o.status.code(), Some(2));
    let o = forge(&["census", "--max-word-len", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn too_small_census_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", r#"{"ray_grid": [0, 1], "max_word_len": 4, "length_cap": 5.0}"#);
    let o = forge(&["graft-sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn pants_entropy_decreases_in_the_third_boundary() {
    let o = forge(&["pants-entropy", "--out", "-"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "a,b,c,delta,stderr,r1,k_hat,k_lower,gap_product,gap_reference");
    let deltas: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(deltas.len(), 3);
    assert!(deltas.windows(2).all(|w| w[1] < w[0]), "{deltas:?}");
}

#[test]
fn pressure_length_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fast.json", FAST);
    let o = forge(&["pressure-length", "--config", &cfg]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,speed,cumulative,upper_bound");
    assert_eq!(lines.len(), 6);
    let cum: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(cum.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn shipped_config_is_the_default() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let o = forge(&["pants-entropy", "--config", root.to_str().unwrap(), "--out", "-"]);
    let d = forge(&["pants-entropy", "--out", "-"]);
    assert!(o.status.success());
    assert_eq!(o.stdout, d.stdout);
}

#[test]
fn check_passes_on_defaults() {
    let o = forge(&["check"]);
    let text = stdout(&o);
    print!("{text}");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!text.contains("FAIL"));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
}
