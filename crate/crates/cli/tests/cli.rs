use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn austere(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_austere"))
        .args(args)
        .env("AUSTERE_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates a preset surface and returns the config and surface paths.
fn preset(dir: &TempDir, name: &str, count: usize) -> (PathBuf, PathBuf) {
    let cfg = write(
        dir,
        &format!("{name}.config.json"),
        &format!(r#"{{"surface": {{"kind": "preset", "name": "{name}"}}, "sampling": {{"seed": 7, "count": {count}}}}}"#),
    );
    let surf = dir.path().join(format!("{name}.surface.json"));
    let out = austere(&["generate", "--config", s(&cfg), "--out", s(&surf)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (cfg, surf)
}

#[test]
fn generate_records_alpha_at_base_and_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "n4.json",
        r#"{"surface": {"kind": "chain", "ambient_dim": 6, "seed": [[[1, 0]], [[0, 1]]], "seed_isotropic": true}}"#,
    );
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&austere(&["generate", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&austere(&["generate", "--config", s(&cfg), "--out", s(&b)])), 0);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    let expected: Value = serde_json::from_str("[[1.0,0.0],[0.0,1.0],[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]]").unwrap();
    assert_eq!(v["alpha_at_base"], expected);
}

#[test]
fn generate_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    let malformed = write(
        &dir,
        "bad.json",
        r#"{"surface": {"kind": "chain", "ambient_dim": 6, "seed": [[[1, 0]], [[0, 1, 2]]]}}"#,
    );
    let r = austere(&["generate", "--config", s(&malformed), "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("surface"));
    let unknown = write(&dir, "unknown.json", r#"{"sampling": {"seed": 1, "cout": 3}}"#);
    let r = austere(&["generate", "--config", s(&unknown), "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("sampling"), "{}", String::from_utf8_lossy(&r.stderr));
    let non_iso = write(
        &dir,
        "noniso.json",
        r#"{"surface": {"kind": "chain", "ambient_dim": 8, "seed": [[[1, 0]], [[0, 0]], [[0, 0]], [[0, 0]]], "seed_isotropic": true}}"#,
    );
    assert_eq!(code(&austere(&["generate", "--config", s(&non_iso), "--out", s(&out)])), 3);
    assert!(!out.exists());
}

#[test]
fn verify_n4_all_checks_pass_reproducibly() {
    let dir = TempDir::new().unwrap();
    let (cfg, surf) = preset(&dir, "n4-canonical", 12);
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let csv = dir.path().join("r.csv");
    let out = austere(&["verify", "--surface", s(&surf), "--config", s(&cfg), "--report", s(&r1), "--csv", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(code(&austere(&["verify", "--surface", s(&surf), "--config", s(&cfg), "--report", s(&r2)])), 0);
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
    let rep: Value = serde_json::from_slice(&std::fs::read(&r1).unwrap()).unwrap();
    assert_eq!(rep["format"], "austere-report/1");
    assert_eq!(rep["checks"].as_array().unwrap().len(), 10);
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("# austere-residuals/1"));
    assert_eq!(lines.next(), Some("check,index,u,v,t,s,residual,pass,breakdown"));
    assert_eq!(lines.count(), 120);
}

#[test]
fn verify_literal_recipe_austerity_fails() {
    let dir = TempDir::new().unwrap();
    let (cfg, surf) = preset(&dir, "literal-recipe", 10);
    let rep = dir.path().join("r.json");
    let out = austere(&["verify", "--surface", s(&surf), "--config", s(&cfg), "--report", s(&rep), "--checks", "austere"]);
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    let rows = v["checks"][0]["rows"].as_array().unwrap();
    let fail = rows.iter().find(|r| r["pass"] == false).expect("a failing row");
    assert!(fail["t"].as_array().unwrap().len() == 4 && fail["breakdown"]["pair_resid"].is_number());
}

#[test]
fn verify_conformal_on_chain_surfaces() {
    let dir = TempDir::new().unwrap();
    for name in ["n4-canonical", "n6-canonical", "literal-recipe", "generic-recipe"] {
        let (cfg, surf) = preset(&dir, name, 30);
        let rep = dir.path().join(format!("{name}.report.json"));
        let out = austere(&["verify", "--surface", s(&surf), "--config", s(&cfg), "--report", s(&rep), "--checks", "conformal"]);
        assert_eq!(code(&out), 0, "{name}");
        let v: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
        assert!(v["checks"][0]["worst_residual"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn verify_overrides_and_config_errors() {
    let dir = TempDir::new().unwrap();
    let (_, surf) = preset(&dir, "n6-canonical", 5);
    let rep = dir.path().join("r.json");
    let no_seed = write(&dir, "noseed.json", "{}");
    let args = |cfg: &Path, extra: &[&str]| {
        let mut a = vec!["verify", "--surface", s(&surf), "--config", s(cfg), "--report", s(&rep)]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        a.extend(extra.iter().map(|x| x.to_string()));
        a
    };
    let run = |a: Vec<String>| austere(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&run(args(&no_seed, &["--checks", "minimal"]))), 2);
    assert_eq!(code(&run(args(&no_seed, &["--checks", "minimal", "--seed", "3"]))), 0);
    assert_eq!(code(&run(args(&no_seed, &["--checks", "bogus", "--seed", "3"]))), 2);
    assert_eq!(code(&run(args(&no_seed, &["--checks", "lemma", "--seed", "3", "--tol-fd", "-1"]))), 2);
    assert_eq!(code(&run(args(&no_seed, &["--checks", "lemma", "--seed", "3", "--tol-fd", "1e-5"]))), 0);
    let neg = write(&dir, "neg.json", r#"{"sampling": {"seed": 1}, "tolerances": {"eigen_zero": 0}}"#);
    assert_eq!(code(&run(args(&neg, &["--checks", "minimal"]))), 2);
    let v: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(v["config"]["sampling"]["seed"], 3);
}

#[test]
fn verify_all_degenerate_sampling_exits_4() {
    // the tangent plane underflows to zero this close to the branch point
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"surface": {"kind": "holomorphic", "eta": [[[0, 0], [0, 0], [0, 0], [1, 0]], [[0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]]},
            "sampling": {"seed": 2, "count": 5, "uv_box": [[-1e-100, 1e-100], [-1e-100, 1e-100]]}}"#,
    );
    let surf = dir.path().join("s.json");
    assert_eq!(code(&austere(&["generate", "--config", s(&cfg), "--out", s(&surf)])), 0);
    let rep = dir.path().join("r.json");
    let out = austere(&["verify", "--surface", s(&surf), "--config", s(&cfg), "--report", s(&rep), "--checks", "conformal"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn export_meshes() {
    let dir = TempDir::new().unwrap();
    let (_, surf) = preset(&dir, "n4-canonical", 5);
    let obj = |what: &str, slice: &str, name: &str| {
        let out = dir.path().join(name);
        let r = austere(&["export", "--surface", s(&surf), "--what", what, "--slice", slice, "--out", s(&out)]);
        (code(&r), std::fs::read_to_string(&out).unwrap_or_default())
    };
    let verts = |text: &str| text.lines().filter(|l| l.starts_with("v ")).map(String::from).collect::<Vec<_>>();
    let (c, surface) = obj("surface", "{}", "s.obj");
    assert_eq!(c, 0);
    assert_eq!(verts(&surface).len(), 4096);
    assert!(surface.lines().any(|l| l.starts_with("# surface_sha256: ")));
    assert!(surface.lines().any(|l| l.starts_with("# slice: ")));
    let (c, again) = obj("surface", "{}", "s2.obj");
    assert_eq!((c, &again), (0, &surface));
    let (c, zero) = obj("immersion", r#"{"t": [0, 0]}"#, "i.obj");
    assert_eq!(c, 0);
    assert_eq!(verts(&zero), verts(&surface));
    let slice = write(&dir, "slice.json", r#"{"grid": [8, 8], "t": [0.5, -0.5], "s": [0.2, 0.1], "axes": [0, 6, 7]}"#);
    let (c, lag) = obj("lagrangian", s(&slice), "l.obj");
    assert_eq!(c, 0);
    assert_eq!(verts(&lag).len(), 64);
    assert_eq!(obj("surface", r#"{"grid": [1, 4]}"#, "bad.obj").0, 2);
    assert_eq!(obj("immersion", r#"{"t": [1]}"#, "bad.obj").0, 2);
    assert_eq!(obj("surface", r#"{"axes": [0, 1, 9]}"#, "bad.obj").0, 2);
    assert_eq!(obj("surface", r#"{"gird": [4, 4]}"#, "bad.obj").0, 2);
}
