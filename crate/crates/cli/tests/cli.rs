use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gibbslab"));
    for var in ["GIBBSLAB_SEED", "GIBBSLAB_OUT", "GIBBSLAB_THREADS", "GIBBSLAB_BUDGET"] {
        c.env_remove(var);
    }
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

const SANOV: &str = r#"
[model]
dim = 1
confinement = "const:0"
interaction = "zero"
reference = { kind = "atoms", dim = 1, atoms = [[0.0], [1.0], [2.0]], weights = [1.0, 2.0, 1.0] }

[minimize]
rate = "i"

[laplace]
functional = { kind = "linear", g = [0.3, -0.4, 1.0] }
schedule = "n"
n = [2, 4, 6]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn minimize_sanov_returns_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SANOV);
    let out = dir.path().join("out");
    let o = run(&["minimize", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("result.json"));
    assert!(r["value"].as_f64().unwrap().abs() < 1e-9);
    let w: Vec<f64> = r["grid_weights"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in w.iter().zip([0.25, 0.5, 0.25]) {
        assert!((a - b).abs() < 1e-6, "{w:?}");
    }
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "minimize");
    assert_eq!(m["config"]["seed"], 0);
}

#[test]
fn laplace_sanov_gaps_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SANOV);
    let out = dir.path().join("out");
    let o = run(&["laplace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("n,beta_n,exact,reference,gap"));
    let mut rows = 0;
    for l in lines {
        let gap: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap <= 1e-10, "{l}");
        // full precision in CSV
        assert!(l.split(',').nth(2).unwrap().contains('e'));
        rows += 1;
    }
    assert_eq!(rows, 3);
}

#[test]
fn invalid_potential_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SANOV.replace("\"zero\"", "\"yukawa\""));
    let o = run(&["minimize", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["field"], "model.interaction");
    assert_eq!(e["error"]["kind"], "config");
}

#[test]
fn missing_config_exits_2() {
    let o = run(&["minimize", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SANOV);
    let o = run(&[
        "laplace",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--budget",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"]["kind"], "budget_exceeded");
}

#[test]
fn all_infinite_energy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SANOV.replace("\"const:0\"", "\"hardwall:5:6\"");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["laplace", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&[
        "sample",
        "--config",
        config("sanov.toml").to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "sample",
        "--config",
        a.join("manifest.json").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["result.json", "samples.jsonl", "diagnostics.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(read_json(&b.join("manifest.json"))["config"]["seed"], 11);
}

#[test]
fn flag_beats_env_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("seed = 5\n{SANOV}"));
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let out = dir.path().join("o");
        let mut c = bin();
        c.args(["minimize", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        c.args(extra);
        if let Some(v) = env {
            c.env("GIBBSLAB_SEED", v);
        }
        assert!(c.output().unwrap().status.success());
        read_json(&out.join("manifest.json"))["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 5);
    assert_eq!(seed_of(&[], Some("6")), 6);
    assert_eq!(seed_of(&["--seed", "7"], Some("6")), 7);
}

#[test]
fn catalog_lists_builtins() {
    let o = run(&["catalog"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("coulomb"));
    assert!(text.contains("power:p"));
    let o = run(&["catalog", "--json"]);
    let items: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(items.as_array().unwrap().len() > 10);
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("metrics", "measures.toml"),
        ("phi", "measures.toml"),
        ("check-assumptions", "sanov.toml"),
        ("laplace", "masked.toml"),
    ] {
        let out = dir.path().join(cmd);
        let o = run(&[cmd, "--config", config(file).to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("result.json").exists());
    }
}
