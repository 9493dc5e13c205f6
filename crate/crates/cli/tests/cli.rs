use std::path::Path;
use std::process::Command;

fn eiconv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eiconv"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const RUN_CONFIG: &str = r#"
steps = 20
seeds = [3, 4]

[strategy]
variant = "ei_fixed"
kernel = { family = "matern", nu = "5/2", theta = [0.2] }
budget = 64

[objective]
kind = "random_span"
centers = 4
seed = 1
kernel = { family = "matern", nu = "5/2", theta = [0.2] }
"#;

#[test]
fn run_writes_csv_and_sidecar_then_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RUN_CONFIG);
    let out = dir.path().join("out");
    let status = eiconv()
        .args(["run", cfg.to_str().unwrap()])
        .env("EICONV_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv_path = out.join("run_ei_fixed_s0_o0_seed3.csv");
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("n,x0,z,best_z"));
    assert_eq!(lines.count(), 20);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_ei_fixed_s0_o0_seed3.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert!(out.join("run_ei_fixed_s0_o0_seed4.csv").exists());

    let svg = dir.path().join("plot.svg");
    let status = eiconv()
        .args(["plot", csv_path.to_str().unwrap(), "--output", svg.to_str().unwrap(), "--window", "5,20"])
        .status()
        .unwrap();
    assert!(status.success());
    let svg_text = std::fs::read_to_string(svg).unwrap();
    assert!(svg_text.contains("fitted slope"));
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RUN_CONFIG);
    let out = dir.path().join("o");
    let status = eiconv()
        .args(["run", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.contains(&"run_ei_fixed_s0_o0_seed9.csv".to_string()));
    assert_eq!(names.len(), 2);
}

#[test]
fn adversary_and_mesh_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seeds = 2
[strategy]
variant = "naive"
kernel = { family = "matern", nu = "1/2", theta = [0.2] }
[adversary]
k = [1, 2]
nu = 0.5
amplitude = 2.0
[mesh]
n = [10, 20, 40]
d = [1]
"#,
    );
    let out = dir.path().join("o");
    for cmd in ["adversary", "mesh"] {
        let status = eiconv()
            .args([cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}");
    }
    let adv = std::fs::read_to_string(out.join("adversary.csv")).unwrap();
    assert_eq!(adv.lines().count(), 1 + 2 * 2);
    assert!(adv.lines().skip(1).all(|l| l.contains(",true,")));
    let mesh = std::fs::read_to_string(out.join("mesh.csv")).unwrap();
    assert_eq!(mesh.lines().count(), 4);
    assert!(out.join("mesh.json").exists());
}

#[test]
fn diverge_and_rates_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
steps = 15
seeds = 2
[strategy]
variant = "ei_fixed"
kernel = { family = "matern", nu = "1/2", theta = [0.1] }
budget = 32
[objective]
kind = "random_span"
centers = 3
seed = 2
kernel = { family = "matern", nu = "1/2", theta = [0.1] }
[rates]
window = [5, 15]
[diverge]
mle_grid = 4
budget = 32
"#,
    );
    let out = dir.path().join("o");
    for cmd in ["rates", "diverge"] {
        let status = eiconv()
            .args([cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}");
    }
    assert_eq!(std::fs::read_to_string(out.join("rates.csv")).unwrap().lines().count(), 3);
    assert_eq!(std::fs::read_to_string(out.join("diverge.csv")).unwrap().lines().count(), 5);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("diverge.json")).unwrap()).unwrap();
    assert_eq!(meta["delta"], 1.0);
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "stepz = 1\n");
    let output = eiconv().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("parsing"));
}
