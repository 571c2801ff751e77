#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Writes `config` into `dir/<name>.json`, runs `command` with output under
/// `dir/<name>` and returns the exit code and the output directory.
pub fn run(dir: &Path, name: &str, command: &str, config: &Value) -> (i32, PathBuf) {
    run_with(dir, name, command, config, &[])
}

pub fn run_with(dir: &Path, name: &str, command: &str, config: &Value, extra: &[&str]) -> (i32, PathBuf) {
    let cfg = dir.join(format!("{name}.json"));
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.join(name);
    let mut args = vec![
        "singular-pmp".to_string(),
        command.to_string(),
        "--config".into(),
        cfg.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    (singular_pmp_cli::main_with_args(args), out)
}

pub fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path.as_ref()).unwrap()).unwrap()
}

pub fn config(problem: &str, steps: usize, paths: usize, seed: u64) -> Value {
    json!({
        "problem": problem,
        "grid": {"steps": steps},
        "monte_carlo": {"paths": paths, "seed": seed},
    })
}

pub fn with_candidate(mut cfg: Value, control: &str) -> Value {
    cfg["candidate"] = json!({"control": control});
    cfg
}

/// `(mean, std_error)` of the total cost in a `cost.json` or `summary.json`.
pub fn total_cost(path: impl AsRef<Path>) -> (f64, f64) {
    let v = read_json(path);
    (
        v["cost"]["total"]["mean"].as_f64().unwrap(),
        v["cost"]["total"]["std_error"].as_f64().unwrap(),
    )
}

/// Rows `(n, traj_gap, cost_gap, se)` of a `chatter.csv`.
pub fn chatter_rows(path: impl AsRef<Path>) -> Vec<(usize, f64, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,traj_gap,cost_gap,SE"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect()
}
