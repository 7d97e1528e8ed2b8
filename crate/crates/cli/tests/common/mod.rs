#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn roomgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_in(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    roomgap(&args)
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn preset(alpha: f64, r: f64, l: f64, eps: &str, extra: &str) -> String {
    format!("eps_list = [{eps}]\n\n[preset]\nalpha = {alpha}\nr = {r}\nL = {l}\n{extra}")
}
