#![allow(dead_code)]

use std::path::PathBuf;

use learnsim::config::{parse_config, RunConfig};

pub const SHIPPED: [&str; 4] = [
    "a1_three_lessons.toml",
    "a2_rising_requirements.toml",
    "a3_task_sequence.toml",
    "a4_school_career.toml",
];

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load(name: &str) -> RunConfig {
    let path = configs_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}
