#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dabopt_core::datastore::{load_config, Config, Databases};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn shipped() -> (Config, Databases) {
    let config = load_config(&data_dir().join("system.conf")).expect("shipped config loads");
    let dbs = Databases::load(&config.paths).expect("shipped databases load");
    (config, dbs)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Composite midpoint rule with `n` uniform steps.
pub fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<f64>() * h
}
