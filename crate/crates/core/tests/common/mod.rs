//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use evipath::toy::Bundle;
use evipath::{Engine, EngineConfig};

/// The bundled data, written once per test binary under Cargo's scratch directory.
pub fn bundle() -> &'static Bundle {
    static BUNDLE: OnceLock<Bundle> = OnceLock::new();
    BUNDLE.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(env!("CARGO_CRATE_NAME"));
        evipath::toy::write_bundle(&dir).unwrap()
    })
}

/// The toy configuration, edited by `edit`.
pub fn toy_config(edit: impl FnOnce(&mut EngineConfig)) -> EngineConfig {
    let mut config = EngineConfig::from_path(&bundle().toy_config).unwrap();
    edit(&mut config);
    config
}

pub fn toy_engine(edit: impl FnOnce(&mut EngineConfig)) -> Engine {
    Engine::build(toy_config(edit)).unwrap()
}

pub fn eval_config() -> EngineConfig {
    EngineConfig::from_path(&bundle().eval_config).unwrap()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        dot / (na * nb)
    }
}
