//! Index persistence and end-to-end reproducibility.

mod common;

use common::toy_config;
use evipath::pipeline::build_index;
use evipath::{Engine, EngineConfig};

fn records(engine: &Engine) -> String {
    engine
        .queries()
        .iter()
        .map(|(u, t)| serde_json::to_string(&engine.record(&engine.retrieve(u, t).unwrap())).unwrap() + "\n")
        .collect()
}

#[test]
fn persisted_index_reproduces_retrieval() {
    let config = toy_config(|_| {});
    let built = Engine::build(config.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    build_index(&config).unwrap().save(dir.path()).unwrap();
    let loaded = Engine::open(config, dir.path()).unwrap();
    assert_eq!(records(&built), records(&loaded));
}

#[test]
fn config_round_trips_through_toml() {
    let config = toy_config(|c| {
        c.retrieval.gamma = 0.25;
        c.ablation.no_spec = true;
    });
    let text = config.to_toml();
    let back = EngineConfig::from_toml_str(&text, std::path::Path::new("/")).unwrap();
    assert_eq!(back.to_toml(), text);
    assert_eq!(back.hash(), config.hash());
    assert_ne!(toy_config(|_| {}).hash(), config.hash());
}

#[test]
fn seeds_change_embeddings_but_not_validity() {
    let a = Engine::build(toy_config(|c| c.seed = 1)).unwrap();
    let b = Engine::build(toy_config(|c| c.seed = 2)).unwrap();
    assert_ne!(a.index.store.aggregated_all(), b.index.store.aggregated_all());
    for engine in [&a, &b] {
        for (u, t) in engine.queries() {
            assert!(engine.retrieve(&u, &t).unwrap().paths().iter().all(|p| p.is_valid_in(engine.graph())));
        }
    }
}
