//! Evidence serialization, prompt assembly and the generation backends.

mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::toy_engine;
use evipath::eval::FeatureLexicon;
use evipath::explain::{parse_evidence, DecodingParams, Generator, HttpGenerator, StubGenerator, GENERIC_EXPLANATION};
use evipath::retrieval::HopRole;
use evipath::ErrorKind;

#[test]
fn evidence_lines_parse_back_to_the_same_paths() {
    let engine = toy_engine(|c| c.retrieval.paths = 12);
    for (user, target) in engine.queries() {
        let prepared = engine.prepare(&user, &target).unwrap();
        let paths = prepared.retrieval.unwrap().paths();
        assert_eq!(prepared.bundle.evidence.len(), paths.len());
        assert_eq!(parse_evidence(&prepared.bundle.evidence, engine.graph()).unwrap(), paths);
    }
}

#[test]
fn prompt_sections_follow_the_fixed_order() {
    let engine = toy_engine(|_| {});
    let text = engine.prepare("alice", "eleanor_oliphant").unwrap().bundle.text();
    let at = |h: &str| text.find(h).unwrap_or_else(|| panic!("missing {h}"));
    assert!(at("### Instruction") < at("### User History"));
    assert!(at("### User History") < at("### Target Item"));
    assert!(at("### Target Item") < at("### Knowledge Evidence"));
    assert!(text.contains("Eleanor Oliphant"));
}

#[test]
fn stub_mentions_exactly_the_grounded_attributes() {
    let engine = toy_engine(|_| {});
    let lexicon = FeatureLexicon::from_data(&engine.catalog, &engine.histories).unwrap();
    for (user, target) in engine.queries() {
        let (prepared, record) = engine.explain(&user, &target, &StubGenerator).unwrap();
        let retrieval = prepared.retrieval.unwrap();
        let want: BTreeSet<String> = retrieval
            .paths()
            .iter()
            .filter(|p| p.role() != HopRole::Relational)
            .map(|p| engine.graph().entity_name(p.target_attribute()).to_owned())
            .collect();
        let got = lexicon.extract(&record.explanation).features;
        assert_eq!(got, want, "{user}/{target}: {}", record.explanation);
        // every mention is a true attribute of the item
        assert!(got.is_subset(engine.catalog.item_features(&target).unwrap()));
        assert_eq!(record.backend, "stub");
        assert_eq!(record.prompt_sha256.len(), 64);
    }
}

#[test]
fn no_kg_prompt_has_no_evidence() {
    let engine = toy_engine(|c| c.ablation.no_kg = true);
    let (prepared, record) = engine.explain("bob", "station_eleven", &StubGenerator).unwrap();
    assert!(prepared.retrieval.is_none());
    assert!(prepared.bundle.evidence.is_empty());
    assert!(!prepared.bundle.text().contains("### Knowledge Evidence"));
    assert_eq!(record.explanation, GENERIC_EXPLANATION);
}

#[test]
fn stub_is_deterministic() {
    let engine = toy_engine(|_| {});
    let a = engine.explain("bob", "project_hail_mary", &StubGenerator).unwrap().1;
    let b = engine.explain("bob", "project_hail_mary", &StubGenerator).unwrap().1;
    assert_eq!(a, b);
}

#[test]
fn unreachable_generator_is_a_backend_error() {
    let engine = toy_engine(|_| {});
    let prepared = engine.prepare("alice", "eleanor_oliphant").unwrap();
    // port 9 on loopback is the discard service and is normally closed
    let gen = HttpGenerator::with_timeout("http://127.0.0.1:9/generate", Duration::from_secs(2)).unwrap();
    let err = gen.generate(&prepared.bundle, &DecodingParams::default()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Backend);
}
