//! Feature-level faithfulness metrics for generated explanations.

pub mod extract;
pub mod metrics;
pub mod report;

pub use extract::{extract_features, FeatureLexicon, FeatureSet, Provenance};
pub use metrics::{
    f_ehr, judge_features, p_ehr, preference_proxy, Alignment, Factuality, FeatureVerdict, PreferenceProfile,
    ProxyScore, DEFAULT_TAU,
};
pub use report::{
    evaluate_corpus, parse_tau_grid, read_corpus, read_corpus_path, render_table, sweep_csv, tau_grid, CorpusRecord,
    EvalInstance, EvalReport, Evaluator, TauPoint,
};
