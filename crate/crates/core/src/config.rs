//! Engine configuration, read from TOML.
//!
//! Every key is optional and defaults to the values below. Relative paths are
//! resolved against the directory holding the configuration file.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! triples = "triples.tsv"
//! catalog = "catalog.jsonl"
//! histories = "histories.jsonl"
//! max_history = 10
//!
//! [embedding]
//! backend = "hash"        # hash | file | http
//! dim = 64
//! layers = 3
//! clusters = 3
//! # file = "vectors.emb"  # file backend
//! # url = "http://..."    # http backend, else EVIPATH_EMBED_URL
//!
//! [specificity]
//! structural = 0.27
//! semantic = 0.31
//! preference = 0.42
//! penalty = 1.0
//! smoothing = 1.0
//!
//! [retrieval]
//! gamma = 0.6
//! paths = 5
//! max_hops = 3
//! candidate_cap = 512
//! temperature = 0.1
//! # value_projection = "projection.txt"
//!
//! [eval]
//! tau = 0.4
//!
//! [generation]
//! backend = "stub"        # stub | http
//! max_tokens = 128
//! temperature = 0.0
//! timeout_secs = 30
//! max_in_flight = 4
//! # url = "http://..."    # else EVIPATH_GENERATE_URL
//!
//! [ablation]
//! no_kg = false
//! no_pruning = false
//! no_spec = false
//! no_mmr = false
//! only_1hop = false
//! ```
//!
//! Auth tokens are read only from `EVIPATH_EMBED_TOKEN` and
//! `EVIPATH_GENERATE_TOKEN`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{BackendSpec, EmbeddingFile, TextEncoder, DEFAULT_CLUSTERS, DEFAULT_DIM, DEFAULT_LAYERS};
use crate::error::{Error, Result};
use crate::eval::metrics::{check_tau, DEFAULT_TAU};
use crate::explain::DecodingParams;
use crate::http::HttpSettings;
use crate::kg::DEFAULT_MAX_HISTORY;
use crate::retrieval::{
    IntentParams, RetrievalConfig, SpecificityWeights, ValueProjection, DEFAULT_CANDIDATE_CAP, DEFAULT_GAMMA,
    DEFAULT_SELECTED, MAX_HOPS,
};

pub const EMBED_URL_VAR: &str = "EVIPATH_EMBED_URL";
pub const EMBED_TOKEN_VAR: &str = "EVIPATH_EMBED_TOKEN";
pub const GENERATE_URL_VAR: &str = "EVIPATH_GENERATE_URL";
pub const GENERATE_TOKEN_VAR: &str = "EVIPATH_GENERATE_TOKEN";

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub triples: PathBuf,
    pub catalog: PathBuf,
    pub histories: PathBuf,
    pub max_history: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            triples: "triples.tsv".into(),
            catalog: "catalog.jsonl".into(),
            histories: "histories.jsonl".into(),
            max_history: DEFAULT_MAX_HISTORY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingBackend {
    Hash,
    File,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub backend: EmbeddingBackend,
    pub dim: usize,
    pub layers: usize,
    pub clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            backend: EmbeddingBackend::Hash,
            dim: DEFAULT_DIM,
            layers: DEFAULT_LAYERS,
            clusters: DEFAULT_CLUSTERS,
            file: None,
            url: None,
            timeout_secs: 30,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub gamma: f64,
    pub paths: usize,
    pub max_hops: usize,
    pub candidate_cap: usize,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_projection: Option<PathBuf>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            gamma: DEFAULT_GAMMA,
            paths: DEFAULT_SELECTED,
            max_hops: MAX_HOPS,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            temperature: IntentParams::default().temperature,
            value_projection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tau: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { tau: DEFAULT_TAU }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationBackend {
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub backend: GenerationBackend,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Decoding seed; the top-level seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let d = DecodingParams::default();
        GenerationConfig {
            backend: GenerationBackend::Stub,
            max_tokens: d.max_tokens,
            temperature: d.temperature,
            seed: None,
            timeout_secs: 30,
            max_in_flight: 4,
            url: None,
            instruction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Prompt without any evidence.
    pub no_kg: bool,
    /// Score by relevance only and select plain top-N.
    pub no_pruning: bool,
    /// Every node specificity is 1.
    pub no_spec: bool,
    /// Selection is plain top-N.
    pub no_mmr: bool,
    /// One-hop paths only.
    pub only_1hop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub embedding: EmbeddingConfig,
    pub specificity: SpecificityWeights,
    pub retrieval: SelectionConfig,
    pub eval: EvalConfig,
    pub generation: GenerationConfig,
    pub ablation: Ablation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: DEFAULT_SEED,
            data: DataConfig::default(),
            embedding: EmbeddingConfig::default(),
            specificity: SpecificityWeights::default(),
            retrieval: SelectionConfig::default(),
            eval: EvalConfig::default(),
            generation: GenerationConfig::default(),
            ablation: Ablation::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl EngineConfig {
    /// Parses TOML, resolving relative paths against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.data.triples);
        resolve(base, &mut self.data.catalog);
        resolve(base, &mut self.data.histories);
        if let Some(p) = self.embedding.file.as_mut() {
            resolve(base, p);
        }
        if let Some(p) = self.retrieval.value_projection.as_mut() {
            resolve(base, p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Short digest of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.specificity.validate()?;
        check_tau(self.eval.tau)?;
        let r = &self.retrieval;
        if !(0.0..=1.0).contains(&r.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", r.gamma)));
        }
        if !(1..=MAX_HOPS).contains(&r.max_hops) {
            return Err(Error::Config(format!("max_hops must be in 1..=3, got {}", r.max_hops)));
        }
        if r.paths == 0 || r.candidate_cap == 0 {
            return Err(Error::Config("paths and candidate_cap must be at least 1".into()));
        }
        if !(r.temperature > 0.0) {
            return Err(Error::Config("retrieval temperature must be positive".into()));
        }
        let e = &self.embedding;
        if e.dim < 2 {
            return Err(Error::Config(format!("embedding dim must be at least 2, got {}", e.dim)));
        }
        if e.clusters < 2 {
            return Err(Error::Config(format!("clusters must be at least 2, got {}", e.clusters)));
        }
        if e.backend == EmbeddingBackend::File && e.file.is_none() {
            return Err(Error::Config("embedding backend `file` needs `embedding.file`".into()));
        }
        if e.max_in_flight == 0 || self.generation.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        if self.data.max_history == 0 {
            return Err(Error::Config("max_history must be at least 1".into()));
        }
        if !(self.generation.temperature >= 0.0) {
            return Err(Error::Config("generation temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// Selection settings with the ablation flags applied.
    pub fn retrieval_config(&self) -> Result<RetrievalConfig> {
        let r = &self.retrieval;
        let value_projection = match &r.value_projection {
            None => None,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Some(ValueProjection::parse(&text)?)
            }
        };
        let a = self.ablation;
        Ok(RetrievalConfig {
            intent: IntentParams {
                temperature: r.temperature,
                value_projection,
            },
            weights: self.specificity,
            gamma: r.gamma,
            paths: r.paths,
            max_hops: if a.only_1hop { 1 } else { r.max_hops },
            candidate_cap: r.candidate_cap,
            use_specificity: !(a.no_spec || a.no_pruning),
            use_mmr: !(a.no_mmr || a.no_pruning),
        })
    }

    fn embed_settings(&self) -> Result<HttpSettings> {
        let url = env_or(self.embedding.url.clone(), EMBED_URL_VAR)
            .ok_or_else(|| Error::Config(format!("embedding backend `http` needs `embedding.url` or {EMBED_URL_VAR}")))?;
        Ok(HttpSettings {
            url,
            token: std::env::var(EMBED_TOKEN_VAR).ok(),
            timeout: Duration::from_secs(self.embedding.timeout_secs),
            max_in_flight: self.embedding.max_in_flight,
        })
    }

    pub fn backend_spec(&self) -> Result<BackendSpec> {
        Ok(match self.embedding.backend {
            EmbeddingBackend::Hash => BackendSpec::Hash {
                seed: self.seed,
                dim: self.embedding.dim,
            },
            EmbeddingBackend::File => BackendSpec::File {
                path: self.embedding.file.clone().expect("validated"),
                seed: self.seed,
            },
            EmbeddingBackend::Http => BackendSpec::Remote {
                settings: self.embed_settings()?,
                dim: None,
            },
        })
    }

    /// Encoder for feature text, matching the one an index built from this
    /// configuration carries.
    pub fn text_encoder(&self) -> Result<TextEncoder> {
        Ok(match self.embedding.backend {
            EmbeddingBackend::Hash => TextEncoder::Hash {
                seed: self.seed,
                dim: self.embedding.dim,
            },
            EmbeddingBackend::File => {
                let path = self.embedding.file.as_ref().expect("validated");
                let file = EmbeddingFile::parse(crate::kg::catalog::open(path)?, &path.display().to_string())?;
                TextEncoder::Hash {
                    seed: self.seed,
                    dim: file.dim,
                }
            }
            EmbeddingBackend::Http => TextEncoder::Remote(crate::embedding::RemoteEncoder::new(self.embed_settings()?, None)?),
        })
    }

    pub fn decoding(&self) -> DecodingParams {
        DecodingParams {
            max_tokens: self.generation.max_tokens,
            temperature: self.generation.temperature,
            seed: self.generation.seed.unwrap_or(self.seed),
        }
    }

    pub fn generate_settings(&self) -> Result<HttpSettings> {
        let url = env_or(self.generation.url.clone(), GENERATE_URL_VAR).ok_or_else(|| {
            Error::Config(format!("generation backend `http` needs `generation.url` or {GENERATE_URL_VAR}"))
        })?;
        Ok(HttpSettings {
            url,
            token: std::env::var(GENERATE_TOKEN_VAR).ok(),
            timeout: Duration::from_secs(self.generation.timeout_secs),
            max_in_flight: self.generation.max_in_flight,
        })
    }
}

fn env_or(configured: Option<String>, var: &str) -> Option<String> {
    configured.or_else(|| std::env::var(var).ok()).filter(|s| !s.trim().is_empty())
}
