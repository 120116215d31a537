//! End-to-end wiring: data and index loading, retrieval, prompting and
//! generation for (user, target) queries.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EngineConfig, GenerationBackend};
use crate::error::{Error, Result};
use crate::eval::CorpusRecord;
use crate::explain::{
    assemble_prompt, history_text, serialize_paths, DecodingParams, Generator, HttpGenerator, PromptBundle,
    StubGenerator, DEFAULT_INSTRUCTION,
};
use crate::index::Index;
use crate::kg::{Histories, ItemCatalog, KnowledgeGraph};
use crate::retrieval::{Retrieval, RetrievalConfig, RetrievalRecord, Retriever};

/// Loaded data, index and resolved settings.
#[derive(Debug)]
pub struct Engine {
    pub config: EngineConfig,
    pub retrieval: RetrievalConfig,
    pub index: Index,
    pub catalog: ItemCatalog,
    pub histories: Histories,
}

/// One prompt and what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub bundle: PromptBundle,
    /// Absent when the knowledge graph is ablated.
    pub retrieval: Option<Retrieval>,
}

/// Provenance record for one generated explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub user: String,
    pub item: String,
    pub explanation: String,
    pub backend: String,
    pub prompt_sha256: String,
    pub evidence: Vec<String>,
    pub decoding: DecodingParams,
}

impl ExplanationRecord {
    /// The corpus form consumed by evaluation.
    pub fn corpus_record(&self) -> CorpusRecord {
        CorpusRecord {
            user: self.user.clone(),
            item: self.item.clone(),
            explanation: self.explanation.clone(),
            features: None,
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads the graph named by the configuration.
pub fn load_graph(config: &EngineConfig) -> Result<KnowledgeGraph> {
    KnowledgeGraph::from_path(&config.data.triples)
}

/// Builds the index from the configured data files.
pub fn build_index(config: &EngineConfig) -> Result<Index> {
    config.validate()?;
    let graph = load_graph(config)?;
    Index::build(
        graph,
        &config.backend_spec()?,
        config.embedding.layers,
        config.embedding.clusters,
        config.seed,
    )
}

impl Engine {
    pub fn new(config: EngineConfig, index: Index) -> Result<Self> {
        config.validate()?;
        let retrieval = config.retrieval_config()?;
        let catalog = ItemCatalog::from_path(&config.data.catalog, &index.graph)?;
        let histories = Histories::from_path(&config.data.histories, &catalog, config.data.max_history)?;
        Ok(Engine {
            config,
            retrieval,
            index,
            catalog,
            histories,
        })
    }

    /// Loads a persisted index.
    pub fn open(config: EngineConfig, index_dir: &Path) -> Result<Self> {
        config.validate()?;
        let index = Index::load(index_dir, config.text_encoder()?)?;
        Self::new(config, index)
    }

    /// Builds the index in memory.
    pub fn build(config: EngineConfig) -> Result<Self> {
        let index = build_index(&config)?;
        Self::new(config, index)
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.index.graph
    }

    pub fn retriever(&self) -> Retriever<'_> {
        Retriever {
            graph: &self.index.graph,
            catalog: &self.catalog,
            store: &self.index.store,
            clusters: &self.index.clusters,
        }
    }

    pub fn retrieve(&self, user: &str, target: &str) -> Result<Retrieval> {
        let history = self.histories.get(user)?;
        self.retriever().retrieve(history, target, &self.retrieval)
    }

    pub fn record(&self, r: &Retrieval) -> RetrievalRecord {
        RetrievalRecord::new(r, &self.index.graph)
    }

    /// Every `(user, target)` pair listed in the histories, in user order.
    pub fn queries(&self) -> Vec<(String, String)> {
        self.histories
            .iter()
            .flat_map(|h| h.targets.iter().map(move |t| (h.user.clone(), t.clone())))
            .collect()
    }

    pub fn prepare(&self, user: &str, target: &str) -> Result<Prepared> {
        let history = self.histories.get(user)?;
        let item = self.catalog.get(target)?;
        let (evidence, retrieval) = if self.config.ablation.no_kg {
            (Vec::new(), None)
        } else {
            let r = self.retriever().retrieve(history, target, &self.retrieval)?;
            let lines = if r.selected.is_empty() {
                Vec::new()
            } else {
                serialize_paths(&r.paths(), &self.index.graph)?
            };
            (lines, Some(r))
        };
        let instruction = self.config.generation.instruction.as_deref().unwrap_or(DEFAULT_INSTRUCTION);
        let bundle = assemble_prompt(instruction, &history_text(history, &self.catalog)?, &item.title, evidence);
        Ok(Prepared { bundle, retrieval })
    }

    pub fn generator(&self) -> Result<Box<dyn Generator>> {
        Ok(match self.config.generation.backend {
            GenerationBackend::Stub => Box::new(StubGenerator),
            GenerationBackend::Http => Box::new(HttpGenerator::new(self.config.generate_settings()?)?),
        })
    }

    pub fn explain(&self, user: &str, target: &str, generator: &dyn Generator) -> Result<(Prepared, ExplanationRecord)> {
        let prepared = self.prepare(user, target)?;
        let decoding = self.config.decoding();
        let response = generator.generate(&prepared.bundle, &decoding)?;
        if response.text.trim().is_empty() {
            return Err(Error::Backend("empty explanation".into()));
        }
        let record = ExplanationRecord {
            user: user.to_owned(),
            item: target.to_owned(),
            explanation: response.text,
            backend: response.backend,
            prompt_sha256: sha256_hex(&prepared.bundle.text()),
            evidence: prepared.bundle.evidence.clone(),
            decoding,
        };
        Ok((prepared, record))
    }
}
