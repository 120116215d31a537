//! Text encoders: a seeded-hash bag-of-tokens default and a remote endpoint.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{HttpSettings, JsonClient};
use crate::text::tokens;
use crate::vector::Vector;

/// Key namespaces, so an entity, a relation and a token sharing a name get
/// unrelated vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Namespace {
    Entity,
    Relation,
    Token,
}

impl Namespace {
    fn tag(self) -> &'static [u8] {
        match self {
            Namespace::Entity => b"entity",
            Namespace::Relation => b"relation",
            Namespace::Token => b"token",
        }
    }
}

/// Unit vector drawn from a standard normal stream seeded by
/// SHA-256(namespace, seed, name).
pub fn hash_vector(ns: Namespace, seed: u64, name: &str, dim: usize) -> Vector {
    let mut h = Sha256::new();
    h.update(ns.tag());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    h.update([0u8]);
    h.update(name.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    Vector::new(raw).normalized()
}

#[derive(Debug, Serialize)]
struct EncodeRequest<'a> {
    texts: &'a [String],
}

#[derive(Debug, Deserialize)]
struct EncodeResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for a `{"texts": [..]} -> {"vectors": [[..], ..]}` endpoint, with a
/// per-text cache.
#[derive(Debug)]
pub struct RemoteEncoder {
    client: JsonClient,
    dim: Mutex<Option<usize>>,
    cache: Mutex<HashMap<String, Vector>>,
}

impl RemoteEncoder {
    pub fn new(settings: HttpSettings, dim: Option<usize>) -> Result<Self> {
        Ok(RemoteEncoder {
            client: JsonClient::new(settings)?,
            dim: Mutex::new(dim),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> Option<usize> {
        *self.dim.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn url(&self) -> &str {
        self.client.url()
    }

    pub fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        let missing: Vec<String> = {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            let mut seen = std::collections::HashSet::new();
            texts
                .iter()
                .filter(|t| !cache.contains_key(*t) && seen.insert(t.as_str()))
                .cloned()
                .collect()
        };
        if !missing.is_empty() {
            let resp: EncodeResponse = self.client.post(&EncodeRequest { texts: &missing })?;
            if resp.vectors.len() != missing.len() {
                return Err(Error::Backend(format!(
                    "encoder returned {} vectors for {} texts",
                    resp.vectors.len(),
                    missing.len()
                )));
            }
            let mut dim = self.dim.lock().unwrap_or_else(|e| e.into_inner());
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            for (text, raw) in missing.into_iter().zip(resp.vectors) {
                let expected = *dim.get_or_insert(raw.len());
                if raw.len() != expected {
                    return Err(Error::Dimension {
                        expected,
                        found: raw.len(),
                        context: Some(format!("encoder output for `{text}`")),
                    });
                }
                let v = Vector::new(raw);
                if !v.is_finite() {
                    return Err(Error::Backend(format!("encoder returned non-finite vector for `{text}`")));
                }
                cache.insert(text, v);
            }
        }
        let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        Ok(texts.iter().map(|t| cache[t].clone()).collect())
    }
}

#[derive(Debug)]
pub enum TextEncoder {
    Hash { seed: u64, dim: usize },
    Remote(RemoteEncoder),
}

impl TextEncoder {
    /// Encodes free text. The hash encoder returns the normalized mean of the
    /// case-folded token vectors.
    pub fn encode(&self, text: &str) -> Result<Vector> {
        let mut toks = tokens(text);
        if toks.is_empty() {
            return Err(Error::EmptyInput("text to encode"));
        }
        match self {
            TextEncoder::Hash { seed, dim } => {
                // sorted so the floating-point sum is independent of token order
                toks.sort_unstable();
                let vs: Vec<Vector> = toks
                    .iter()
                    .map(|t| hash_vector(Namespace::Token, *seed, t, *dim))
                    .collect();
                Ok(Vector::mean(&vs).expect("non-empty").normalized())
            }
            TextEncoder::Remote(r) => {
                let text = text.trim().to_owned();
                Ok(r.encode_batch(std::slice::from_ref(&text))?.remove(0))
            }
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TextEncoder::Hash { .. } => "hash",
            TextEncoder::Remote(_) => "http",
        }
    }
}
