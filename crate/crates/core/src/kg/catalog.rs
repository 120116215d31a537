//! Item catalog and user interaction histories, both read from JSON lines.
//!
//! Catalog record:
//!
//! ```json
//! {"item": "eleanor_oliphant", "entity": "Eleanor Oliphant", "title": "Eleanor Oliphant Is Completely Fine", "attributes": ["loneliness", "humor"]}
//! ```
//!
//! `entity` defaults to `item` when omitted and must name a graph entity.
//!
//! History record:
//!
//! ```json
//! {"user": "alice", "interactions": [{"item": "little_women", "timestamp": 3,
//!   "features": [{"feature": "sisterhood", "polarity": 1, "sentence": "...", "score": 0.9}]}],
//!  "targets": ["eleanor_oliphant"]}
//! ```
//!
//! `features` and `targets` are optional.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::graph::{EntityId, KnowledgeGraph};
use crate::text::normalize_feature;

/// Default number of most recent interactions kept per user.
pub const DEFAULT_MAX_HISTORY: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ItemRecord {
    item: String,
    #[serde(default)]
    entity: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub entity: EntityId,
    pub title: String,
    /// Normalized ground-truth attributes.
    pub features: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ItemCatalog {
    items: Vec<Item>,
    by_id: HashMap<String, usize>,
    by_entity: HashMap<EntityId, usize>,
}

pub(crate) fn read_jsonl<T, R>(reader: R, source_name: &str) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_owned(),
            line: idx + 1,
            message,
        };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(out)
}

pub(crate) fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::io(path, e))
}

impl ItemCatalog {
    pub fn load<R: BufRead>(reader: R, source_name: &str, graph: &KnowledgeGraph) -> Result<Self> {
        let records: Vec<ItemRecord> = read_jsonl(reader, source_name)?;
        let mut catalog = ItemCatalog::default();
        for (idx, rec) in records.into_iter().enumerate() {
            let entity_name = rec.entity.as_deref().unwrap_or(&rec.item);
            let entity = graph.entity(entity_name).map_err(|_| Error::Parse {
                source_name: source_name.to_owned(),
                line: idx + 1,
                message: format!("item `{}` aligned to unknown entity `{entity_name}`", rec.item),
            })?;
            if catalog.by_id.contains_key(&rec.item) {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    line: idx + 1,
                    message: format!("duplicate item `{}`", rec.item),
                });
            }
            if catalog.by_entity.contains_key(&entity) {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    line: idx + 1,
                    message: format!("entity `{entity_name}` aligned to more than one item"),
                });
            }
            let features = rec
                .attributes
                .iter()
                .map(|a| normalize_feature(a))
                .filter(|a| !a.is_empty())
                .collect();
            let pos = catalog.items.len();
            catalog.by_id.insert(rec.item.clone(), pos);
            catalog.by_entity.insert(entity, pos);
            catalog.items.push(Item {
                title: rec.title.unwrap_or_else(|| rec.item.clone()),
                id: rec.item,
                entity,
                features,
            });
        }
        Ok(catalog)
    }

    pub fn from_path(path: &Path, graph: &KnowledgeGraph) -> Result<Self> {
        Self::load(open(path)?, &path.display().to_string(), graph)
    }

    pub fn from_str_jsonl(text: &str, graph: &KnowledgeGraph) -> Result<Self> {
        Self::load(text.as_bytes(), "<string>", graph)
    }

    pub fn get(&self, item: &str) -> Result<&Item> {
        self.by_id
            .get(item)
            .map(|&i| &self.items[i])
            .ok_or_else(|| Error::unknown("item", item))
    }

    pub fn by_entity(&self, entity: EntityId) -> Option<&Item> {
        self.by_entity.get(&entity).map(|&i| &self.items[i])
    }

    pub fn is_item(&self, entity: EntityId) -> bool {
        self.by_entity.contains_key(&entity)
    }

    /// Ground-truth attribute set of an item.
    pub fn item_features(&self, item: &str) -> Result<&BTreeSet<String>> {
        self.get(item).map(|i| &i.features)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Opinion polarity of an extracted feature mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Polarity {
    Positive,
    Negative,
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(format!("polarity must be 1 or -1, got {other}")),
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        match p {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

/// A (feature, opinion, sentence, score) quadruple extracted from a review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMention {
    pub feature: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub sentence: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub item: String,
    pub timestamp: i64,
    #[serde(default)]
    pub features: Vec<FeatureMention>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HistoryRecord {
    user: String,
    interactions: Vec<Interaction>,
    #[serde(default)]
    targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserHistory {
    pub user: String,
    /// Timestamp-ascending, most recent `max_history` interactions.
    pub interactions: Vec<Interaction>,
    /// Items to explain for this user, when the dataset provides them.
    pub targets: Vec<String>,
}

impl UserHistory {
    pub fn new(user: impl Into<String>, mut interactions: Vec<Interaction>, max_history: usize) -> Self {
        interactions.sort_by_key(|i| i.timestamp);
        if interactions.len() > max_history {
            interactions.drain(..interactions.len() - max_history);
        }
        UserHistory {
            user: user.into(),
            interactions,
            targets: Vec::new(),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.interactions.iter().map(|i| i.item.as_str())
    }

    /// Features whose polarity-weighted score summed over the history is positive.
    pub fn positive_features(&self) -> BTreeSet<String> {
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for m in self.interactions.iter().flat_map(|i| &i.features) {
            let f = normalize_feature(&m.feature);
            if f.is_empty() {
                continue;
            }
            *totals.entry(f).or_insert(0.0) += m.polarity.sign() * m.score;
        }
        totals
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(f, _)| f)
            .collect()
    }
}

/// All user histories, keyed by user id.
#[derive(Debug, Clone, Default)]
pub struct Histories {
    users: BTreeMap<String, UserHistory>,
}

impl Histories {
    pub fn load<R: BufRead>(reader: R, source_name: &str, catalog: &ItemCatalog, max_history: usize) -> Result<Self> {
        let records: Vec<HistoryRecord> = read_jsonl(reader, source_name)?;
        let mut users = BTreeMap::new();
        for (idx, rec) in records.into_iter().enumerate() {
            let err = |message: String| Error::Parse {
                source_name: source_name.to_owned(),
                line: idx + 1,
                message,
            };
            for it in rec.interactions.iter().map(|i| &i.item).chain(&rec.targets) {
                if catalog.get(it).is_err() {
                    return Err(err(format!("unknown item `{it}`")));
                }
            }
            if users.contains_key(&rec.user) {
                return Err(err(format!("duplicate user `{}`", rec.user)));
            }
            let mut h = UserHistory::new(rec.user.clone(), rec.interactions, max_history);
            h.targets = rec.targets;
            users.insert(rec.user, h);
        }
        Ok(Histories { users })
    }

    pub fn from_path(path: &Path, catalog: &ItemCatalog, max_history: usize) -> Result<Self> {
        Self::load(open(path)?, &path.display().to_string(), catalog, max_history)
    }

    pub fn from_str_jsonl(text: &str, catalog: &ItemCatalog, max_history: usize) -> Result<Self> {
        Self::load(text.as_bytes(), "<string>", catalog, max_history)
    }

    pub fn get(&self, user: &str) -> Result<&UserHistory> {
        self.users.get(user).ok_or_else(|| Error::unknown("user", user))
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserHistory> {
        self.users.values()
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> KnowledgeGraph {
        KnowledgeGraph::from_str_tsv("m1\tr\ta\nm2\tr\ta\nm3\tr\tb\n").unwrap()
    }

    #[test]
    fn features_are_case_folded_and_deduplicated() {
        let g = graph();
        let cat = ItemCatalog::from_str_jsonl(
            r#"{"item":"m1","attributes":["Plot","plot"," humor "]}
{"item":"m2"}"#,
            &g,
        )
        .unwrap();
        let f: Vec<&str> = cat.item_features("m1").unwrap().iter().map(String::as_str).collect();
        assert_eq!(f, vec!["humor", "plot"]);
        assert!(cat.item_features("m2").unwrap().is_empty());
        assert!(cat.item_features("nope").is_err());
    }

    #[test]
    fn unaligned_item_is_rejected() {
        let g = graph();
        let err = ItemCatalog::from_str_jsonl("{\"item\":\"zz\"}", &g).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    fn mention(f: &str, p: i8, score: f64) -> FeatureMention {
        FeatureMention {
            feature: f.into(),
            polarity: p.try_into().unwrap(),
            sentence: String::new(),
            score,
        }
    }

    #[test]
    fn history_sorted_and_truncated() {
        let inter: Vec<Interaction> = (0..15)
            .rev()
            .map(|t| Interaction {
                item: format!("i{t}"),
                timestamp: t,
                features: vec![],
            })
            .collect();
        let h = UserHistory::new("u", inter, DEFAULT_MAX_HISTORY);
        let ts: Vec<i64> = h.interactions.iter().map(|i| i.timestamp).collect();
        assert_eq!(ts, (5..15).collect::<Vec<_>>());
    }

    #[test]
    fn positive_features_sum_polarity() {
        let h = UserHistory::new(
            "u",
            vec![
                Interaction {
                    item: "a".into(),
                    timestamp: 1,
                    features: vec![mention("Humor", 1, 0.5), mention("pacing", -1, 0.9)],
                },
                Interaction {
                    item: "b".into(),
                    timestamp: 2,
                    features: vec![mention("humor", -1, 0.2), mention("pacing", 1, 0.3), mention("plot", 1, 0.0)],
                },
            ],
            10,
        );
        let pos: Vec<String> = h.positive_features().into_iter().collect();
        assert_eq!(pos, vec!["humor".to_string()]);
    }

    #[test]
    fn bad_polarity_is_a_parse_error() {
        let g = graph();
        let cat = ItemCatalog::from_str_jsonl("{\"item\":\"m1\"}", &g).unwrap();
        let text = r#"{"user":"u","interactions":[{"item":"m1","timestamp":1,"features":[{"feature":"x","polarity":0,"score":1}]}]}"#;
        assert!(Histories::from_str_jsonl(text, &cat, 10).is_err());
    }
}
