//! Lexicon-based feature extraction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Histories, ItemCatalog};
use crate::text::normalize_feature;

/// Where an instance's feature set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Lexicon,
    Provided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub features: BTreeSet<String>,
    pub provenance: Provenance,
}

impl FeatureSet {
    pub fn provided<I, S>(features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        FeatureSet {
            features: features
                .into_iter()
                .map(|f| normalize_feature(f.as_ref()))
                .filter(|f| !f.is_empty())
                .collect(),
            provenance: Provenance::Provided,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Case-folded phrase vocabulary, matched longest first on word boundaries.
#[derive(Debug, Clone)]
pub struct FeatureLexicon {
    // longest first, then lexicographic
    entries: Vec<String>,
}

impl FeatureLexicon {
    pub fn new<I, S>(vocabulary: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: BTreeSet<String> = vocabulary
            .into_iter()
            .map(|f| normalize_feature(f.as_ref()))
            .filter(|f| !f.is_empty())
            .collect();
        if set.is_empty() {
            return Err(Error::EmptyInput("feature vocabulary"));
        }
        let mut entries: Vec<String> = set.into_iter().collect();
        entries.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
        Ok(FeatureLexicon { entries })
    }

    /// Every item attribute plus every feature mentioned in any history.
    pub fn from_data(catalog: &ItemCatalog, histories: &Histories) -> Result<Self> {
        let item_features = catalog.items().iter().flat_map(|i| i.features.iter().cloned());
        let history_features = histories
            .iter()
            .flat_map(|h| h.interactions.iter().flat_map(|i| i.features.iter().map(|m| m.feature.clone())))
            .collect::<Vec<_>>();
        Self::new(item_features.chain(history_features))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, feature: &str) -> bool {
        let f = normalize_feature(feature);
        self.entries.contains(&f)
    }

    pub fn extract(&self, text: &str) -> FeatureSet {
        let folded = normalize_feature(text);
        let mut claimed: Vec<(usize, usize)> = Vec::new();
        let mut found = BTreeSet::new();
        for entry in &self.entries {
            for (start, _) in folded.match_indices(entry.as_str()) {
                let end = start + entry.len();
                if !on_boundary(&folded, start, end) {
                    continue;
                }
                if claimed.iter().any(|&(s, e)| start < e && s < end) {
                    continue;
                }
                claimed.push((start, end));
                found.insert(entry.clone());
            }
        }
        FeatureSet {
            features: found,
            provenance: Provenance::Lexicon,
        }
    }
}

fn on_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

/// Extracts with a throwaway lexicon built from `vocabulary`.
pub fn extract_features<I, S>(text: &str, vocabulary: I) -> Result<FeatureSet>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Ok(FeatureLexicon::new(vocabulary)?.extract(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn whole_word_matches() {
        let f = extract_features("Great PLOT and humor!", ["plot", "humor", "cgi"]).unwrap();
        assert_eq!(f.features, set(&["plot", "humor"]));
        assert_eq!(f.provenance, Provenance::Lexicon);
        assert!(extract_features("plotting", ["plot"]).unwrap().is_empty());
        assert!(extract_features("subplot", ["plot"]).unwrap().is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let f = extract_features("plot twist", ["plot twist", "plot"]).unwrap();
        assert_eq!(f.features, set(&["plot twist"]));
        let f = extract_features("a plot twist and a plot", ["plot twist", "plot"]).unwrap();
        assert_eq!(f.features, set(&["plot twist", "plot"]));
    }

    #[test]
    fn duplicates_collapse() {
        let f = extract_features("humor, humor, Humor", ["humor"]).unwrap();
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn empty_vocabulary_rejected() {
        assert!(extract_features("x", Vec::<String>::new()).is_err());
        assert!(extract_features("x", ["  "]).is_err());
    }

    #[test]
    fn provided_features_are_normalized() {
        let f = FeatureSet::provided([" Plot ", "plot", ""]);
        assert_eq!(f.features, set(&["plot"]));
        assert_eq!(f.provenance, Provenance::Provided);
    }
}
