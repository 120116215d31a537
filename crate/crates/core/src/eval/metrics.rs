//! Per-feature verdicts and per-instance hallucination rates.
//!
//! A generated feature is factual when it belongs to the item's attribute
//! set. It is preference-consistent when it belongs to the user's positive
//! history, or when its embedding is close enough to the mean embedding of
//! that history:
//!
//! ```text
//! F-EHR = |F_gen \ F_item| / |F_gen|
//! P-EHR = mean over f in F_gen of [f not in hist+ and cos(phi(f), h_u) < tau]
//! ```
//!
//! Both rates are undefined (unscoreable) for an empty `F_gen`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embedding::TextEncoder;
use crate::error::{Error, Result};
use crate::kg::UserHistory;
use crate::text::normalize_feature;
use crate::vector::{cosine, Vector};

pub const DEFAULT_TAU: f64 = 0.40;

/// Positive history features and their mean embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    pub user: String,
    pub positive: BTreeSet<String>,
    /// Unnormalized mean of the positive feature embeddings; zero when the
    /// positive set is empty, so every proxy score is then 0.
    pub intent: Vector,
    pub tau: f64,
}

impl PreferenceProfile {
    pub fn new(user: impl Into<String>, positive: BTreeSet<String>, encoder: &TextEncoder, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let positive: BTreeSet<String> = positive.iter().map(|f| normalize_feature(f)).filter(|f| !f.is_empty()).collect();
        let vectors = positive.iter().map(|f| encoder.encode(f)).collect::<Result<Vec<_>>>()?;
        let intent = match Vector::mean(&vectors) {
            Some(v) => v,
            None => Vector::zeros(encoder_dim(encoder, &vectors)?),
        };
        Ok(PreferenceProfile {
            user: user.into(),
            positive,
            intent,
            tau,
        })
    }

    pub fn from_history(history: &UserHistory, encoder: &TextEncoder, tau: f64) -> Result<Self> {
        Self::new(history.user.clone(), history.positive_features(), encoder, tau)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(PreferenceProfile { tau, ..self.clone() })
    }

    pub fn is_historical(&self, feature: &str) -> bool {
        self.positive.contains(&normalize_feature(feature))
    }
}

fn encoder_dim(encoder: &TextEncoder, vectors: &[Vector]) -> Result<usize> {
    if let Some(v) = vectors.first() {
        return Ok(v.dim());
    }
    match encoder {
        TextEncoder::Hash { dim, .. } => Ok(*dim),
        TextEncoder::Remote(r) => match r.dim() {
            Some(d) => Ok(d),
            // probe once to learn the dimension
            None => Ok(encoder.encode("probe")?.dim()),
        },
    }
}

pub fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::Config(format!("tau must be in [0, 1], got {tau}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyScore {
    pub score: f64,
    pub valid: bool,
}

/// Proxy score of `feature` for the profile's user. The threshold is closed:
/// a score equal to tau counts as aligned.
pub fn preference_proxy(profile: &PreferenceProfile, feature: &str, encoder: &TextEncoder) -> Result<ProxyScore> {
    let score = cosine(&encoder.encode(feature)?, &profile.intent)?;
    Ok(ProxyScore {
        score,
        valid: profile.is_historical(feature) || score >= profile.tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Factuality {
    Factual,
    Nonfactual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Alignment {
    AlignedHist,
    AlignedProxy,
    Inconsistent,
}

impl Alignment {
    pub fn decide(historical: bool, score: f64, tau: f64) -> Self {
        if historical {
            Alignment::AlignedHist
        } else if score >= tau {
            Alignment::AlignedProxy
        } else {
            Alignment::Inconsistent
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVerdict {
    pub feature: String,
    pub factuality: Factuality,
    pub alignment: Alignment,
    pub historical: bool,
    pub proxy_score: f64,
}

pub fn judge_features(
    features: &BTreeSet<String>,
    item_features: &BTreeSet<String>,
    profile: &PreferenceProfile,
    encoder: &TextEncoder,
) -> Result<Vec<FeatureVerdict>> {
    features
        .iter()
        .map(|f| {
            let proxy = preference_proxy(profile, f, encoder)?;
            let historical = profile.is_historical(f);
            Ok(FeatureVerdict {
                feature: f.clone(),
                factuality: if item_features.contains(f) {
                    Factuality::Factual
                } else {
                    Factuality::Nonfactual
                },
                alignment: Alignment::decide(historical, proxy.score, profile.tau),
                historical,
                proxy_score: proxy.score,
            })
        })
        .collect()
}

/// `None` when `generated` is empty.
pub fn f_ehr(generated: &BTreeSet<String>, item_features: &BTreeSet<String>) -> Option<f64> {
    if generated.is_empty() {
        return None;
    }
    let missing = generated.difference(item_features).count();
    Some(missing as f64 / generated.len() as f64)
}

/// Mean inconsistency penalty over the verdicts, re-deciding each at `tau`.
/// `None` when there are no verdicts.
pub fn p_ehr(verdicts: &[FeatureVerdict], tau: f64) -> Option<f64> {
    if verdicts.is_empty() {
        return None;
    }
    let bad = verdicts
        .iter()
        .filter(|v| Alignment::decide(v.historical, v.proxy_score, tau) == Alignment::Inconsistent)
        .count();
    Some(bad as f64 / verdicts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc() -> TextEncoder {
        TextEncoder::Hash { seed: 3, dim: 64 }
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn verdict(historical: bool, score: f64) -> FeatureVerdict {
        FeatureVerdict {
            feature: String::new(),
            factuality: Factuality::Factual,
            alignment: Alignment::decide(historical, score, DEFAULT_TAU),
            historical,
            proxy_score: score,
        }
    }

    #[test]
    fn f_ehr_counts() {
        assert_eq!(f_ehr(&set(&["a", "b"]), &set(&["a", "b", "c"])), Some(0.0));
        assert_eq!(f_ehr(&set(&["a", "b", "c"]), &set(&["a", "b"])), Some(1.0 / 3.0));
        assert_eq!(f_ehr(&set(&["x"]), &set(&["a"])), Some(1.0));
        assert_eq!(f_ehr(&set(&[]), &set(&["a"])), None);
    }

    #[test]
    fn p_ehr_counts() {
        let vs = [verdict(true, -0.2), verdict(false, 0.7), verdict(false, 0.1), verdict(false, 0.39)];
        assert_eq!(p_ehr(&vs, DEFAULT_TAU), Some(0.5));
        assert_eq!(p_ehr(&[], DEFAULT_TAU), None);
        assert_eq!(p_ehr(&vs[..1], DEFAULT_TAU), Some(0.0));
    }

    #[test]
    fn closed_threshold() {
        assert_eq!(Alignment::decide(false, 0.4, 0.4), Alignment::AlignedProxy);
        assert_eq!(Alignment::decide(false, 0.4 - 1e-15, 0.4), Alignment::Inconsistent);
        assert_eq!(Alignment::decide(true, -1.0, 0.4), Alignment::AlignedHist);
    }

    #[test]
    fn history_member_is_valid_regardless_of_score() {
        let p = PreferenceProfile::new("u", set(&["humor", "sisterhood", "grief", "war"]), &enc(), 1.0).unwrap();
        let r = preference_proxy(&p, "Humor", &enc()).unwrap();
        assert!(r.valid);
        assert!(r.score < 1.0);
    }

    #[test]
    fn single_feature_history_proxies_itself() {
        let p = PreferenceProfile::new("u", set(&["humor"]), &enc(), DEFAULT_TAU).unwrap();
        let mut q = p.clone();
        q.positive.clear();
        let r = preference_proxy(&q, "humor", &enc()).unwrap();
        assert!((r.score - 1.0).abs() < 1e-12);
        assert!(r.valid);
    }

    #[test]
    fn empty_history_is_all_inconsistent() {
        let p = PreferenceProfile::new("u", BTreeSet::new(), &enc(), DEFAULT_TAU).unwrap();
        assert_eq!(p.intent.dim(), 64);
        let vs = judge_features(&set(&["plot", "cgi"]), &set(&["plot"]), &p, &enc()).unwrap();
        assert!(vs.iter().all(|v| v.alignment == Alignment::Inconsistent && v.proxy_score == 0.0));
        assert_eq!(p_ehr(&vs, p.tau), Some(1.0));
    }

    #[test]
    fn tau_out_of_range() {
        assert!(PreferenceProfile::new("u", BTreeSet::new(), &enc(), 1.5).is_err());
        assert!(PreferenceProfile::new("u", BTreeSet::new(), &enc(), -0.1).is_err());
    }
}
