//! Corpus evaluation, threshold sweeps and report rendering.
//!
//! Corpus record, one per line:
//!
//! ```json
//! {"user": "alice", "item": "eleanor_oliphant", "explanation": "Recommended for its humor.", "features": ["humor"]}
//! ```
//!
//! When `features` is present it is used as-is; otherwise features are
//! extracted from `explanation` with the lexicon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::TextEncoder;
use crate::error::{Error, Result};
use crate::eval::extract::{FeatureLexicon, FeatureSet, Provenance};
use crate::eval::metrics::{
    check_tau, f_ehr, judge_features, p_ehr, Alignment, Factuality, FeatureVerdict, PreferenceProfile,
};
use crate::kg::catalog::{open, read_jsonl};
use crate::kg::{Histories, ItemCatalog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub user: String,
    pub item: String,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
}

pub fn read_corpus<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<CorpusRecord>> {
    read_jsonl(reader, source_name)
}

pub fn read_corpus_path(path: &Path) -> Result<Vec<CorpusRecord>> {
    read_corpus(open(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub user: String,
    pub item: String,
    pub explanation: String,
    pub provenance: Provenance,
    pub generated: BTreeSet<String>,
    pub item_features: BTreeSet<String>,
    pub verdicts: Vec<FeatureVerdict>,
    /// `None` marks an unscoreable instance.
    pub f_ehr: Option<f64>,
    pub p_ehr: Option<f64>,
}

impl EvalInstance {
    pub fn build(
        record: &CorpusRecord,
        features: FeatureSet,
        item_features: &BTreeSet<String>,
        profile: &PreferenceProfile,
        encoder: &TextEncoder,
    ) -> Result<Self> {
        let verdicts = judge_features(&features.features, item_features, profile, encoder)?;
        Ok(EvalInstance {
            user: record.user.clone(),
            item: record.item.clone(),
            explanation: record.explanation.clone(),
            provenance: features.provenance,
            f_ehr: f_ehr(&features.features, item_features),
            p_ehr: p_ehr(&verdicts, profile.tau),
            generated: features.features,
            item_features: item_features.clone(),
            verdicts,
        })
    }

    pub fn is_scoreable(&self) -> bool {
        !self.generated.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPoint {
    pub tau: f64,
    pub p_ehr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tau: f64,
    pub total: usize,
    pub scoreable: usize,
    pub unscoreable: usize,
    pub f_ehr: f64,
    pub p_ehr: f64,
    pub factuality: BTreeMap<Factuality, usize>,
    pub alignment: BTreeMap<Alignment, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_sweep: Vec<TauPoint>,
    pub instances: Vec<EvalInstance>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Reduces evaluated instances to corpus means over the scoreable ones.
pub fn evaluate_corpus(instances: Vec<EvalInstance>, tau: f64, grid: Option<&[f64]>) -> Result<EvalReport> {
    check_tau(tau)?;
    let scoreable: Vec<&EvalInstance> = instances.iter().filter(|i| i.is_scoreable()).collect();
    if scoreable.is_empty() {
        return Err(Error::NothingScoreable {
            unscoreable: instances.len(),
            total: instances.len(),
        });
    }
    let f = mean(scoreable.iter().map(|i| i.f_ehr.expect("scoreable")));
    let p = mean(scoreable.iter().map(|i| p_ehr(&i.verdicts, tau).expect("scoreable")));
    let mut factuality = BTreeMap::new();
    let mut alignment = BTreeMap::new();
    for v in scoreable.iter().flat_map(|i| &i.verdicts) {
        *factuality.entry(v.factuality).or_insert(0) += 1;
        *alignment.entry(v.alignment).or_insert(0) += 1;
    }
    let tau_sweep = match grid {
        None => Vec::new(),
        Some(grid) => grid
            .iter()
            .map(|&t| {
                check_tau(t)?;
                Ok(TauPoint {
                    tau: t,
                    p_ehr: mean(scoreable.iter().map(|i| p_ehr(&i.verdicts, t).expect("scoreable"))),
                })
            })
            .collect::<Result<_>>()?,
    };
    let n_scoreable = scoreable.len();
    Ok(EvalReport {
        tau,
        total: instances.len(),
        scoreable: n_scoreable,
        unscoreable: instances.len() - n_scoreable,
        f_ehr: f,
        p_ehr: p,
        factuality,
        alignment,
        tau_sweep,
        instances,
    })
}

/// Evaluates corpus records against one catalog, history set and encoder.
pub struct Evaluator<'a> {
    pub catalog: &'a ItemCatalog,
    pub histories: &'a Histories,
    pub encoder: &'a TextEncoder,
    pub lexicon: FeatureLexicon,
    pub tau: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(catalog: &'a ItemCatalog, histories: &'a Histories, encoder: &'a TextEncoder, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Evaluator {
            lexicon: FeatureLexicon::from_data(catalog, histories)?,
            catalog,
            histories,
            encoder,
            tau,
        })
    }

    pub fn profile(&self, user: &str) -> Result<PreferenceProfile> {
        PreferenceProfile::from_history(self.histories.get(user)?, self.encoder, self.tau)
    }

    pub fn instance(&self, record: &CorpusRecord, profile: &PreferenceProfile) -> Result<EvalInstance> {
        let features = match &record.features {
            Some(fs) => FeatureSet::provided(fs),
            None => self.lexicon.extract(&record.explanation),
        };
        let item_features = self.catalog.item_features(&record.item)?;
        EvalInstance::build(record, features, item_features, profile, self.encoder)
    }

    pub fn run(&self, records: &[CorpusRecord], grid: Option<&[f64]>) -> Result<EvalReport> {
        if records.is_empty() {
            return Err(Error::EmptyInput("evaluation corpus"));
        }
        let users: BTreeSet<&str> = records.iter().map(|r| r.user.as_str()).collect();
        let profiles: BTreeMap<&str, PreferenceProfile> = users
            .into_iter()
            .map(|u| Ok((u, self.profile(u)?)))
            .collect::<Result<_>>()?;
        let instances = records
            .par_iter()
            .map(|r| self.instance(r, &profiles[r.user.as_str()]))
            .collect::<Result<Vec<_>>>()?;
        evaluate_corpus(instances, self.tau, grid)
    }
}

/// Inclusive grid `start, start + step, ..., <= end`, rounded to 12 decimals.
pub fn tau_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= end) {
        return Err(Error::Config(format!("invalid tau grid {start}:{end}:{step}")));
    }
    check_tau(start)?;
    check_tau(end)?;
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Parses `start:end:step`.
pub fn parse_tau_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("tau sweep must look like start:end:step, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    tau_grid(nums[0], nums[1], nums[2])
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"))
}

/// Human-readable summary.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:<24} {:>6} {:>8} {:>8}", "user", "item", "|F|", "F-EHR", "P-EHR");
    for i in &report.instances {
        let _ = writeln!(
            out,
            "{:<24} {:<24} {:>6} {:>8} {:>8}",
            i.user,
            i.item,
            i.generated.len(),
            fmt_rate(i.f_ehr),
            fmt_rate(i.p_ehr)
        );
    }
    let _ = writeln!(
        out,
        "\ninstances {} (scoreable {}, unscoreable {}), tau {:.2}",
        report.total, report.scoreable, report.unscoreable, report.tau
    );
    let _ = writeln!(out, "F-EHR {:.4}", report.f_ehr);
    let _ = writeln!(out, "P-EHR {:.4}", report.p_ehr);
    out
}

pub fn sweep_csv(report: &EvalReport) -> String {
    let mut out = String::from("tau,p_ehr\n");
    for p in &report.tau_sweep {
        let _ = writeln!(out, "{},{}", p.tau, p.p_ehr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(p: Option<f64>, f: Option<f64>) -> EvalInstance {
        let n = if p.is_some() { 1 } else { 0 };
        EvalInstance {
            user: "u".into(),
            item: "i".into(),
            explanation: String::new(),
            provenance: Provenance::Provided,
            generated: (0..n).map(|k| format!("f{k}")).collect(),
            item_features: BTreeSet::new(),
            verdicts: (0..n)
                .map(|_| FeatureVerdict {
                    feature: "f0".into(),
                    factuality: Factuality::Factual,
                    alignment: if p == Some(1.0) {
                        Alignment::Inconsistent
                    } else {
                        Alignment::AlignedHist
                    },
                    historical: p != Some(1.0),
                    proxy_score: 0.0,
                })
                .collect(),
            f_ehr: f,
            p_ehr: p,
        }
    }

    #[test]
    fn corpus_mean_skips_unscoreable() {
        let r = evaluate_corpus(
            vec![instance(Some(0.0), Some(0.0)), instance(Some(1.0), Some(1.0)), instance(None, None)],
            0.4,
            None,
        )
        .unwrap();
        assert_eq!((r.p_ehr, r.f_ehr), (0.5, 0.5));
        assert_eq!((r.total, r.scoreable, r.unscoreable), (3, 2, 1));
        let single = evaluate_corpus(vec![instance(Some(1.0), Some(0.0))], 0.4, None).unwrap();
        assert_eq!(single.p_ehr, 1.0);
    }

    #[test]
    fn nothing_scoreable() {
        let err = evaluate_corpus(vec![instance(None, None), instance(None, None)], 0.4, None).unwrap_err();
        assert!(matches!(err, Error::NothingScoreable { unscoreable: 2, total: 2 }), "{err}");
    }

    #[test]
    fn grid_shape() {
        let g = parse_tau_grid("0.0:1.0:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_tau_grid("0.4:0.4:0.1").unwrap(), vec![0.4]);
        assert!(parse_tau_grid("0:1").is_err());
        assert!(parse_tau_grid("0:1:0").is_err());
        assert!(parse_tau_grid("0:2:0.5").is_err());
    }

    #[test]
    fn csv_rows() {
        let r = evaluate_corpus(vec![instance(Some(0.0), Some(0.0))], 0.4, Some(&[0.0, 0.5])).unwrap();
        assert_eq!(sweep_csv(&r), "tau,p_ehr\n0,0\n0.5,0\n");
    }
}
