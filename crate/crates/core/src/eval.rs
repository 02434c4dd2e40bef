//! AUROC scoring, leave-one-subject-out cross-validation and frozen-model
//! transfer evaluation, summarized as the median and interquartile range
//! over subjects.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Scenario};
use crate::models::{ClassifierConfig, TrainedModel};
use crate::signal::DeviceKind;
use crate::stats;

/// Mann-Whitney AUROC: `(wins + ties / 2) / (n1 * n0)` over all
/// positive/negative pairs, computed from midranks.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { timestamps: scores.len(), values: labels.len() });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue(i));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean
        let midrank = (i + j + 2) as f64 / 2.0;
        rank_sum += midrank * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

/// Median and quartiles by linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = stats::sorted(values);
    Ok(Summary {
        median: stats::percentile_sorted(&s, 50.0),
        q1: stats::percentile_sorted(&s, 25.0),
        q3: stats::percentile_sorted(&s, 75.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelDesc {
    HrvOnly,
    HrvEda,
}

impl ModelDesc {
    pub fn label(self) -> &'static str {
        match self {
            ModelDesc::HrvOnly => "HRV",
            ModelDesc::HrvEda => "HRV+EDA",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ModelDesc::HrvOnly => "hrv",
            ModelDesc::HrvEda => "hrv_eda",
        }
    }

    pub fn parse(s: &str) -> Option<ModelDesc> {
        match s {
            "hrv" | "HRV" => Some(ModelDesc::HrvOnly),
            "hrv_eda" | "HRV+EDA" => Some(ModelDesc::HrvEda),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvalMode {
    Loso,
    Pretrained,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::Loso => "LOSO",
            EvalMode::Pretrained => "Pretrained",
        }
    }
}

/// A subject left out of the summary and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSubject {
    pub subject_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub device: DeviceKind,
    pub scenario: Scenario,
    pub model_desc: ModelDesc,
    pub mode: EvalMode,
    pub per_subject_auroc: BTreeMap<String, f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub skipped: Vec<SkippedSubject>,
}

impl EvalReport {
    fn new(
        device: DeviceKind,
        scenario: Scenario,
        model_desc: ModelDesc,
        mode: EvalMode,
        per_subject_auroc: BTreeMap<String, f64>,
        skipped: Vec<SkippedSubject>,
    ) -> Result<EvalReport> {
        let values: Vec<f64> = per_subject_auroc.values().copied().collect();
        let s = summarize(&values)?;
        Ok(EvalReport { device, scenario, model_desc, mode, per_subject_auroc, median: s.median, q1: s.q1, q3: s.q3, skipped })
    }
}

fn subject_of(m: &FeatureMatrix) -> Result<&str> {
    m.rows.first().map(|r| r.subject_id.as_str()).ok_or(Error::EmptyInput)
}

fn check_cohort(matrices: &[FeatureMatrix]) -> Result<()> {
    let first = matrices.first().ok_or(Error::EmptyInput)?;
    let mut seen = BTreeMap::new();
    for m in matrices {
        if m.schema != first.schema {
            return Err(Error::SchemaMismatch("subjects have different feature schemas".to_string()));
        }
        let id = subject_of(m)?;
        if m.rows.iter().any(|r| r.subject_id != id) || seen.insert(id, ()).is_some() {
            return Err(Error::DuplicateSubject(id.to_string()));
        }
    }
    Ok(())
}

fn model_desc_of(m: &FeatureMatrix) -> ModelDesc {
    if m.schema.has_eda() {
        ModelDesc::HrvEda
    } else {
        ModelDesc::HrvOnly
    }
}

/// Leave-one-subject-out cross-validation; `matrices` holds one matrix per
/// subject. Held-out subjects lacking a class, or whose complement lacks
/// one, are skipped and listed in the report.
pub fn loso(matrices: &[FeatureMatrix], config: &ClassifierConfig) -> Result<EvalReport> {
    if matrices.len() < 2 {
        return Err(Error::TooFewSubjects(matrices.len()));
    }
    check_cohort(matrices)?;
    let mut per_subject = BTreeMap::new();
    let mut skipped = Vec::new();
    for (k, held) in matrices.iter().enumerate() {
        let id = subject_of(held)?;
        if !held.has_both_classes() {
            skipped.push(SkippedSubject { subject_id: id.to_string(), reason: Error::SingleClassLabels.to_string() });
            continue;
        }
        let train = FeatureMatrix::concat(matrices.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, m)| m))?;
        assert!(
            train.rows.iter().all(|r| r.subject_id != id),
            "LOSO leakage: rows of held-out subject {id} in the training split"
        );
        let model = match config.fit(&train) {
            Ok(m) => m,
            Err(Error::SingleClassTraining) => {
                skipped.push(SkippedSubject {
                    subject_id: id.to_string(),
                    reason: Error::SingleClassTraining.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let scores = model.predict_proba(held)?;
        per_subject.insert(id.to_string(), auroc(&scores, &held.labels())?);
    }
    let first = &matrices[0];
    EvalReport::new(first.device, first.scenario, model_desc_of(first), EvalMode::Loso, per_subject, skipped)
}

/// Per-subject AUROC of a frozen model; nothing is refitted.
pub fn pretrained_eval(model: &TrainedModel, matrices: &[FeatureMatrix]) -> Result<EvalReport> {
    check_cohort(matrices)?;
    let mut per_subject = BTreeMap::new();
    let mut skipped = Vec::new();
    for m in matrices {
        let id = subject_of(m)?;
        let scores = model.predict_proba(m)?;
        match auroc(&scores, &m.labels()) {
            Ok(a) => {
                per_subject.insert(id.to_string(), a);
            }
            Err(Error::SingleClassLabels) => {
                skipped.push(SkippedSubject { subject_id: id.to_string(), reason: Error::SingleClassLabels.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    let first = &matrices[0];
    EvalReport::new(first.device, first.scenario, model_desc_of(first), EvalMode::Pretrained, per_subject, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClassLabels));
        assert_eq!(auroc(&[0.1, f64::NAN], &[0, 1]), Err(Error::NonFiniteValue(1)));
    }

    #[test]
    fn summarize_examples() {
        assert_eq!(summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap(), Summary { median: 2.5, q1: 1.75, q3: 3.25 });
        assert_eq!(summarize(&[0.7]).unwrap(), Summary { median: 0.7, q1: 0.7, q3: 0.7 });
        assert_eq!(summarize(&[]), Err(Error::EmptyInput));
    }
}
