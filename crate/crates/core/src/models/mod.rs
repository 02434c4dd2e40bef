//! Stress classifiers: an RBF support vector machine with Platt-calibrated
//! probabilities and a CART random forest averaging per-tree leaf
//! fractions.
//!
//! Every [`TrainedModel`] carries its feature schema and the per-column
//! standardization fitted on its training rows; prediction re-applies that
//! stored transform and never refits it.

mod forest;
mod svm;

pub use forest::{rf_fit, Forest, RfConfig, Tree, TreeNode};
pub use svm::{
    platt_probability, rbf_kernel, sigmoid_train, smo_solve, svm_fit, DualSolution, PlattCoefficients, SvmConfig,
    SvmParams,
};

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSchema};
use crate::preprocess::NormStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    SvmRbf,
    RandomForest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SvmRbf => "svm_rbf",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

/// Per-column z-score fitted on training rows. Constant columns are only
/// centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub stats: Vec<NormStats>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Standardizer> {
        let p = rows.first().ok_or(Error::EmptyInput)?.len();
        let mut column = Vec::with_capacity(rows.len());
        let mut stats = Vec::with_capacity(p);
        for j in 0..p {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            stats.push(NormStats::of(&column));
        }
        Ok(Standardizer { stats })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.stats)
            .map(|(x, s)| {
                let scale = if s.std > 0.0 { s.std } else { 1.0 };
                (x - s.mean) / scale
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Free-form tag naming the training dataset.
    pub source: String,
    pub n_rows: usize,
    pub n_positive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    SvmRbf(SvmParams),
    RandomForest(Forest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: FeatureSchema,
    pub norm_stats: Standardizer,
    pub params: ModelParams,
    pub training_meta: TrainingMeta,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::SvmRbf(_) => ModelKind::SvmRbf,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.training_meta.source = source.into();
        self
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features, row has {}",
                self.schema.len(),
                row.len()
            )));
        }
        Ok(())
    }

    /// Raw score before calibration: the SVM decision value, or the forest
    /// probability.
    pub fn decision_value(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        let z = self.norm_stats.apply(row);
        Ok(match &self.params {
            ModelParams::SvmRbf(p) => p.decision_value(&z),
            ModelParams::RandomForest(f) => f.predict_proba(&z),
        })
    }

    /// Probability of the stress class for one row in schema order.
    pub fn predict_proba_row(&self, row: &[f64]) -> Result<f64> {
        let d = self.decision_value(row)?;
        Ok(match &self.params {
            ModelParams::SvmRbf(p) => platt_probability(d, &p.platt),
            ModelParams::RandomForest(_) => d,
        })
    }

    pub fn predict_proba_rows<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba_row(r.as_ref())).collect()
    }

    /// Probabilities for every row of `matrix`, whose schema must equal the
    /// model's.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.schema != self.schema {
            return Err(Error::SchemaMismatch(format!(
                "model schema has {} columns, matrix has {}",
                self.schema.len(),
                matrix.schema.len()
            )));
        }
        matrix.rows.iter().map(|r| self.predict_proba_row(&r.values)).collect()
    }
}

/// Either classifier's hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierConfig {
    SvmRbf(SvmConfig),
    RandomForest(RfConfig),
}

impl ClassifierConfig {
    pub fn fit(&self, matrix: &FeatureMatrix) -> Result<TrainedModel> {
        match self {
            ClassifierConfig::SvmRbf(c) => svm_fit(matrix, c),
            ClassifierConfig::RandomForest(c) => rf_fit(matrix, c),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierConfig::SvmRbf(_) => ModelKind::SvmRbf,
            ClassifierConfig::RandomForest(_) => ModelKind::RandomForest,
        }
    }
}

/// Standardized training rows, labels, and the fitted standardizer.
pub(crate) fn prepare(matrix: &FeatureMatrix) -> Result<(Vec<Vec<f64>>, Vec<u8>, Standardizer, TrainingMeta)> {
    if matrix.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !matrix.has_both_classes() {
        return Err(Error::SingleClassTraining);
    }
    let raw: Vec<&[f64]> = matrix.rows.iter().map(|r| r.values.as_slice()).collect();
    let std = Standardizer::fit(&raw)?;
    let x = raw.iter().map(|r| std.apply(r)).collect();
    let y = matrix.labels();
    let meta = TrainingMeta {
        source: String::new(),
        n_rows: y.len(),
        n_positive: y.iter().filter(|&&l| l == 1).count(),
    };
    Ok((x, y, std, meta))
}
