//! On-disk model container.
//!
//! A model file is a JSON object
//!
//! ```json
//! { "format": "stressdetect-model", "version": 1, "model": { ... } }
//! ```
//!
//! where `model` holds the feature schema (ordered column names and
//! sources), the per-column standardization statistics, the classifier
//! parameters tagged by `kind` (`svm_rbf` or `random_forest`) and the
//! training metadata. Numbers are written in shortest round-trip form, so a
//! saved model predicts bit-identically after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stressdetect_core::models::{ModelParams, TrainedModel, TreeNode};

use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};

pub const MODEL_FORMAT: &str = "stressdetect-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'static str,
    version: u32,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct Body {
    model: TrainedModel,
}

pub fn model_to_json(model: &TrainedModel) -> Result<String> {
    let env = Envelope { format: MODEL_FORMAT, version: MODEL_FORMAT_VERSION, model };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Error::Config(format!("cannot serialize model: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str, path: &Path) -> Result<TrainedModel> {
    let corrupt = |reason: String| Error::CorruptModelFile { path: path.into(), reason };
    let header: Header = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if header.format != MODEL_FORMAT {
        return Err(corrupt(format!("unknown format tag {:?}", header.format)));
    }
    if header.version != MODEL_FORMAT_VERSION {
        return Err(Error::SchemaVersionMismatch { found: header.version, expected: MODEL_FORMAT_VERSION });
    }
    let body: Body = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    check_consistency(&body.model).map_err(corrupt)?;
    Ok(body.model)
}

fn check_consistency(m: &TrainedModel) -> std::result::Result<(), String> {
    let p = m.schema.len();
    if m.norm_stats.stats.len() != p {
        return Err(format!("{} normalization entries for {p} features", m.norm_stats.stats.len()));
    }
    match &m.params {
        ModelParams::SvmRbf(s) => {
            if s.coef.len() != s.support_vectors.len() {
                return Err("support vector and coefficient counts differ".into());
            }
            if s.support_vectors.iter().any(|v| v.len() != p) {
                return Err(format!("support vector dimension differs from {p} features"));
            }
        }
        ModelParams::RandomForest(f) => {
            if f.trees.is_empty() {
                return Err("forest has no trees".into());
            }
            for t in &f.trees {
                let n = t.nodes.len();
                if n == 0 {
                    return Err("empty tree".into());
                }
                for (i, node) in t.nodes.iter().enumerate() {
                    if let TreeNode::Split { feature, left, right, .. } = *node {
                        if feature >= p || left <= i || right <= i || left >= n || right >= n {
                            return Err("tree node index out of range".into());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    write_atomic(path, model_to_json(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    model_from_json(&read_to_string(path)?, path)
}
