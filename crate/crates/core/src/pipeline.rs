//! Session-level glue: preprocessing, EDA decomposition and feature
//! extraction for one device recording.

use serde::{Deserialize, Serialize};

use crate::eda::{decompose_eda, CvxEdaConfig, EdaDecomposition};
use crate::error::{Error, Result};
use crate::eval::ModelDesc;
use crate::features::{build_feature_matrix, FeatureMatrix, Scenario, WindowSpec};
use crate::preprocess::{preprocess_session, PreprocessedSession};
use crate::signal::{DeviceSession, SignalKind};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub window: WindowSpec,
    pub cvxeda: CvxEdaConfig,
}

/// A preprocessed session with its EDA decomposition when one was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSession {
    pub preprocessed: PreprocessedSession,
    pub decomposition: Option<EdaDecomposition>,
}

impl PreparedSession {
    pub fn features(&self, scenario: Scenario, model: ModelDesc, window: &WindowSpec) -> Result<FeatureMatrix> {
        let decomposition = match model {
            ModelDesc::HrvOnly => None,
            ModelDesc::HrvEda => {
                let d = self.decomposition.as_ref();
                Some(d.ok_or(Error::EdaNotSupportedForDevice(self.preprocessed.session.device))?)
            }
        };
        build_feature_matrix(&self.preprocessed.session, decomposition, scenario, window)
    }
}

/// Preprocesses `session` and, if `with_eda`, decomposes its normalized EDA.
pub fn prepare_session(session: &DeviceSession, config: &PipelineConfig, with_eda: bool) -> Result<PreparedSession> {
    if with_eda && !session.device.records_eda() {
        return Err(Error::EdaNotSupportedForDevice(session.device));
    }
    config.cvxeda.validate()?;
    config.window.validate()?;
    let preprocessed = preprocess_session(session)?;
    let decomposition = match (with_eda, preprocessed.session.signal(SignalKind::Eda)) {
        (false, _) => None,
        (true, None) => return Err(Error::Signal { kind: SignalKind::Eda, source: alloc::boxed::Box::new(Error::EmptySeries) }),
        (true, Some(eda)) => Some(decompose_eda(eda, &config.cvxeda).map_err(|e| e.for_signal(SignalKind::Eda))?),
    };
    Ok(PreparedSession { preprocessed, decomposition })
}

/// Feature matrix of one session for one scenario and model.
pub fn session_features(
    session: &DeviceSession,
    scenario: Scenario,
    model: ModelDesc,
    config: &PipelineConfig,
) -> Result<FeatureMatrix> {
    prepare_session(session, config, model == ModelDesc::HrvEda)?.features(scenario, model, &config.window)
}
