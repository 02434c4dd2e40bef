//! The `synth`, `features`, `train`, `eval` and `report` commands.

use std::path::{Path, PathBuf};

use serde::Serialize;
use stressdetect_core::eval::{loso, pretrained_eval, EvalMode, EvalReport, ModelDesc};
use stressdetect_core::features::{FeatureMatrix, FeatureSchema};
use stressdetect_core::models::TrainedModel;
use stressdetect_core::pipeline::prepare_session;
use stressdetect_core::synth::{apply_device_noise, gen_cohort, CohortSpec, DeviceNoiseSpec, GroundTruth};
use stressdetect_core::{DeviceKind, SignalKind};

use crate::config::Settings;
use crate::error::{Error, Result, ResultExt};
use crate::export::{decomposition_csv, feature_csv, load_feature_csv};
use crate::fsutil::{read_to_string, write_atomic};
use crate::ingest::{
    default_protocol, device_dir, load_protocol_file, load_session, protocol_text, signal_csv, signal_file_name,
    subject_dirs, ProtocolFile, PROTOCOL_FILE_NAME,
};
use crate::model_file::{load_model, save_model};
use crate::report::render_report;

pub const MANIFEST_FILE_NAME: &str = "manifest.json";

pub fn schema_for(model: ModelDesc) -> FeatureSchema {
    match model {
        ModelDesc::HrvOnly => FeatureSchema::hrv(),
        ModelDesc::HrvEda => FeatureSchema::hrv_eda(),
    }
}

fn mix_seed(seed: u64, subject: u64, device: u64) -> u64 {
    let mut z = seed ^ subject.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ device.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a CohortSpec,
    noise: Vec<(DeviceKind, DeviceNoiseSpec)>,
    subjects: Vec<&'a GroundTruth>,
}

fn fallback_protocol(s: &Settings) -> Result<ProtocolFile> {
    match &s.protocol {
        Some(p) => load_protocol_file(p),
        None => Ok(default_protocol()),
    }
}

/// Writes a synthetic cohort in the on-disk device layout plus a
/// ground-truth manifest. Returns the number of files written.
pub fn cmd_synth(s: &Settings) -> Result<usize> {
    let mut spec = s.synth.clone();
    if spec.protocol.is_none() && s.protocol.is_some() {
        spec.protocol = Some(fallback_protocol(s)?.timeline);
    }
    let cohort = gen_cohort(&spec)?;
    let mut files = 0;
    for (index, bundle) in cohort.iter().enumerate() {
        let dir = s.data_dir.join(&bundle.subject_id);
        write_atomic(&dir.join(PROTOCOL_FILE_NAME), protocol_text(&bundle.truth.timeline, None).as_bytes())?;
        files += 1;
        for (device, session) in &bundle.sessions {
            let session = match s.noise.get(device) {
                Some(noise) => apply_device_noise(session, noise, mix_seed(s.seed, index as u64, *device as u64)),
                None => session.clone(),
            };
            for (kind, series) in &session.signals {
                write_atomic(&device_dir(&dir, *device).join(signal_file_name(*kind)), signal_csv(series).as_bytes())?;
                files += 1;
            }
        }
    }
    let manifest = Manifest {
        spec: &spec,
        noise: s.noise.iter().map(|(d, n)| (*d, *n)).collect(),
        subjects: cohort.iter().map(|b| &b.truth).collect(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    write_atomic(&s.data_dir.join(MANIFEST_FILE_NAME), json.as_bytes())?;
    Ok(files + 1)
}

/// Feature files written for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceFeatures {
    pub device: DeviceKind,
    pub schema: FeatureSchema,
    pub files: Vec<PathBuf>,
}

/// Extracts one feature CSV per subject and device, using the richest
/// feature set each device supports.
pub fn cmd_features(s: &Settings) -> Result<Vec<DeviceFeatures>> {
    Settings::require_dir(&s.data_dir, "data directory")?;
    let fallback = fallback_protocol(s)?;
    let subjects = subject_dirs(&s.data_dir)?;
    let mut out = Vec::new();
    for &device in &s.devices {
        let mut files = Vec::new();
        let mut schema = None;
        for dir in subjects.iter().filter(|d| device_dir(d, device).is_dir()) {
            let subject = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let ctx = || format!("subject {subject}, device {}", device.slug());
            let loaded = load_session(dir, device, &fallback).context(ctx)?;
            let session = &loaded.session;
            let with_eda = device.records_eda() && session.signal(SignalKind::Eda).is_some();
            let model = if with_eda { ModelDesc::HrvEda } else { ModelDesc::HrvOnly };
            let prepared = prepare_session(session, &s.pipeline, with_eda).context(ctx)?;
            let matrix = prepared.features(s.scenario, model, &s.pipeline.window).context(ctx)?;
            let path = s.features_dir(device).join(format!("{}.csv", session.subject_id));
            write_atomic(&path, feature_csv(&matrix).as_bytes())?;
            if let (true, Some(d)) = (s.export_decomposition, &prepared.decomposition) {
                let p = s.output_dir.join("decomposition").join(device.slug()).join(format!("{}.csv", session.subject_id));
                write_atomic(&p, decomposition_csv(d).as_bytes())?;
            }
            files.push(path);
            schema = Some(matrix.schema);
        }
        let Some(schema) = schema else {
            return Err(Error::Config(format!("no subject in {} has {} data", s.data_dir.display(), device.slug())));
        };
        out.push(DeviceFeatures { device, schema, files });
    }
    Ok(out)
}

/// Per-subject matrices of `device`, projected onto `schema`, in subject
/// order.
pub fn load_matrices(s: &Settings, device: DeviceKind, schema: &FeatureSchema) -> Result<Vec<FeatureMatrix>> {
    let dir = s.features_dir(device);
    Settings::require_dir(&dir, "feature directory (run `features` first)")?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no feature files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let m = load_feature_csv(p, device, s.scenario)?;
            m.project(schema).context(|| format!("{}", p.display()))
        })
        .collect()
}

/// Fits the configured classifier on every configured device's matrices
/// and saves it.
pub fn cmd_train(s: &Settings) -> Result<TrainedModel> {
    let schema = schema_for(s.model);
    let mut matrices = Vec::new();
    for &device in &s.devices {
        matrices.extend(load_matrices(s, device, &schema)?);
    }
    let training = FeatureMatrix::concat(&matrices)?;
    let model = match s.classifier(s.model).fit(&training) {
        Err(stressdetect_core::Error::SingleClassTraining) => {
            return Err(Error::from(stressdetect_core::Error::SingleClassTraining)
                .context("training windows are all of one class; check the protocol files and the scenario"))
        }
        other => other?,
    };
    let model = model.with_source(s.tag.clone());
    save_model(&model, &s.model_file)?;
    Ok(model)
}

fn report_path(s: &Settings, r: &EvalReport) -> PathBuf {
    let mode = match r.mode {
        EvalMode::Loso => "loso",
        EvalMode::Pretrained => "pretrained",
    };
    s.reports_dir().join(format!("{mode}_{}_scenario{}_{}.json", r.model_desc.slug(), r.scenario.number(), r.device.slug()))
}

/// Evaluates every configured device, saves one JSON report each and
/// re-renders the summary tables.
pub fn cmd_eval(s: &Settings, mode: EvalMode) -> Result<Vec<EvalReport>> {
    let schema = schema_for(s.model);
    let model = match mode {
        EvalMode::Loso => None,
        EvalMode::Pretrained => {
            Settings::require_file(&s.model_file, "model file")?;
            let m = load_model(&s.model_file)?;
            if m.schema != schema {
                return Err(stressdetect_core::Error::SchemaMismatch(format!(
                    "model file {} holds a {}-column model, configuration asks for {} ({} columns)",
                    s.model_file.display(),
                    m.schema.len(),
                    s.model.slug(),
                    schema.len()
                ))
                .into());
            }
            Some(m)
        }
    };
    let mut reports = Vec::new();
    for &device in &s.devices {
        let matrices = load_matrices(s, device, &schema)?;
        let ctx = || format!("device {}", device.slug());
        let r = match &model {
            None => loso(&matrices, s.classifier(s.model)).context(ctx)?,
            Some(m) => pretrained_eval(m, &matrices).context(ctx)?,
        };
        let mut json = serde_json::to_string_pretty(&r).map_err(|e| Error::Config(e.to_string()))?;
        json.push('\n');
        write_atomic(&report_path(s, &r), json.as_bytes())?;
        reports.push(r);
    }
    cmd_report(s)?;
    Ok(reports)
}

pub fn load_reports(dir: &Path) -> Result<Vec<EvalReport>> {
    Settings::require_dir(dir, "report directory (run `eval` first)")?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            serde_json::from_str(&read_to_string(p)?)
                .map_err(|e| Error::Config(format!("{}: not an evaluation report: {e}", p.display())))
        })
        .collect()
}

/// Renders `report.csv` and `report.txt` from all saved reports.
pub fn cmd_report(s: &Settings) -> Result<(PathBuf, PathBuf)> {
    let dir = s.reports_dir();
    render_report(&load_reports(&dir)?, &dir)
}
