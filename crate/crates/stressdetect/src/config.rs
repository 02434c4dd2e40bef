//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults shown by
//! `RunConfig::default()`. Relative paths resolve against the directory of
//! the configuration file.
//!
//! ```toml
//! seed = 0
//! scenario = 1                 # 1: all stressors, 2: mental arithmetic only
//! model = "hrv"                # "hrv" or "hrv_eda"
//! devices = ["biopac_mp160", "polar_h10", "empatica_e4", "garmin_forerunner_55s"]
//! tag = "cohort"               # recorded in trained model files
//! export_decomposition = false # also write tonic/phasic/driver CSVs
//!
//! [paths]
//! data_dir = "data"
//! output_dir = "out"
//! protocol = "protocol.txt"    # optional; default is the bundled lab protocol
//! model_file = "model.json"    # optional; default <output_dir>/model.json
//!
//! [classifier]
//! hrv = "svm_rbf"              # "svm_rbf" or "random_forest"
//! hrv_eda = "random_forest"
//!
//! [window]                     # width_s, overlap_s
//! [cvxeda]                     # tau0, tau1, knot_spacing_s, alpha, gamma_l, ...
//! [svm]                        # c, gamma, platt_folds, tol, max_passes
//! [forest]                     # n_trees, max_depth, min_leaf, features_per_split, bootstrap
//! [synth]                      # synthetic cohort parameters (n_subjects, hr_stress_delta, ...)
//! [noise.empatica_e4]          # per-device artifacts injected by `synth`
//! ```
//!
//! The top-level `seed` drives every random choice: it replaces
//! `synth.seed` and `forest.seed`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stressdetect_core::eda::CvxEdaConfig;
use stressdetect_core::eval::ModelDesc;
use stressdetect_core::features::{Scenario, WindowSpec};
use stressdetect_core::models::{ClassifierConfig, ModelKind, RfConfig, SvmConfig};
use stressdetect_core::pipeline::PipelineConfig;
use stressdetect_core::synth::{CohortSpec, DeviceNoiseSpec};
use stressdetect_core::DeviceKind;

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub protocol: Option<PathBuf>,
    pub model_file: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig { data_dir: "data".into(), output_dir: "out".into(), protocol: None, model_file: None }
    }
}

/// Classifier used for each feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierChoice {
    pub hrv: String,
    pub hrv_eda: String,
}

impl Default for ClassifierChoice {
    fn default() -> Self {
        ClassifierChoice { hrv: ModelKind::SvmRbf.name().into(), hrv_eda: ModelKind::RandomForest.name().into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: u8,
    pub model: String,
    pub devices: Vec<String>,
    pub tag: String,
    pub export_decomposition: bool,
    pub paths: PathsConfig,
    pub classifier: ClassifierChoice,
    pub window: WindowSpec,
    pub cvxeda: CvxEdaConfig,
    pub svm: SvmConfig,
    pub forest: RfConfig,
    pub synth: CohortSpec,
    pub noise: BTreeMap<String, DeviceNoiseSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            scenario: 1,
            model: ModelDesc::HrvOnly.slug().into(),
            devices: DeviceKind::ALL.iter().map(|d| d.slug().to_string()).collect(),
            tag: "cohort".into(),
            export_decomposition: false,
            paths: PathsConfig::default(),
            classifier: ClassifierChoice::default(),
            window: WindowSpec::default(),
            cvxeda: CvxEdaConfig::default(),
            svm: SvmConfig::default(),
            forest: RfConfig::default(),
            synth: CohortSpec::default(),
            noise: BTreeMap::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub devices: Option<Vec<String>>,
    pub scenario: Option<u8>,
    pub model: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a configuration file and resolves its relative paths against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::parse(&read_to_string(path)?).map_err(|e| e.context(path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for dir in [&mut p.data_dir, &mut p.output_dir] {
            *dir = base.join(&*dir);
        }
        for file in [&mut p.protocol, &mut p.model_file].into_iter().flatten() {
            *file = base.join(&*file);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.devices {
            self.devices = d.clone();
        }
        if let Some(s) = o.scenario {
            self.scenario = s;
        }
        if let Some(m) = &o.model {
            self.model = m.clone();
        }
    }

    pub fn settings(&self) -> Result<Settings> {
        Settings::from_config(self)
    }
}

fn parse_device(name: &str) -> Result<DeviceKind> {
    DeviceKind::parse(name).ok_or_else(|| {
        let known: Vec<&str> = DeviceKind::ALL.iter().map(|d| d.slug()).collect();
        Error::Config(format!("unknown device {name:?}; expected one of {}", known.join(", ")))
    })
}

fn parse_kind(name: &str) -> Result<ModelKind> {
    [ModelKind::SvmRbf, ModelKind::RandomForest]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::Config(format!("unknown classifier {name:?}; expected svm_rbf or random_forest")))
}

/// A validated configuration in typed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub scenario: Scenario,
    pub model: ModelDesc,
    /// Distinct devices in reporting order.
    pub devices: Vec<DeviceKind>,
    pub tag: String,
    pub export_decomposition: bool,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub protocol: Option<PathBuf>,
    pub model_file: PathBuf,
    pub pipeline: PipelineConfig,
    pub hrv_classifier: ClassifierConfig,
    pub hrv_eda_classifier: ClassifierConfig,
    pub synth: CohortSpec,
    pub noise: BTreeMap<DeviceKind, DeviceNoiseSpec>,
}

impl Settings {
    pub fn from_config(c: &RunConfig) -> Result<Settings> {
        let scenario = Scenario::from_number(c.scenario)
            .ok_or_else(|| Error::Config(format!("scenario must be 1 or 2, got {}", c.scenario)))?;
        let model = ModelDesc::parse(&c.model)
            .ok_or_else(|| Error::Config(format!("model must be hrv or hrv_eda, got {:?}", c.model)))?;
        let mut devices = c.devices.iter().map(|d| parse_device(d)).collect::<Result<Vec<_>>>()?;
        devices.sort();
        devices.dedup();
        if devices.is_empty() {
            return Err(Error::Config("device list is empty".into()));
        }
        if c.tag.contains(['\n', '\r']) {
            return Err(Error::Config("tag must be a single line".into()));
        }
        c.window.validate()?;
        c.cvxeda.validate()?;
        c.svm.validate()?;
        let forest = RfConfig { seed: c.seed, ..c.forest.clone() };
        forest.validate()?;
        let classifier = |name: &str| -> Result<ClassifierConfig> {
            Ok(match parse_kind(name)? {
                ModelKind::SvmRbf => ClassifierConfig::SvmRbf(c.svm.clone()),
                ModelKind::RandomForest => ClassifierConfig::RandomForest(forest.clone()),
            })
        };
        let synth = CohortSpec { seed: c.seed, devices: devices.clone(), ..c.synth.clone() };
        synth.validate()?;
        let mut noise = BTreeMap::new();
        for (name, spec) in &c.noise {
            spec.validate()?;
            if noise.insert(parse_device(name)?, *spec).is_some() {
                return Err(Error::Config(format!("device {name:?} has more than one noise table")));
            }
        }
        if let Some(p) = &c.paths.protocol {
            if !p.is_file() {
                return Err(Error::Config(format!("protocol file {} does not exist", p.display())));
            }
        }
        Ok(Settings {
            seed: c.seed,
            scenario,
            model,
            devices,
            tag: c.tag.clone(),
            export_decomposition: c.export_decomposition,
            data_dir: c.paths.data_dir.clone(),
            output_dir: c.paths.output_dir.clone(),
            protocol: c.paths.protocol.clone(),
            model_file: c.paths.model_file.clone().unwrap_or_else(|| c.paths.output_dir.join("model.json")),
            pipeline: PipelineConfig { window: c.window, cvxeda: c.cvxeda },
            hrv_classifier: classifier(&c.classifier.hrv)?,
            hrv_eda_classifier: classifier(&c.classifier.hrv_eda)?,
            synth,
            noise,
        })
    }

    pub fn classifier(&self, model: ModelDesc) -> &ClassifierConfig {
        match model {
            ModelDesc::HrvOnly => &self.hrv_classifier,
            ModelDesc::HrvEda => &self.hrv_eda_classifier,
        }
    }

    pub fn features_dir(&self, device: DeviceKind) -> PathBuf {
        self.output_dir.join("features").join(device.slug()).join(format!("scenario{}", self.scenario.number()))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join("reports")
    }

    pub fn require_dir(path: &Path, what: &str) -> Result<()> {
        if path.is_dir() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} {} does not exist", path.display())))
        }
    }

    pub fn require_file(path: &Path, what: &str) -> Result<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} {} does not exist", path.display())))
        }
    }
}
