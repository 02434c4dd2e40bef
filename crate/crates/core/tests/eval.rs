use stressdetect_core::eval::{loso, pretrained_eval, EvalMode, ModelDesc};
use stressdetect_core::features::{FeatureMatrix, FeatureSchema, FeatureVector, Scenario};
use stressdetect_core::models::{ClassifierConfig, RfConfig, SvmConfig};
use stressdetect_core::pipeline::{session_features, PipelineConfig};
use stressdetect_core::synth::{gen_cohort, CohortSpec};
use stressdetect_core::{DeviceKind, Error};

fn subject(id: &str, labels: &[u8]) -> FeatureMatrix {
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let base = if l == 1 { 1.0 } else { -1.0 };
            FeatureVector {
                subject_id: id.into(),
                window_start_s: 15.0 * i as f64,
                window_end_s: 15.0 * i as f64 + 60.0,
                values: (0..16).map(|j| base + 0.01 * ((i * 7 + j) % 5) as f64).collect(),
                label: l,
            }
        })
        .collect();
    FeatureMatrix { schema: FeatureSchema::hrv(), rows, scenario: Scenario::AllStressors, device: DeviceKind::PolarH10 }
}

fn svm() -> ClassifierConfig {
    ClassifierConfig::SvmRbf(SvmConfig::default())
}

#[test]
fn identical_separable_subjects_score_perfectly() {
    let labels = [0, 0, 0, 0, 1, 1, 1, 1];
    let r = loso(&[subject("A", &labels), subject("B", &labels)], &svm()).unwrap();
    assert_eq!(r.per_subject_auroc.len(), 2);
    assert!(r.per_subject_auroc.values().all(|&a| a == 1.0));
    assert_eq!((r.median, r.q1, r.q3), (1.0, 1.0, 1.0));
    assert_eq!(r.mode, EvalMode::Loso);
    assert_eq!(r.model_desc, ModelDesc::HrvOnly);
}

#[test]
fn single_class_subject_is_skipped() {
    let both = [0, 0, 0, 1, 1, 1];
    let r = loso(&[subject("A", &both), subject("B", &both), subject("C", &[0, 0, 0])], &svm()).unwrap();
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.skipped[0].subject_id, "C");
    assert!(!r.per_subject_auroc.contains_key("C"));
}

#[test]
fn cohort_errors() {
    assert_eq!(loso(&[subject("A", &[0, 1])], &svm()).unwrap_err(), Error::TooFewSubjects(1));
    let dup = loso(&[subject("A", &[0, 1, 0, 1]), subject("A", &[0, 1, 0, 1])], &svm());
    assert_eq!(dup.unwrap_err(), Error::DuplicateSubject("A".into()));
}

#[test]
fn pretrained_requires_matching_schema() {
    let labels = [0, 0, 1, 1];
    let train = FeatureMatrix::concat(&[subject("A", &labels), subject("B", &labels)]).unwrap();
    let model = svm().fit(&train).unwrap();
    let mut wide = subject("C", &labels);
    wide.schema = FeatureSchema::hrv_eda();
    for r in &mut wide.rows {
        r.values.resize(32, 0.0);
    }
    assert!(matches!(pretrained_eval(&model, &[wide]), Err(Error::SchemaMismatch(_))));
}

#[test]
fn in_sample_scores_are_optimistic() {
    let spec = CohortSpec { n_subjects: 6, seed: 21, devices: vec![DeviceKind::PolarH10], ..CohortSpec::default() };
    let cfg = PipelineConfig::default();
    let matrices: Vec<FeatureMatrix> = gen_cohort(&spec)
        .unwrap()
        .iter()
        .map(|b| {
            session_features(&b.sessions[&DeviceKind::PolarH10], Scenario::AllStressors, ModelDesc::HrvOnly, &cfg)
                .unwrap()
        })
        .collect();
    let rf = ClassifierConfig::RandomForest(RfConfig { n_trees: 30, ..RfConfig::default() });
    let cv = loso(&matrices, &rf).unwrap();
    let model = rf.fit(&FeatureMatrix::concat(&matrices).unwrap()).unwrap();
    let fit = pretrained_eval(&model, &matrices).unwrap();
    assert!(fit.median >= cv.median, "{} vs {}", fit.median, cv.median);
    assert_eq!(fit.mode, EvalMode::Pretrained);
}
