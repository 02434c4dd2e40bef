use std::path::{Path, PathBuf};
use std::process::Command;

use stressdetect::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION};
use stressdetect::commands::schema_for;
use stressdetect::config::RunConfig;
use stressdetect::export::load_feature_csv;
use stressdetect::model_file::{load_model, model_from_json, model_to_json};
use stressdetect::Error;
use stressdetect_core::eval::ModelDesc;
use stressdetect_core::features::Scenario;
use stressdetect_core::DeviceKind;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stressdetect"))
}

fn run_in(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["stressdetect"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, format!("{body}\n[paths]\ndata_dir = \"data\"\noutput_dir = \"out\"\n")).unwrap();
    p
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_documents_every_flag() {
    let o = exe().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--config", "--seed", "--device", "--scenario", "--model"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    for cmd in ["synth", "features", "train", "eval", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    let o = exe().args(["eval", "--help"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("--mode") && text.contains("loso") && text.contains("pretrained"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["synth", "--scenario", "3"],
        vec!["synth", "--model", "eda"],
        vec!["eval"],
        vec!["eval", "--mode", "holdout"],
        vec!["frobnicate"],
        vec!["synth", "--device", "fitbit"],
    ] {
        let o = exe().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(EXIT_VALIDATION), "{args:?}");
    }
}

#[test]
fn missing_inputs_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap() + "protocol = \"missing_protocol.txt\"\n").unwrap();
    let (code, _, err) = run_in(&["--config", cfg.to_str().unwrap(), "features"]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("missing_protocol.txt"), "{err}");
    assert!(!tmp.path().join("out").exists());

    let cfg = write_config(tmp.path(), "");
    let (code, _, err) = run_in(&["--config", cfg.to_str().unwrap(), "features"]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("data directory"), "{err}");

    let missing = tmp.path().join("nope.toml");
    let (code, _, _) = run_in(&["--config", missing.to_str().unwrap(), "synth"]);
    assert_eq!(code, EXIT_RUNTIME);
}

#[test]
fn unwritable_output_reports_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[paths]\ndata_dir = \"blocker/data\"\n[synth]\nn_subjects = 2\n").unwrap();
    let (code, _, err) = run_in(&["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("blocker"), "{err}");
}

#[test]
fn default_synth_writes_every_device_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        std::fs::create_dir_all(d).unwrap();
        let cfg = write_config(d, "");
        let (code, _, err) = run_in(&["--config", cfg.to_str().unwrap(), "synth"]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let subjects: Vec<_> = std::fs::read_dir(a.join("data")).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).collect();
    assert_eq!(subjects.len(), 20);
    for s in 1..=20 {
        let dir = a.join("data").join(format!("S{s:02}"));
        for d in DeviceKind::ALL {
            assert!(dir.join(d.slug()).join("rr_ms.csv").is_file());
            assert_eq!(dir.join(d.slug()).join("eda_us.csv").is_file(), d.records_eda());
        }
    }
    let fa = files_under(&a.join("data"));
    let fb = files_under(&b.join("data"));
    assert_eq!(fa.len(), 20 * 7 + 1);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let cfg = write_config(&a, "seed = 1\n");
    assert_eq!(run_in(&["--config", cfg.to_str().unwrap(), "synth"]).0, EXIT_OK);
    assert_ne!(std::fs::read(&fa[2]).unwrap(), std::fs::read(&fb[2]).unwrap());
}

#[test]
fn feature_widths_and_model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "devices = [\"biopac_mp160\", \"garmin_forerunner_55s\"]\n[synth]\nn_subjects = 2\n");
    let c = cfg.to_str().unwrap();
    for args in [vec!["synth"], vec!["features"], vec!["train", "--device", "garmin"]] {
        let mut a = vec!["--config", c];
        a.extend(args);
        let (code, _, err) = run_in(&a);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let feat = |d: DeviceKind| {
        let p = tmp.path().join("out/features").join(d.slug()).join("scenario1/S01.csv");
        load_feature_csv(&p, d, Scenario::AllStressors).unwrap()
    };
    assert_eq!(feat(DeviceKind::GarminForerunner55s).schema.len(), 16);
    assert_eq!(feat(DeviceKind::BiopacMP160).schema.len(), 32);

    let path = tmp.path().join("out/model.json");
    let model = load_model(&path).unwrap();
    assert_eq!(model.schema, schema_for(ModelDesc::HrvOnly));
    assert_eq!(model.training_meta.source, "cohort");
    let text = model_to_json(&model).unwrap();
    assert_eq!(text, std::fs::read_to_string(&path).unwrap());
    let back = model_from_json(&text, &path).unwrap();
    assert_eq!(back, model);
    let m = feat(DeviceKind::GarminForerunner55s);
    assert_eq!(back.predict_proba(&m).unwrap(), model.predict_proba(&m).unwrap());

    let truncated = &text[..text.len() / 2];
    assert!(matches!(model_from_json(truncated, &path), Err(Error::CorruptModelFile { .. })));
    let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
    assert!(matches!(model_from_json(&bumped, &path), Err(Error::SchemaVersionMismatch { found: 2, expected: 1 })));
    let renamed = text.replacen("stressdetect-model", "other", 1);
    assert!(matches!(model_from_json(&renamed, &path), Err(Error::CorruptModelFile { .. })));

    let (code, _, err) = run_in(&["--config", c, "eval", "--mode", "pretrained", "--model", "hrv_eda"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("schema mismatch"), "{err}");
    let (code, out, err) = run_in(&["--config", c, "eval", "--mode", "pretrained", "--device", "garmin"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("Pretrained HRV"));
    let table = std::fs::read_to_string(tmp.path().join("out/reports/report.txt")).unwrap();
    assert!(table.contains("Garmin Forerunner 55s"));
}

#[test]
fn single_class_cohort_fails_training_with_named_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("rest_only.txt"), "Baseline,0,600\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "devices = [\"polar_h10\"]\n[synth]\nn_subjects = 2\n",
    );
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap() + "protocol = \"rest_only.txt\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(run_in(&["--config", c, "synth"]).0, EXIT_OK);
    assert_eq!(run_in(&["--config", c, "features"]).0, EXIT_OK);
    let (code, _, err) = run_in(&["--config", c, "train"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("single class"), "{err}");
}

#[test]
fn config_file_matches_documented_defaults() {
    let c = RunConfig::parse("").unwrap();
    let s = c.settings().unwrap();
    assert_eq!(s.scenario, Scenario::AllStressors);
    assert_eq!(s.model, ModelDesc::HrvOnly);
    assert_eq!(s.pipeline.window.width_s, 60.0);
    assert_eq!(s.pipeline.window.overlap_s, 45.0);
}
