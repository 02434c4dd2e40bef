//! Feature matrix and decomposition CSV files.

use std::fmt::Write as _;
use std::path::Path;

use stressdetect_core::eda::EdaDecomposition;
use stressdetect_core::features::{FeatureMatrix, FeatureSchema, FeatureVector, Scenario};
use stressdetect_core::DeviceKind;

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

const ROW_KEYS: [&str; 4] = ["subject_id", "start_s", "end_s", "label"];

/// `subject_id,start_s,end_s,label,<feature columns>` with one row per
/// window.
pub fn feature_csv(matrix: &FeatureMatrix) -> String {
    let mut out = ROW_KEYS.join(",");
    for name in matrix.schema.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in &matrix.rows {
        let _ = write!(out, "{},{},{},{}", r.subject_id, r.window_start_s, r.window_end_s, r.label);
        for v in &r.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn known_schema(names: &[&str]) -> Option<FeatureSchema> {
    [FeatureSchema::hrv(), FeatureSchema::hrv_eda()].into_iter().find(|s| s.names().eq(names.iter().copied()))
}

/// Parses a feature CSV written by [`feature_csv`]. The header must carry
/// one of the built-in schemas.
pub fn parse_feature_csv(text: &str, path: &Path, device: DeviceKind, scenario: Scenario) -> Result<FeatureMatrix> {
    let bad = |reason: String| Error::MalformedFeatures { path: path.into(), reason };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("missing header".into()))?.split(',').collect();
    if header.len() < ROW_KEYS.len() || header[..ROW_KEYS.len()] != ROW_KEYS {
        return Err(bad(format!("header must start with {}", ROW_KEYS.join(","))));
    }
    let schema = known_schema(&header[ROW_KEYS.len()..]).ok_or_else(|| bad("unknown feature columns".into()))?;
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row_no = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(bad(format!("line {row_no}: {} fields, expected {}", fields.len(), header.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        let nums: Option<Vec<f64>> = fields[1..].iter().map(|s| num(s)).collect();
        let nums = nums.ok_or_else(|| bad(format!("line {row_no}: non-numeric or non-finite value")))?;
        let label = match fields[3].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("line {row_no}: label {other:?} is not 0 or 1"))),
        };
        rows.push(FeatureVector {
            subject_id: fields[0].to_string(),
            window_start_s: nums[0],
            window_end_s: nums[1],
            values: nums[3..].to_vec(),
            label,
        });
    }
    Ok(FeatureMatrix { schema, rows, scenario, device })
}

pub fn load_feature_csv(path: &Path, device: DeviceKind, scenario: Scenario) -> Result<FeatureMatrix> {
    parse_feature_csv(&read_to_string(path)?, path, device, scenario)
}

/// `t_seconds,tonic,phasic,driver` on the decomposition grid.
pub fn decomposition_csv(d: &EdaDecomposition) -> String {
    let mut out = String::from("t_seconds,tonic,phasic,driver\n");
    let t = d.tonic.timestamps();
    for i in 0..t.len() {
        let _ = writeln!(out, "{},{},{},{}", t[i], d.tonic.values()[i], d.phasic.values()[i], d.driver.values()[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(schema: FeatureSchema) -> FeatureMatrix {
        let p = schema.len();
        let rows = (0..3)
            .map(|i| FeatureVector {
                subject_id: "S07".into(),
                window_start_s: 15.0 * i as f64,
                window_end_s: 15.0 * i as f64 + 60.0,
                values: (0..p).map(|j| (j as f64 + 0.1) / (i as f64 + 3.0)).collect(),
                label: (i % 2) as u8,
            })
            .collect();
        FeatureMatrix { schema, rows, scenario: Scenario::MentalArithmeticOnly, device: DeviceKind::EmpaticaE4 }
    }

    #[test]
    fn round_trip() {
        for schema in [FeatureSchema::hrv(), FeatureSchema::hrv_eda()] {
            let m = matrix(schema);
            let text = feature_csv(&m);
            assert_eq!(text.lines().next().unwrap().split(',').count(), 4 + m.schema.len());
            let back = parse_feature_csv(&text, Path::new("f.csv"), m.device, m.scenario).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn rejects_malformed() {
        let m = matrix(FeatureSchema::hrv());
        let text = feature_csv(&m);
        let p = Path::new("f.csv");
        let (d, s) = (m.device, m.scenario);
        assert!(parse_feature_csv(&text.replace("hr_mean", "hr_avg"), p, d, s).is_err());
        assert!(parse_feature_csv(&text.replacen("S07,0,60,0,", "S07,0,60,2,", 1), p, d, s).is_err());
        let truncated = &text[..text.trim_end().rfind(',').unwrap()];
        assert!(matches!(parse_feature_csv(truncated, p, d, s), Err(Error::MalformedFeatures { .. })));
        assert!(parse_feature_csv("", p, d, s).is_err());
    }
}
