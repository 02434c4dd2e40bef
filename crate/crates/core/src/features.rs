//! Sliding-window HRV and EDA features with protocol-derived labels.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use crate::eda::EdaDecomposition;
use crate::error::{Error, Result};
use crate::signal::{DeviceKind, DeviceSession, ProtocolTimeline, SegmentLabel, SignalKind, TimeSeries};
use crate::stats;

/// Minimum samples of each signal a window needs to be usable.
pub const MIN_WINDOW_SAMPLES: usize = 4;
/// Percentiles reported for each cardiac signal.
pub const PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];
/// Phasic peaks must exceed this height (normalized units).
pub const PEAK_THRESHOLD: f64 = 0.01;
/// Minimum separation between counted phasic peaks (s).
pub const PEAK_MIN_SEPARATION_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub width_s: f64,
    pub overlap_s: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { width_s: 60.0, overlap_s: 45.0 }
    }
}

impl WindowSpec {
    pub fn step_s(&self) -> f64 {
        self.width_s - self.overlap_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_s > 0.0 && self.overlap_s >= 0.0 && self.overlap_s < self.width_s) {
            return Err(Error::InvalidConfig(format!(
                "window requires 0 <= overlap < width, got width {} overlap {}",
                self.width_s, self.overlap_s
            )));
        }
        Ok(())
    }
}

/// Window bounds `(start, end)` covering `[0, duration_s]`, starting at 0
/// and advancing by the step; the last window ends at or before the end.
pub fn windows(duration_s: f64, spec: &WindowSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if !(duration_s >= spec.width_s) {
        return Err(Error::SessionTooShort { duration_s, required_s: spec.width_s });
    }
    let step = spec.step_s();
    let count = libm::floor((duration_s - spec.width_s) / step + 1e-9) as usize + 1;
    Ok((0..count)
        .map(|k| {
            let start = k as f64 * step;
            (start, start + spec.width_s)
        })
        .collect())
}

/// Which signal a feature column is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSource {
    HeartRate,
    RrInterval,
    EdaRaw,
    EdaTonic,
    EdaPhasic,
}

/// Ordered, uniquely named feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    columns: Vec<(String, FeatureSource)>,
}

const CARDIAC_STATS: [&str; 8] = ["mean", "std", "skew", "p05", "p25", "p50", "p75", "p95"];
const EDA_STATS: [&str; 5] = ["mean", "std", "min", "max", "auc"];

impl FeatureSchema {
    pub fn new(columns: Vec<(String, FeatureSource)>) -> Result<Self> {
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::SchemaMismatch(format!("duplicate feature name {name}")));
            }
        }
        Ok(FeatureSchema { columns })
    }

    /// 16 heart-rate and R-R interval columns.
    pub fn hrv() -> Self {
        let mut columns = Vec::new();
        for (prefix, src) in [("hr", FeatureSource::HeartRate), ("rr", FeatureSource::RrInterval)] {
            for s in CARDIAC_STATS {
                columns.push((format!("{prefix}_{s}"), src));
            }
        }
        FeatureSchema { columns }
    }

    /// The 16 HRV columns followed by 16 EDA columns.
    pub fn hrv_eda() -> Self {
        let mut schema = FeatureSchema::hrv();
        for (prefix, src) in
            [("eda", FeatureSource::EdaRaw), ("tonic", FeatureSource::EdaTonic), ("phasic", FeatureSource::EdaPhasic)]
        {
            for s in EDA_STATS {
                schema.columns.push((format!("{prefix}_{s}"), src));
            }
        }
        schema.columns.push(("phasic_peaks".to_string(), FeatureSource::EdaPhasic));
        schema
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn columns(&self) -> &[(String, FeatureSource)] {
        &self.columns
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name)
    }

    pub fn has_eda(&self) -> bool {
        self.columns.iter().any(|(_, s)| matches!(s, FeatureSource::EdaRaw | FeatureSource::EdaTonic | FeatureSource::EdaPhasic))
    }
}

/// Which stressors count as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Baseline vs. mental arithmetic, startle and cold pressor.
    AllStressors,
    /// Baseline vs. mental arithmetic only.
    MentalArithmeticOnly,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::AllStressors => 1,
            Scenario::MentalArithmeticOnly => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Scenario> {
        match n {
            1 => Some(Scenario::AllStressors),
            2 => Some(Scenario::MentalArithmeticOnly),
            _ => None,
        }
    }

    pub fn counts_as_stress(self, label: SegmentLabel) -> bool {
        match self {
            Scenario::AllStressors => label.is_stressor(),
            Scenario::MentalArithmeticOnly => label == SegmentLabel::MentalArithmetic,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::AllStressors => "Rest vs. All Stressors",
            Scenario::MentalArithmeticOnly => "Rest vs. Mental Arithmetic Stressor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowLabel {
    Rest,
    Stress,
    Excluded,
}

impl WindowLabel {
    pub fn as_class(self) -> Option<u8> {
        match self {
            WindowLabel::Rest => Some(0),
            WindowLabel::Stress => Some(1),
            WindowLabel::Excluded => None,
        }
    }
}

/// Class of the window `[start, end)`: 0 inside the first baseline, 1 inside
/// a stressor the scenario counts, otherwise excluded.
pub fn label_window(start: f64, end: f64, timeline: &ProtocolTimeline, scenario: Scenario) -> WindowLabel {
    if timeline.baseline().contains(start, end) {
        return WindowLabel::Rest;
    }
    let counted = timeline.segments().iter().any(|s| scenario.counts_as_stress(s.label) && s.contains(start, end));
    if counted {
        WindowLabel::Stress
    } else {
        WindowLabel::Excluded
    }
}

fn cardiac_stats(values: &[f64]) -> Result<[f64; 8]> {
    if values.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::InsufficientSamples { found: values.len(), required: MIN_WINDOW_SAMPLES });
    }
    let sorted = stats::sorted(values);
    let mut out = [0.0; 8];
    out[0] = stats::mean(values);
    out[1] = stats::pop_std(values);
    out[2] = stats::skewness(values);
    for (k, p) in PERCENTILES.iter().enumerate() {
        out[3 + k] = stats::percentile_sorted(&sorted, *p);
    }
    Ok(out)
}

/// HR then RR: mean, population std, skewness, and the five percentiles.
pub fn hrv_features(hr_window: &[f64], rr_window: &[f64]) -> Result<Vec<f64>> {
    let hr = cardiac_stats(hr_window)?;
    let rr = cardiac_stats(rr_window)?;
    Ok(hr.iter().chain(rr.iter()).copied().collect())
}

/// Trapezoidal integral over `[start, end]` of the series' linear
/// interpolant (end values held outside the sampled range).
pub fn window_auc(series: &TimeSeries, start: f64, end: f64) -> f64 {
    let Some(v_start) = series.interpolate(start) else { return 0.0 };
    let v_end = series.interpolate(end).unwrap_or(v_start);
    let range = series.index_range(start, end);
    let mut t_prev = start;
    let mut v_prev = v_start;
    let mut area = 0.0;
    for i in range {
        let (t, v) = (series.timestamps()[i], series.values()[i]);
        if t <= start {
            continue;
        }
        area += 0.5 * (v + v_prev) * (t - t_prev);
        t_prev = t;
        v_prev = v;
    }
    area + 0.5 * (v_end + v_prev) * (end - t_prev)
}

/// Local maxima above `threshold`, thinned so accepted peaks are at least
/// `min_separation_s` apart (taller peaks win). Returns sample indices in
/// time order.
pub fn find_peaks(series: &TimeSeries, threshold: f64, min_separation_s: f64) -> Vec<usize> {
    let (ts, vs) = (series.timestamps(), series.values());
    let n = vs.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            vs[i] > threshold && (i == 0 || vs[i] > vs[i - 1]) && (i + 1 == n || vs[i] >= vs[i + 1]) && n > 1
        })
        .collect();
    candidates.sort_by(|&a, &b| vs[b].total_cmp(&vs[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| libm::fabs(ts[k] - ts[c]) >= min_separation_s) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

fn eda_stats(series: &TimeSeries, start: f64, end: f64) -> Result<[f64; 5]> {
    let w = series.window_values(start, end);
    if w.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::InsufficientSamples { found: w.len(), required: MIN_WINDOW_SAMPLES });
    }
    Ok([stats::mean(w), stats::pop_std(w), stats::min(w), stats::max(w), window_auc(series, start, end)])
}

/// Raw, tonic and phasic statistics (mean, std, min, max, AUC) plus the
/// phasic peak count for the window `[start, end)`.
pub fn eda_features(raw: &TimeSeries, tonic: &TimeSeries, phasic: &TimeSeries, start: f64, end: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(16);
    for s in [raw, tonic, phasic] {
        out.extend_from_slice(&eda_stats(s, start, end)?);
    }
    let range = phasic.index_range(start, end);
    let (lo, hi) = (range.start, range.end);
    let window = TimeSeries::new(
        SignalKind::Eda,
        phasic.timestamps()[lo..hi].to_vec(),
        phasic.values()[lo..hi].to_vec(),
    )?;
    out.push(find_peaks(&window, PEAK_THRESHOLD, PEAK_MIN_SEPARATION_S).len() as f64);
    Ok(out)
}

/// One labeled window of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub subject_id: String,
    pub window_start_s: f64,
    pub window_end_s: f64,
    /// Values in schema order.
    pub values: Vec<f64>,
    pub label: u8,
}

impl FeatureVector {
    pub fn get(&self, schema: &FeatureSchema, name: &str) -> Option<f64> {
        schema.index_of(name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureVector>,
    pub scenario: Scenario,
    pub device: DeviceKind,
}

impl FeatureMatrix {
    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn has_both_classes(&self) -> bool {
        self.rows.iter().any(|r| r.label == 0) && self.rows.iter().any(|r| r.label == 1)
    }

    /// The columns of `target`, picked by name.
    pub fn project(&self, target: &FeatureSchema) -> Result<FeatureMatrix> {
        if *target == self.schema {
            return Ok(self.clone());
        }
        let idx = target
            .names()
            .map(|n| {
                self.schema
                    .index_of(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("matrix has no feature column {n}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureVector { values: idx.iter().map(|&i| r.values[i]).collect(), ..r.clone() })
            .collect();
        Ok(FeatureMatrix { schema: target.clone(), rows, scenario: self.scenario, device: self.device })
    }

    /// Concatenates matrices that share a schema.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a FeatureMatrix>) -> Result<FeatureMatrix> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(Error::EmptyInput)?;
        let mut out = first.clone();
        for m in iter {
            if m.schema != out.schema {
                return Err(Error::SchemaMismatch("cannot concatenate matrices with different schemas".into()));
            }
            out.rows.extend(m.rows.iter().cloned());
        }
        Ok(out)
    }
}

/// Builds the labeled feature matrix of a preprocessed session.
///
/// Both cardiac signals must be present (see
/// [`preprocess_session`](crate::preprocess::preprocess_session)). EDA
/// columns are included exactly when `decomposition` is given; the raw
/// EDA view is the decomposed (normalized, uniformly resampled) signal.
/// Windows that are excluded by the label rule or lack samples are skipped.
pub fn build_feature_matrix(
    session: &DeviceSession,
    decomposition: Option<&EdaDecomposition>,
    scenario: Scenario,
    spec: &WindowSpec,
) -> Result<FeatureMatrix> {
    let (Some(hr), Some(rr)) = (session.signal(SignalKind::HeartRate), session.signal(SignalKind::RrInterval)) else {
        return Err(Error::MissingCardiacSignal);
    };
    let eda = decomposition.map(|d| (d.reconstruction(), d));
    let schema = if eda.is_some() { FeatureSchema::hrv_eda() } else { FeatureSchema::hrv() };

    let mut rows = Vec::new();
    for (start, end) in windows(session.timeline.end_s(), spec)? {
        let Some(label) = label_window(start, end, &session.timeline, scenario).as_class() else { continue };
        let Ok(mut values) = hrv_features(hr.window_values(start, end), rr.window_values(start, end)) else {
            continue;
        };
        if let Some((raw, d)) = &eda {
            match eda_features(raw, &d.tonic, &d.phasic, start, end) {
                Ok(v) => values.extend(v),
                Err(_) => continue,
            }
        }
        debug_assert!(values.iter().all(|v| v.is_finite()));
        rows.push(FeatureVector {
            subject_id: session.subject_id.clone(),
            window_start_s: start,
            window_end_s: end,
            values,
            label,
        });
    }
    if rows.is_empty() {
        return Err(Error::NoUsableWindows);
    }
    Ok(FeatureMatrix { schema, rows, scenario, device: session.device })
}
