//! Canonical signal, device and protocol types.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical quantity carried by a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    /// Beats per minute.
    HeartRate,
    /// Milliseconds between successive beats.
    RrInterval,
    /// Skin conductance in microsiemens.
    Eda,
}

impl SignalKind {
    pub const ALL: [SignalKind; 3] = [SignalKind::HeartRate, SignalKind::RrInterval, SignalKind::Eda];

    /// Short lowercase tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            SignalKind::HeartRate => "hr",
            SignalKind::RrInterval => "rr",
            SignalKind::Eda => "eda",
        }
    }

    pub fn is_cardiac(self) -> bool {
        matches!(self, SignalKind::HeartRate | SignalKind::RrInterval)
    }
}

/// The four study devices, in the order used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    BiopacMP160,
    PolarH10,
    EmpaticaE4,
    GarminForerunner55s,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [
        DeviceKind::BiopacMP160,
        DeviceKind::PolarH10,
        DeviceKind::EmpaticaE4,
        DeviceKind::GarminForerunner55s,
    ];

    /// Machine name used on the command line and in directory layouts.
    pub fn slug(self) -> &'static str {
        match self {
            DeviceKind::BiopacMP160 => "biopac_mp160",
            DeviceKind::PolarH10 => "polar_h10",
            DeviceKind::EmpaticaE4 => "empatica_e4",
            DeviceKind::GarminForerunner55s => "garmin_forerunner_55s",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DeviceKind::BiopacMP160 => "Biopac MP160",
            DeviceKind::PolarH10 => "Polar H10",
            DeviceKind::EmpaticaE4 => "Empatica E4",
            DeviceKind::GarminForerunner55s => "Garmin Forerunner 55s",
        }
    }

    /// Accepts the slug, the display name, or a short alias (`biopac`,
    /// `polar`, `empatica`, `garmin`), case-insensitively.
    pub fn parse(name: &str) -> Option<DeviceKind> {
        let lower = name.trim().to_ascii_lowercase();
        DeviceKind::ALL.into_iter().find(|d| {
            lower == d.slug()
                || lower == d.display_name().to_ascii_lowercase()
                || d.slug().starts_with(lower.as_str()) && lower.len() >= 4 && !lower.contains('_')
        })
    }

    pub fn records_eda(self) -> bool {
        matches!(self, DeviceKind::EmpaticaE4 | DeviceKind::BiopacMP160)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Timestamped scalar samples of one [`SignalKind`].
///
/// Timestamps are seconds since session start and strictly increasing;
/// every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    kind: SignalKind,
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(kind: SignalKind, timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch { timestamps: timestamps.len(), values: values.len() });
        }
        for i in 0..timestamps.len() {
            if !timestamps[i].is_finite() || !values[i].is_finite() {
                return Err(Error::NonFiniteValue(i));
            }
            if i > 0 && timestamps[i] <= timestamps[i - 1] {
                return Err(Error::NonMonotoneTimestamps(i));
            }
        }
        Ok(TimeSeries { kind, timestamps, values })
    }

    pub fn empty(kind: SignalKind) -> Self {
        TimeSeries { kind, timestamps: Vec::new(), values: Vec::new() }
    }

    /// Uniformly sampled series starting at `t0`.
    pub fn uniform(kind: SignalKind, t0: f64, rate_hz: f64, values: Vec<f64>) -> Result<Self> {
        let ts = (0..values.len()).map(|i| t0 + i as f64 / rate_hz).collect();
        TimeSeries::new(kind, ts, values)
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_parts(self) -> (SignalKind, Vec<f64>, Vec<f64>) {
        (self.kind, self.timestamps, self.values)
    }

    /// Same timestamps, new values. Panics if the lengths differ.
    pub fn with_values(&self, values: Vec<f64>) -> TimeSeries {
        assert_eq!(values.len(), self.len(), "value count must match timestamp count");
        TimeSeries { kind: self.kind, timestamps: self.timestamps.clone(), values }
    }

    pub fn with_kind(mut self, kind: SignalKind) -> TimeSeries {
        self.kind = kind;
        self
    }

    /// Keeps the samples whose value satisfies `keep`, preserving order.
    pub fn retain_values(&self, mut keep: impl FnMut(f64) -> bool) -> TimeSeries {
        let mut ts = Vec::with_capacity(self.len());
        let mut vs = Vec::with_capacity(self.len());
        for (&t, &v) in self.timestamps.iter().zip(&self.values) {
            if keep(v) {
                ts.push(t);
                vs.push(v);
            }
        }
        TimeSeries { kind: self.kind, timestamps: ts, values: vs }
    }

    /// Index range of samples with `start <= t < end`.
    pub fn index_range(&self, start: f64, end: f64) -> core::ops::Range<usize> {
        let lo = self.timestamps.partition_point(|&t| t < start);
        let hi = self.timestamps.partition_point(|&t| t < end);
        lo..hi.max(lo)
    }

    /// Values of samples with `start <= t < end`.
    pub fn window_values(&self, start: f64, end: f64) -> &[f64] {
        &self.values[self.index_range(start, end)]
    }

    /// Linear interpolation at `t`, holding the end values outside the
    /// sampled range. `None` for an empty series.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        if t <= self.timestamps[0] {
            return Some(self.values[0]);
        }
        if t >= self.timestamps[n - 1] {
            return Some(self.values[n - 1]);
        }
        let hi = self.timestamps.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let (t0, t1) = (self.timestamps[lo], self.timestamps[hi]);
        let w = (t - t0) / (t1 - t0);
        Some(self.values[lo] + w * (self.values[hi] - self.values[lo]))
    }

    pub fn duration(&self) -> f64 {
        match (self.timestamps.first(), self.timestamps.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Whether consecutive sample spacings agree to within `rel_tol` of the
    /// mean spacing. Series with fewer than three samples count as uniform.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let n = self.len();
        if n < 3 {
            return true;
        }
        let dt = self.duration() / (n - 1) as f64;
        self.timestamps.windows(2).all(|w| libm::fabs((w[1] - w[0]) - dt) <= rel_tol * dt)
    }

    /// Linear resampling onto a uniform grid from the first to the last
    /// sample at `rate_hz`.
    pub fn resample_uniform(&self, rate_hz: f64) -> TimeSeries {
        if self.len() < 2 {
            return self.clone();
        }
        let t0 = self.timestamps[0];
        let n = libm::floor(self.duration() * rate_hz + 1e-9) as usize + 1;
        let mut ts = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let t = t0 + i as f64 / rate_hz;
            while j + 2 < self.len() && self.timestamps[j + 1] <= t {
                j += 1;
            }
            let (ta, tb) = (self.timestamps[j], self.timestamps[j + 1]);
            let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            ts.push(t);
            vs.push(self.values[j] + w * (self.values[j + 1] - self.values[j]));
        }
        TimeSeries { kind: self.kind, timestamps: ts, values: vs }
    }
}

/// Protocol phases of the lab session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentLabel {
    Baseline,
    Rest,
    MentalArithmetic,
    Startle,
    ColdPressor,
}

impl SegmentLabel {
    pub const ALL: [SegmentLabel; 5] = [
        SegmentLabel::Baseline,
        SegmentLabel::Rest,
        SegmentLabel::MentalArithmetic,
        SegmentLabel::Startle,
        SegmentLabel::ColdPressor,
    ];

    pub fn is_stressor(self) -> bool {
        matches!(self, SegmentLabel::MentalArithmetic | SegmentLabel::Startle | SegmentLabel::ColdPressor)
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentLabel::Baseline => "Baseline",
            SegmentLabel::Rest => "Rest",
            SegmentLabel::MentalArithmetic => "MentalArithmetic",
            SegmentLabel::Startle => "Startle",
            SegmentLabel::ColdPressor => "ColdPressor",
        }
    }

    /// Exact-spelling lookup.
    pub fn parse(name: &str) -> Option<SegmentLabel> {
        SegmentLabel::ALL.into_iter().find(|l| l.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: SegmentLabel,
    pub start_s: f64,
    pub end_s: f64,
}

impl Segment {
    pub fn new(label: SegmentLabel, start_s: f64, end_s: f64) -> Self {
        Segment { label, start_s, end_s }
    }

    pub fn contains(&self, start: f64, end: f64) -> bool {
        self.start_s <= start && end <= self.end_s
    }

    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        start < self.end_s && self.start_s < end
    }
}

/// Ordered, non-overlapping protocol segments beginning with a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct ProtocolTimeline {
    segments: Vec<Segment>,
}

impl ProtocolTimeline {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyProtocol);
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.end_s > s.start_s) || !s.start_s.is_finite() || !s.end_s.is_finite() {
                return Err(Error::EmptySegment(i));
            }
            if i > 0 && s.start_s < segments[i - 1].end_s {
                return Err(Error::OverlappingSegments(i));
            }
        }
        if segments[0].label != SegmentLabel::Baseline {
            return Err(Error::NonBaselineStart);
        }
        Ok(ProtocolTimeline { segments })
    }

    /// The lab session: 10 min baseline, then three 4 min tasks separated by
    /// 5 min rests, with the cold pressor last. `first` and `second` are the
    /// two randomized tasks.
    pub fn lab_session(first: SegmentLabel, second: SegmentLabel) -> Self {
        use SegmentLabel::*;
        ProtocolTimeline {
            segments: alloc::vec![
                Segment::new(Baseline, 0.0, 600.0),
                Segment::new(first, 600.0, 840.0),
                Segment::new(Rest, 840.0, 1140.0),
                Segment::new(second, 1140.0, 1380.0),
                Segment::new(Rest, 1380.0, 1680.0),
                Segment::new(ColdPressor, 1680.0, 1920.0),
            ],
        }
    }

    /// Mental arithmetic first, then startle, then cold pressor.
    pub fn lab_default() -> Self {
        ProtocolTimeline::lab_session(SegmentLabel::MentalArithmetic, SegmentLabel::Startle)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The first baseline segment (always the first segment).
    pub fn baseline(&self) -> &Segment {
        &self.segments[0]
    }

    pub fn end_s(&self) -> f64 {
        self.segments.last().map(|s| s.end_s).unwrap_or(0.0)
    }

    pub fn label_at(&self, t: f64) -> Option<SegmentLabel> {
        self.segments.iter().find(|s| s.start_s <= t && t < s.end_s).map(|s| s.label)
    }
}

impl TryFrom<Vec<Segment>> for ProtocolTimeline {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        ProtocolTimeline::new(segments)
    }
}

impl From<ProtocolTimeline> for Vec<Segment> {
    fn from(t: ProtocolTimeline) -> Self {
        t.segments
    }
}

/// One subject's recording from one device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSession {
    pub subject_id: String,
    pub device: DeviceKind,
    pub signals: BTreeMap<SignalKind, TimeSeries>,
    pub timeline: ProtocolTimeline,
}

impl DeviceSession {
    pub fn signal(&self, kind: SignalKind) -> Option<&TimeSeries> {
        self.signals.get(&kind)
    }
}

/// Validates and bundles signals into a [`DeviceSession`].
pub fn assemble_session(
    subject_id: impl Into<String>,
    device: DeviceKind,
    signals: Vec<TimeSeries>,
    timeline: ProtocolTimeline,
) -> Result<DeviceSession> {
    if signals.is_empty() {
        return Err(Error::NoSignals);
    }
    let mut map = BTreeMap::new();
    for s in signals {
        let kind = s.kind();
        if map.insert(kind, s).is_some() {
            return Err(Error::DuplicateSignal(kind));
        }
    }
    if map.contains_key(&SignalKind::Eda) && !device.records_eda() {
        return Err(Error::EdaNotSupportedForDevice(device));
    }
    if !map.contains_key(&SignalKind::HeartRate) && !map.contains_key(&SignalKind::RrInterval) {
        return Err(Error::MissingCardiacSignal);
    }
    Ok(DeviceSession { subject_id: subject_id.into(), device, signals: map, timeline })
}
