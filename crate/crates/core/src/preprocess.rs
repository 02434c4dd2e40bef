//! Artifact removal and normalization of raw device signals.
//!
//! Per signal kind the session pipeline applies, in order: physiological
//! range filter, MAD trimming (HR/RR), 5 s median filter (EDA), then
//! z-score (HR/RR) or min-max (EDA) normalization.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{DeviceSession, SignalKind, TimeSeries};
use crate::stats;

pub const HR_MIN_BPM: f64 = 30.0;
pub const HR_MAX_BPM: f64 = 220.0;
pub const EDA_MIN_US: f64 = 0.01;
pub const EDA_MAX_US: f64 = 100.0;
pub const DEFAULT_MAD_K: f64 = 3.0;
pub const DEFAULT_MEDIAN_WINDOW_S: f64 = 5.0;

/// Statistics that parameterize z-score and min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl NormStats {
    pub fn of(values: &[f64]) -> NormStats {
        NormStats {
            mean: stats::mean(values),
            std: stats::pop_std(values),
            min: stats::min(values),
            max: stats::max(values),
        }
    }
}

/// Drops samples outside the physiological band of the series' kind.
/// R-R intervals are screened through the implied heart rate `60000 / rr`.
pub fn filter_physiological_range(series: &TimeSeries) -> TimeSeries {
    match series.kind() {
        SignalKind::HeartRate => series.retain_values(|v| (HR_MIN_BPM..=HR_MAX_BPM).contains(&v)),
        SignalKind::RrInterval => {
            series.retain_values(|v| v > 0.0 && (HR_MIN_BPM..=HR_MAX_BPM).contains(&(60_000.0 / v)))
        }
        SignalKind::Eda => series.retain_values(|v| (EDA_MIN_US..=EDA_MAX_US).contains(&v)),
    }
}

/// Removes samples farther than `k * MAD` from the median. A zero MAD
/// removes nothing.
pub fn mad_trim(series: &TimeSeries, k: f64) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let med = stats::median(series.values());
    let mad = stats::mad(series.values());
    if mad == 0.0 {
        return Ok(series.clone());
    }
    let band = k * mad;
    Ok(series.retain_values(|v| libm::fabs(v - med) <= band))
}

/// Replaces each value by the median of the samples within `±window_s / 2`
/// of its timestamp, truncating the window at the series edges. Even-sized
/// windows take the lower median so every output is an input sample.
pub fn median_filter(series: &TimeSeries, window_s: f64) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let half = window_s / 2.0;
    let ts = series.timestamps();
    let vs = series.values();
    let mut out = Vec::with_capacity(vs.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut buf = Vec::new();
    for i in 0..vs.len() {
        while ts[lo] < ts[i] - half {
            lo += 1;
        }
        while hi < vs.len() && ts[hi] <= ts[i] + half {
            hi += 1;
        }
        buf.clear();
        buf.extend_from_slice(&vs[lo..hi]);
        let mid = (buf.len() - 1) / 2;
        let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
        out.push(*m);
    }
    Ok(series.with_values(out))
}

/// Z-score with population standard deviation.
pub fn zscore(series: &TimeSeries) -> Result<(TimeSeries, NormStats)> {
    if series.len() < 2 {
        return Err(Error::DegenerateSeries("z-score needs at least two samples"));
    }
    let stats = NormStats::of(series.values());
    if !(stats.std > 0.0) {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok((zscore_apply(series, &stats)?, stats))
}

/// Re-applies previously fitted z-score statistics.
pub fn zscore_apply(series: &TimeSeries, stats: &NormStats) -> Result<TimeSeries> {
    if !(stats.std > 0.0) {
        return Err(Error::DegenerateStats);
    }
    Ok(series.with_values(series.values().iter().map(|v| (v - stats.mean) / stats.std).collect()))
}

/// Maps values onto `[0, 1]`; the extremes land exactly on 0 and 1.
pub fn minmax(series: &TimeSeries) -> Result<(TimeSeries, NormStats)> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let stats = NormStats::of(series.values());
    if !(stats.max > stats.min) {
        return Err(Error::DegenerateSeries("max equals min"));
    }
    let span = stats.max - stats.min;
    let out = series.values().iter().map(|v| (v - stats.min) / span).collect();
    Ok((series.with_values(out), stats))
}

/// Heart rate per beat, `60000 / rr`, at the beat timestamps.
pub fn heart_rate_from_rr(rr: &TimeSeries) -> TimeSeries {
    let values = rr.values().iter().map(|v| 60_000.0 / v).collect();
    rr.with_values(values).with_kind(SignalKind::HeartRate)
}

/// Inter-beat interval in ms, `60000 / hr`, at the HR timestamps.
pub fn rr_from_heart_rate(hr: &TimeSeries) -> TimeSeries {
    let values = hr.values().iter().map(|v| 60_000.0 / v).collect();
    hr.with_values(values).with_kind(SignalKind::RrInterval)
}

/// Cleans and normalizes one signal according to its kind.
pub fn preprocess_signal(series: &TimeSeries) -> Result<(TimeSeries, NormStats)> {
    let kind = series.kind();
    let run = || -> Result<(TimeSeries, NormStats)> {
        let ranged = filter_physiological_range(series);
        if ranged.is_empty() {
            return Err(Error::EmptySeries);
        }
        match kind {
            SignalKind::HeartRate | SignalKind::RrInterval => zscore(&mad_trim(&ranged, DEFAULT_MAD_K)?),
            SignalKind::Eda => minmax(&median_filter(&ranged, DEFAULT_MEDIAN_WINDOW_S)?),
        }
    };
    run().map_err(|e| e.for_signal(kind))
}

/// A preprocessed session along with the per-signal normalization
/// statistics that were fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedSession {
    pub session: DeviceSession,
    pub stats: BTreeMap<SignalKind, NormStats>,
}

/// Runs [`preprocess_signal`] on every signal of the session.
///
/// When the device exports only one cardiac signal, the other is derived
/// from its raw values first so both cardiac views are always available
/// downstream.
pub fn preprocess_session(session: &DeviceSession) -> Result<PreprocessedSession> {
    let mut signals = session.signals.clone();
    if !signals.contains_key(&SignalKind::HeartRate) {
        if let Some(rr) = signals.get(&SignalKind::RrInterval) {
            let hr = heart_rate_from_rr(rr);
            signals.insert(SignalKind::HeartRate, hr);
        }
    } else if !signals.contains_key(&SignalKind::RrInterval) {
        let rr = rr_from_heart_rate(&signals[&SignalKind::HeartRate]);
        signals.insert(SignalKind::RrInterval, rr);
    }
    let mut out = BTreeMap::new();
    let mut all_stats = BTreeMap::new();
    for (kind, series) in &signals {
        let (clean, st) = preprocess_signal(series)?;
        out.insert(*kind, clean);
        all_stats.insert(*kind, st);
    }
    Ok(PreprocessedSession {
        session: DeviceSession {
            subject_id: session.subject_id.clone(),
            device: session.device,
            signals: out,
            timeline: session.timeline.clone(),
        },
        stats: all_stats,
    })
}
