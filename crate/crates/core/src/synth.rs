//! Synthetic multi-device lab sessions with known ground truth.
//!
//! Each subject has one underlying physiology: a beat-to-beat R-R series
//! driven by a lagged stress response, a slow Ornstein-Uhlenbeck heart-rate
//! fluctuation and AR(1) interval jitter, plus an EDA trace built from a
//! tonic level and Poisson SCR impulses convolved with the biexponential
//! response kernel. Device views resample that physiology with
//! device-specific measurement noise. Every subject draws from its own
//! ChaCha stream `(seed, index)`, so results do not depend on generation
//! order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eda::{sample_kernel, ConvolutionOperator};
use crate::error::{Error, Result};
use crate::features::{label_window, windows, Scenario, WindowSpec};
use crate::preprocess::{HR_MAX_BPM, HR_MIN_BPM};
use crate::signal::{assemble_session, DeviceKind, DeviceSession, ProtocolTimeline, SegmentLabel, SignalKind, TimeSeries};

/// Sampling rate of every generated EDA view.
pub const EDA_RATE_HZ: f64 = 4.0;
/// Minimum spacing of generated SCR events (s).
pub const SCR_DEAD_TIME_S: f64 = 2.0;

const HR_LAG_S: f64 = 20.0;
const TONIC_LAG_S: f64 = 60.0;
const RR_AR_COEF: f64 = 0.5;
const TONIC_FLOOR_US: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub seed: u64,
    /// Between-subject distribution of resting heart rate (bpm).
    pub hr_base_mean: f64,
    pub hr_base_sd: f64,
    /// Mean heart-rate increase during stressors (bpm), scaled per subject
    /// by a responsiveness drawn from `responsiveness_range`.
    pub hr_stress_delta: f64,
    pub responsiveness_range: (f64, f64),
    /// Stationary SD (bpm) and time constant (s) of the slow HR fluctuation.
    pub hr_fluctuation_sd: f64,
    pub hr_fluctuation_tau_s: f64,
    /// Beat-to-beat R-R jitter SD (ms) at rest and under stress.
    pub hrv_base_sdnn: f64,
    pub hrv_stress_sdnn: f64,
    /// SCR events per minute at rest and under stress.
    pub scr_rate_rest: f64,
    pub scr_rate_stress: f64,
    /// Driver impulse amplitude range (µS at the kernel peak).
    pub scr_amplitude_range: (f64, f64),
    /// Between-subject range of the skin conductance level (µS).
    pub tonic_level_range: (f64, f64),
    /// Maximal absolute linear tonic drift (µS per minute); each subject
    /// draws a slope uniformly in `[-tonic_drift, tonic_drift]`.
    pub tonic_drift: f64,
    /// Tonic level increase during stressors (µS).
    pub tonic_stress_delta: f64,
    pub eda_noise_sd: f64,
    /// Time constants of the SCR kernel used for generation.
    pub kernel_tau0: f64,
    pub kernel_tau1: f64,
    /// Fixed protocol for every subject; `None` uses the lab session with
    /// the order of mental arithmetic and startle randomized per subject.
    pub protocol: Option<ProtocolTimeline>,
    pub devices: Vec<DeviceKind>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_subjects: 20,
            seed: 0,
            hr_base_mean: 75.0,
            hr_base_sd: 8.0,
            hr_stress_delta: 15.0,
            responsiveness_range: (0.3, 1.5),
            hr_fluctuation_sd: 5.0,
            hr_fluctuation_tau_s: 60.0,
            hrv_base_sdnn: 50.0,
            hrv_stress_sdnn: 35.0,
            scr_rate_rest: 2.0,
            scr_rate_stress: 8.0,
            scr_amplitude_range: (0.05, 0.5),
            tonic_level_range: (2.0, 8.0),
            tonic_drift: 0.02,
            tonic_stress_delta: 0.3,
            eda_noise_sd: 0.005,
            kernel_tau0: 2.0,
            kernel_tau1: 0.7,
            protocol: None,
            devices: vec![
                DeviceKind::BiopacMP160,
                DeviceKind::PolarH10,
                DeviceKind::EmpaticaE4,
                DeviceKind::GarminForerunner55s,
            ],
        }
    }
}

impl CohortSpec {
    /// No stress effect of any kind: rest and stress segments share every
    /// distribution.
    pub fn null() -> Self {
        let d = CohortSpec::default();
        CohortSpec {
            hr_stress_delta: 0.0,
            hrv_stress_sdnn: d.hrv_base_sdnn,
            scr_rate_stress: d.scr_rate_rest,
            tonic_stress_delta: 0.0,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidSpec(String::from(msg)));
        let finite = [
            self.hr_base_mean,
            self.hr_base_sd,
            self.hr_stress_delta,
            self.hr_fluctuation_sd,
            self.hr_fluctuation_tau_s,
            self.hrv_base_sdnn,
            self.hrv_stress_sdnn,
            self.scr_rate_rest,
            self.scr_rate_stress,
            self.tonic_drift,
            self.tonic_stress_delta,
            self.eda_noise_sd,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("parameters must be finite");
        }
        if self.n_subjects < 2 {
            return fail("n_subjects must be >= 2");
        }
        if self.scr_rate_rest < 0.0 || self.scr_rate_stress < 0.0 {
            return fail("SCR rates must be >= 0");
        }
        if !(HR_MIN_BPM..=HR_MAX_BPM).contains(&self.hr_base_mean)
            || !(HR_MIN_BPM..=HR_MAX_BPM).contains(&(self.hr_base_mean + self.hr_stress_delta))
        {
            return fail("heart rate means must lie in [30, 220] bpm");
        }
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ordered(self.responsiveness_range) || self.responsiveness_range.0 < 0.0 {
            return fail("responsiveness_range must be ordered and non-negative");
        }
        if !ordered(self.scr_amplitude_range) || self.scr_amplitude_range.0 <= 0.0 {
            return fail("scr_amplitude_range must be ordered and positive");
        }
        if !ordered(self.tonic_level_range) || self.tonic_level_range.0 < TONIC_FLOOR_US {
            return fail("tonic_level_range must be ordered and >= 0.5 µS");
        }
        if self.hr_base_sd < 0.0
            || self.hr_fluctuation_sd < 0.0
            || self.hr_fluctuation_tau_s <= 0.0
            || self.hrv_base_sdnn < 0.0
            || self.hrv_stress_sdnn < 0.0
            || self.tonic_drift < 0.0
            || self.eda_noise_sd < 0.0
        {
            return fail("spreads and time constants must be non-negative");
        }
        if !(self.kernel_tau0 > self.kernel_tau1 && self.kernel_tau1 > 0.0) {
            return fail("kernel requires tau0 > tau1 > 0");
        }
        if self.devices.is_empty() {
            return fail("at least one device is required");
        }
        Ok(())
    }
}

/// Artifact model of a recording device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceNoiseSpec {
    /// Per-sample probability of losing the sample.
    pub dropout_prob: f64,
    /// Per-sample probability of a spike; a spike scales the sample by
    /// `1 + spike_magnitude`.
    pub spike_prob: f64,
    pub spike_magnitude: f64,
    /// Per-minute probability that an electrode detachment episode starts.
    pub eda_detach_prob: f64,
    pub detach_duration_s: f64,
    /// Time constant (s) of the conductance recovery after an electrode
    /// regains contact; 0 restores the signal instantly.
    pub reattach_tau_s: f64,
}

impl Default for DeviceNoiseSpec {
    fn default() -> Self {
        DeviceNoiseSpec::none()
    }
}

impl DeviceNoiseSpec {
    pub fn none() -> Self {
        DeviceNoiseSpec {
            dropout_prob: 0.0,
            spike_prob: 0.0,
            spike_magnitude: 0.0,
            eda_detach_prob: 0.0,
            detach_duration_s: 0.0,
            reattach_tau_s: 0.0,
        }
    }

    /// Frequent electrode detachment with mild sample loss and spikes.
    pub fn wrist_detachment() -> Self {
        DeviceNoiseSpec {
            dropout_prob: 0.02,
            spike_prob: 0.005,
            spike_magnitude: 0.5,
            eda_detach_prob: 0.5,
            detach_duration_s: 45.0,
            reattach_tau_s: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = |v: f64| (0.0..=1.0).contains(&v);
        if !(p(self.dropout_prob) && p(self.spike_prob) && p(self.eda_detach_prob))
            || !(self.spike_magnitude.is_finite()
                && self.detach_duration_s >= 0.0
                && self.detach_duration_s.is_finite()
                && self.reattach_tau_s >= 0.0
                && self.reattach_tau_s.is_finite())
        {
            return Err(Error::InvalidSpec(format!("invalid device noise {self:?}")));
        }
        Ok(())
    }
}

/// Oracle bookkeeping for one generated subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subject_id: String,
    pub timeline: ProtocolTimeline,
    pub hr_base: f64,
    pub responsiveness: f64,
    /// Times (s) of the embedded SCR driver impulses, on the EDA grid.
    pub scr_event_times: Vec<f64>,
    pub scr_amplitudes: Vec<f64>,
    /// True mean heart rate of the generated beats per protocol segment.
    pub segment_mean_hr: Vec<(SegmentLabel, f64)>,
}

impl GroundTruth {
    /// True class of every window (`None` where the window is excluded).
    pub fn window_labels(&self, scenario: Scenario, spec: &WindowSpec) -> Result<Vec<((f64, f64), Option<u8>)>> {
        Ok(windows(self.timeline.end_s(), spec)?
            .into_iter()
            .map(|(s, e)| ((s, e), label_window(s, e, &self.timeline, scenario).as_class()))
            .collect())
    }

    pub fn mean_hr(&self, label: SegmentLabel) -> Option<f64> {
        self.segment_mean_hr.iter().find(|(l, _)| *l == label).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectBundle {
    pub subject_id: String,
    pub sessions: BTreeMap<DeviceKind, DeviceSession>,
    pub truth: GroundTruth,
}

/// A standalone EDA trace with its embedded events.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaTrace {
    pub series: TimeSeries,
    pub event_times: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn uniform(rng: &mut ChaCha20Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

fn task_weight(label: SegmentLabel) -> f64 {
    match label {
        SegmentLabel::MentalArithmetic => 1.0,
        SegmentLabel::Startle => 0.8,
        SegmentLabel::ColdPressor => 1.2,
        SegmentLabel::Baseline | SegmentLabel::Rest => 0.0,
    }
}

fn stressed(timeline: &ProtocolTimeline, t: f64) -> Option<SegmentLabel> {
    timeline.label_at(t).filter(|l| l.is_stressor())
}

struct Beats {
    times: Vec<f64>,
    rr_ms: Vec<f64>,
}

fn simulate_beats(spec: &CohortSpec, timeline: &ProtocolTimeline, base: f64, resp: f64, rng: &mut ChaCha20Rng) -> Beats {
    let end = timeline.end_s();
    let rr_min = 60_000.0 / HR_MAX_BPM;
    let rr_max = 60_000.0 / HR_MIN_BPM;
    let mut t = 0.0;
    let mut level = base;
    let mut sdnn = spec.hrv_base_sdnn;
    let mut slow = spec.hr_fluctuation_sd * normal(rng);
    let mut jitter = 0.0;
    let mut beats = Beats { times: Vec::new(), rr_ms: Vec::new() };
    loop {
        let label = stressed(timeline, t);
        let target = base + spec.hr_stress_delta * resp * label.map_or(0.0, task_weight);
        let target_sdnn = if label.is_some() { spec.hrv_stress_sdnn } else { spec.hrv_base_sdnn };
        let dt = 60.0 / level.max(HR_MIN_BPM);
        let lag = 1.0 - libm::exp(-dt / HR_LAG_S);
        level += (target - level) * lag;
        sdnn += (target_sdnn - sdnn) * lag;
        let decay = libm::exp(-dt / spec.hr_fluctuation_tau_s);
        slow = slow * decay + spec.hr_fluctuation_sd * libm::sqrt(1.0 - decay * decay) * normal(rng);
        jitter = RR_AR_COEF * jitter + sdnn * libm::sqrt(1.0 - RR_AR_COEF * RR_AR_COEF) * normal(rng);
        let hr = (level + slow).clamp(HR_MIN_BPM, HR_MAX_BPM);
        let rr = (60_000.0 / hr + jitter).clamp(rr_min, rr_max);
        t += rr / 1000.0;
        if t > end {
            break;
        }
        beats.times.push(t);
        beats.rr_ms.push(rr);
    }
    beats
}

fn simulate_eda(spec: &CohortSpec, timeline: &ProtocolTimeline, rng: &mut ChaCha20Rng) -> EdaTrace {
    let end = timeline.end_s();
    let n = libm::floor(end * EDA_RATE_HZ) as usize;
    let dt = 1.0 / EDA_RATE_HZ;

    // Thinned inhomogeneous Poisson process with a dead time after each event.
    let rate = |t: f64| if stressed(timeline, t).is_some() { spec.scr_rate_stress } else { spec.scr_rate_rest } / 60.0;
    let rate_max = spec.scr_rate_rest.max(spec.scr_rate_stress) / 60.0;
    let mut driver = vec![0.0; n];
    let (mut event_times, mut amplitudes) = (Vec::new(), Vec::new());
    if rate_max > 0.0 {
        let mut t = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / rate_max;
            let accept = rng.random::<f64>() * rate_max < rate(t);
            let idx = libm::round(t * EDA_RATE_HZ) as usize;
            if idx >= n {
                break;
            }
            if accept {
                let a = uniform(rng, spec.scr_amplitude_range);
                driver[idx] = a;
                event_times.push(idx as f64 * dt);
                amplitudes.push(a);
                t = idx as f64 * dt + SCR_DEAD_TIME_S;
            }
        }
    }
    let truncation = (6.0 * spec.kernel_tau0).max(10.0);
    let kernel = sample_kernel(spec.kernel_tau0, spec.kernel_tau1, dt, truncation);
    let phasic = ConvolutionOperator::new(kernel, n).apply(&driver);

    let level0 = uniform(rng, spec.tonic_level_range);
    let slope = uniform(rng, (-spec.tonic_drift, spec.tonic_drift));
    let mut stress_level = 0.0;
    let lag = 1.0 - libm::exp(-dt / TONIC_LAG_S);
    let values = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let target = if stressed(timeline, t).is_some() { spec.tonic_stress_delta } else { 0.0 };
            stress_level += (target - stress_level) * lag;
            let tonic = (level0 + slope * t / 60.0 + stress_level).max(TONIC_FLOOR_US);
            tonic + phasic[i] + spec.eda_noise_sd * normal(rng)
        })
        .collect();
    let series = TimeSeries::uniform(SignalKind::Eda, 0.0, EDA_RATE_HZ, values).expect("finite uniform grid");
    EdaTrace { series, event_times, amplitudes }
}

/// An EDA trace following `timeline`, drawn from stream `index` of `seed`.
pub fn gen_eda_trace(spec: &CohortSpec, timeline: &ProtocolTimeline, seed: u64, index: u64) -> EdaTrace {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    simulate_eda(spec, timeline, &mut rng)
}

fn rr_jitter_ms(device: DeviceKind) -> f64 {
    match device {
        DeviceKind::BiopacMP160 => 1.0,
        DeviceKind::PolarH10 => 2.0,
        DeviceKind::GarminForerunner55s => 4.0,
        DeviceKind::EmpaticaE4 => 8.0,
    }
}

fn device_view(
    device: DeviceKind,
    subject_id: &str,
    beats: &Beats,
    eda: &TimeSeries,
    timeline: &ProtocolTimeline,
    eda_noise_sd: f64,
    rng: &mut ChaCha20Rng,
) -> Result<DeviceSession> {
    let sd = rr_jitter_ms(device);
    let rr = beats.rr_ms.iter().map(|v| v + sd * normal(rng)).collect();
    let mut signals = vec![TimeSeries::new(SignalKind::RrInterval, beats.times.clone(), rr)?];
    if device.records_eda() {
        let values = eda.values().iter().map(|v| (v + eda_noise_sd * normal(rng)).max(0.0)).collect();
        signals.push(eda.with_values(values));
    }
    assemble_session(subject_id, device, signals, timeline.clone())
}

/// One subject: a session per device in `spec.devices` plus ground truth.
pub fn gen_subject(spec: &CohortSpec, index: usize) -> Result<SubjectBundle> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let subject_id = format!("S{:02}", index + 1);
    let timeline = match &spec.protocol {
        Some(p) => p.clone(),
        None if rng.random::<bool>() => ProtocolTimeline::lab_session(SegmentLabel::MentalArithmetic, SegmentLabel::Startle),
        None => ProtocolTimeline::lab_session(SegmentLabel::Startle, SegmentLabel::MentalArithmetic),
    };
    let hr_base = (spec.hr_base_mean + spec.hr_base_sd * normal(&mut rng)).clamp(HR_MIN_BPM, HR_MAX_BPM);
    let responsiveness = uniform(&mut rng, spec.responsiveness_range);
    let beats = simulate_beats(spec, &timeline, hr_base, responsiveness, &mut rng);
    let eda = simulate_eda(spec, &timeline, &mut rng);

    let segment_mean_hr = timeline
        .segments()
        .iter()
        .map(|s| {
            let hr: Vec<f64> = beats
                .times
                .iter()
                .zip(&beats.rr_ms)
                .filter(|(t, _)| s.start_s <= **t && **t < s.end_s)
                .map(|(_, rr)| 60_000.0 / rr)
                .collect();
            (s.label, crate::stats::mean(&hr))
        })
        .collect();

    let mut sessions = BTreeMap::new();
    let mut devices = spec.devices.clone();
    devices.sort();
    devices.dedup();
    for device in devices {
        let view = device_view(device, &subject_id, &beats, &eda.series, &timeline, spec.eda_noise_sd, &mut rng)?;
        sessions.insert(device, view);
    }
    let truth = GroundTruth {
        subject_id: subject_id.clone(),
        timeline,
        hr_base,
        responsiveness,
        scr_event_times: eda.event_times,
        scr_amplitudes: eda.amplitudes,
        segment_mean_hr,
    };
    Ok(SubjectBundle { subject_id, sessions, truth })
}

pub fn gen_cohort(spec: &CohortSpec) -> Result<Vec<SubjectBundle>> {
    spec.validate()?;
    (0..spec.n_subjects).map(|i| gen_subject(spec, i)).collect()
}

/// Applies dropout, spikes and (for EDA) detachment episodes,
/// deterministically from `seed`. During an episode the signal reads zero;
/// afterwards it recovers as `1 - exp(-dt / reattach_tau_s)`.
pub fn apply_device_noise(session: &DeviceSession, noise: &DeviceNoiseSpec, seed: u64) -> DeviceSession {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let end = session.timeline.end_s();
    let mut signals = BTreeMap::new();
    for (kind, series) in &session.signals {
        let mut episodes = Vec::new();
        if *kind == SignalKind::Eda {
            let minutes = libm::ceil(end / 60.0) as usize;
            for m in 0..minutes {
                if rng.random::<f64>() < noise.eda_detach_prob {
                    let start = m as f64 * 60.0 + 60.0 * rng.random::<f64>();
                    episodes.push((start, start + noise.detach_duration_s));
                }
            }
        }
        let (mut ts, mut vs) = (Vec::with_capacity(series.len()), Vec::with_capacity(series.len()));
        for (&t, &v) in series.timestamps().iter().zip(series.values()) {
            let spike = rng.random::<f64>() < noise.spike_prob;
            let drop = rng.random::<f64>() < noise.dropout_prob;
            if drop {
                continue;
            }
            let mut v = if spike { v * (1.0 + noise.spike_magnitude) } else { v };
            for &(a, b) in &episodes {
                if a <= t && t < b {
                    v = 0.0;
                } else if t >= b && noise.reattach_tau_s > 0.0 {
                    v *= 1.0 - libm::exp(-(t - b) / noise.reattach_tau_s);
                }
            }
            ts.push(t);
            vs.push(v);
        }
        let noisy = TimeSeries::new(*kind, ts, vs).expect("subsequence of a valid series");
        signals.insert(*kind, noisy);
    }
    DeviceSession {
        subject_id: session.subject_id.clone(),
        device: session.device,
        signals,
        timeline: session.timeline.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CohortSpec {
        CohortSpec { n_subjects: 2, ..CohortSpec::default() }
    }

    #[test]
    fn subject_is_deterministic() {
        let a = gen_subject(&small(), 1).unwrap();
        let b = gen_subject(&small(), 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sessions.len(), 4);
        assert_ne!(gen_subject(&small(), 0).unwrap().sessions, a.sessions);
    }

    #[test]
    fn device_views_follow_capabilities() {
        let s = gen_subject(&small(), 0).unwrap();
        for (d, sess) in &s.sessions {
            assert_eq!(sess.signal(SignalKind::Eda).is_some(), d.records_eda());
            assert!(sess.signal(SignalKind::RrInterval).is_some());
        }
    }

    #[test]
    fn heart_rate_stays_in_band_and_rises_under_stress() {
        let s = gen_subject(&small(), 0).unwrap();
        let rr = s.sessions[&DeviceKind::BiopacMP160].signal(SignalKind::RrInterval).unwrap().clone();
        assert!(rr.values().iter().all(|v| (60_000.0 / 222.0..=60_000.0 / 29.0).contains(v)));
        let base = s.truth.mean_hr(SegmentLabel::Baseline).unwrap();
        for l in [SegmentLabel::MentalArithmetic, SegmentLabel::ColdPressor] {
            assert!(s.truth.mean_hr(l).unwrap() > base);
        }
    }

    #[test]
    fn events_are_spaced_and_inside_session() {
        let s = gen_subject(&small(), 0).unwrap();
        let ev = &s.truth.scr_event_times;
        assert!(!ev.is_empty());
        assert!(ev.windows(2).all(|w| w[1] - w[0] >= SCR_DEAD_TIME_S));
        assert!(ev.iter().all(|&t| (0.0..s.truth.timeline.end_s()).contains(&t)));
        assert_eq!(ev.len(), s.truth.scr_amplitudes.len());
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = gen_subject(&small(), 0).unwrap();
        let sess = &s.sessions[&DeviceKind::EmpaticaE4];
        assert_eq!(&apply_device_noise(sess, &DeviceNoiseSpec::none(), 3), sess);
    }

    #[test]
    fn detachment_pulls_eda_below_floor() {
        let s = gen_subject(&small(), 0).unwrap();
        let sess = &s.sessions[&DeviceKind::EmpaticaE4];
        let noise = DeviceNoiseSpec { eda_detach_prob: 1.0, detach_duration_s: 10.0, ..DeviceNoiseSpec::none() };
        let noisy = apply_device_noise(sess, &noise, 3);
        let eda = noisy.signal(SignalKind::Eda).unwrap();
        assert!(eda.values().windows(8).any(|w| w.iter().all(|&v| v < 0.01)));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(gen_cohort(&CohortSpec { n_subjects: 1, ..CohortSpec::default() }), Err(Error::InvalidSpec(_))));
        assert!(CohortSpec { scr_rate_rest: -1.0, ..CohortSpec::default() }.validate().is_err());
        assert!(CohortSpec { hr_stress_delta: 200.0, ..CohortSpec::default() }.validate().is_err());
        assert!(DeviceNoiseSpec { dropout_prob: 1.5, ..DeviceNoiseSpec::none() }.validate().is_err());
    }
}
