//! Device CSV exports and protocol files.
//!
//! Signal CSV: an optional header `t_seconds,<column>` where the column is
//! `value` or one of the kind tags `hr_bpm`, `rr_ms`, `eda_us`, then one
//! `t,value` sample per line. Blank lines and lines starting with `#` are
//! ignored.
//!
//! Protocol file: one `label,start_s,end_s` segment per line with the
//! label spelled as in [`SegmentLabel`]; `#` starts a comment, and a
//! `# t0: <seconds>` comment fixes the absolute time of session start.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stressdetect_core::signal::assemble_session;
use stressdetect_core::stats;
use stressdetect_core::{DeviceKind, DeviceSession, ProtocolTimeline, Segment, SegmentLabel, SignalKind, TimeSeries};

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

/// The lab protocol shipped with the tool.
pub const DEFAULT_PROTOCOL: &str = include_str!("../assets/protocol_default.txt");

pub const PROTOCOL_FILE_NAME: &str = "protocol.txt";

/// Column tag and file name stem of each signal kind.
pub fn kind_tag(kind: SignalKind) -> &'static str {
    match kind {
        SignalKind::HeartRate => "hr_bpm",
        SignalKind::RrInterval => "rr_ms",
        SignalKind::Eda => "eda_us",
    }
}

fn kind_from_tag(tag: &str) -> Option<SignalKind> {
    [SignalKind::HeartRate, SignalKind::RrInterval, SignalKind::Eda].into_iter().find(|k| kind_tag(*k) == tag)
}

pub fn signal_file_name(kind: SignalKind) -> String {
    format!("{}.csv", kind_tag(kind))
}

/// Row accounting of one ingested file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_rows: usize,
    pub valid_rows: usize,
    pub dropped_rows: usize,
    pub malformed_rows: usize,
    pub non_finite_rows: usize,
    /// Samples merged into another sample with the same timestamp.
    pub duplicates_collapsed: usize,
}

fn parse_row(line: &str) -> Option<(f64, f64)> {
    let mut it = line.split(',');
    let t = it.next()?.trim().parse::<f64>().ok()?;
    let v = it.next()?.trim().parse::<f64>().ok()?;
    it.next().is_none().then_some((t, v))
}

/// Parses signal CSV text. Timestamps are re-based to `t0`, or to the first
/// sample when `t0` is `None`; samples sharing a timestamp collapse to
/// their median.
pub fn parse_signal_csv(text: &str, kind: SignalKind, t0: Option<f64>, path: &Path) -> Result<(TimeSeries, IngestReport)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).peekable();
    if let Some(first) = lines.peek() {
        if parse_row(first).is_none() {
            let header = lines.next().unwrap_or_default();
            let column = header.strip_prefix("t_seconds,").map(str::trim);
            match column {
                Some("value") => {}
                Some(tag) => match kind_from_tag(tag) {
                    Some(found) if found == kind => {}
                    Some(found) => return Err(Error::KindMismatch { path: path.into(), expected: kind, found }),
                    None => return Err(Error::MalformedHeader { path: path.into(), header: header.into() }),
                },
                None => return Err(Error::MalformedHeader { path: path.into(), header: header.into() }),
            }
        }
    }
    let mut report = IngestReport::default();
    let mut samples = Vec::new();
    for line in lines {
        report.total_rows += 1;
        match parse_row(line) {
            None => report.malformed_rows += 1,
            Some((t, v)) if !(t.is_finite() && v.is_finite()) => report.non_finite_rows += 1,
            Some(s) => samples.push(s),
        }
    }
    if report.malformed_rows * 10 > report.total_rows {
        return Err(Error::MalformedFile {
            path: path.into(),
            bad_rows: report.malformed_rows,
            total_rows: report.total_rows,
        });
    }
    report.valid_rows = samples.len();
    report.dropped_rows = report.malformed_rows + report.non_finite_rows;
    if samples.is_empty() {
        return Err(Error::EmptySignal { path: path.into() });
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let origin = t0.unwrap_or(samples[0].0);
    let (mut ts, mut vs) = (Vec::with_capacity(samples.len()), Vec::with_capacity(samples.len()));
    let mut i = 0;
    while i < samples.len() {
        let mut j = i + 1;
        while j < samples.len() && samples[j].0 == samples[i].0 {
            j += 1;
        }
        let group: Vec<f64> = samples[i..j].iter().map(|s| s.1).collect();
        report.duplicates_collapsed += group.len() - 1;
        ts.push(samples[i].0 - origin);
        vs.push(stats::median(&group));
        i = j;
    }
    Ok((TimeSeries::new(kind, ts, vs)?, report))
}

/// Loads a signal CSV exported by `device`.
pub fn load_signal_csv(path: &Path, device: DeviceKind, kind: SignalKind, t0: Option<f64>) -> Result<(TimeSeries, IngestReport)> {
    if kind == SignalKind::Eda && !device.records_eda() {
        return Err(stressdetect_core::Error::EdaNotSupportedForDevice(device).into());
    }
    parse_signal_csv(&read_to_string(path)?, kind, t0, path)
}

/// Serializes a series in the canonical `t_seconds,value` layout; numbers
/// use the shortest representation that parses back to the same value.
pub fn signal_csv(series: &TimeSeries) -> String {
    let mut out = String::from("t_seconds,value\n");
    for (t, v) in series.timestamps().iter().zip(series.values()) {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// A protocol timeline and the optional absolute session start.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolFile {
    pub timeline: ProtocolTimeline,
    pub t0: Option<f64>,
}

pub fn parse_protocol(text: &str, path: &Path) -> Result<ProtocolFile> {
    let bad = |line: usize, reason: String| Error::MalformedProtocol { path: path.into(), line, reason };
    let mut segments = Vec::new();
    let mut t0 = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = k + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("t0:") {
                let v = v.trim().parse::<f64>().map_err(|e| bad(n, format!("t0: {e}")))?;
                if !v.is_finite() {
                    return Err(bad(n, "t0 must be finite".into()));
                }
                t0 = Some(v);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [label, start, end] = fields[..] else {
            return Err(bad(n, format!("expected label,start_s,end_s, got {line:?}")));
        };
        let label = SegmentLabel::parse(label).ok_or_else(|| bad(n, format!("unknown segment label {label:?}")))?;
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        let (Some(start), Some(end)) = (num(start), num(end)) else {
            return Err(bad(n, format!("bad segment bounds in {line:?}")));
        };
        segments.push(Segment::new(label, start, end));
    }
    Ok(ProtocolFile { timeline: ProtocolTimeline::new(segments)?, t0 })
}

pub fn load_protocol_file(path: &Path) -> Result<ProtocolFile> {
    parse_protocol(&read_to_string(path)?, path)
}

pub fn load_protocol(path: &Path) -> Result<ProtocolTimeline> {
    Ok(load_protocol_file(path)?.timeline)
}

pub fn default_protocol() -> ProtocolFile {
    parse_protocol(DEFAULT_PROTOCOL, Path::new("<bundled protocol>")).expect("bundled protocol is valid")
}

pub fn protocol_text(timeline: &ProtocolTimeline, t0: Option<f64>) -> String {
    let mut out = String::new();
    if let Some(t0) = t0 {
        let _ = writeln!(out, "# t0: {t0}");
    }
    for s in timeline.segments() {
        let _ = writeln!(out, "{},{},{}", s.label.name(), s.start_s, s.end_s);
    }
    out
}

/// A session read from disk with per-file ingestion reports.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSession {
    pub session: DeviceSession,
    pub reports: BTreeMap<SignalKind, IngestReport>,
}

/// Cohort layout: `<subject_dir>/protocol.txt` and
/// `<subject_dir>/<device slug>/{hr_bpm,rr_ms,eda_us}.csv`. Without a
/// subject protocol, `fallback` applies.
pub fn load_session(subject_dir: &Path, device: DeviceKind, fallback: &ProtocolFile) -> Result<LoadedSession> {
    let subject_id = subject_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Config(format!("{} is not a subject directory", subject_dir.display())))?;
    let own = subject_dir.join(PROTOCOL_FILE_NAME);
    let protocol = if own.is_file() { load_protocol_file(&own)? } else { fallback.clone() };
    let device_dir = device_dir(subject_dir, device);
    let mut signals = Vec::new();
    let mut reports = BTreeMap::new();
    for kind in [SignalKind::HeartRate, SignalKind::RrInterval, SignalKind::Eda] {
        let path = device_dir.join(signal_file_name(kind));
        if path.is_file() {
            let (s, r) = load_signal_csv(&path, device, kind, protocol.t0)?;
            signals.push(s);
            reports.insert(kind, r);
        }
    }
    let session = assemble_session(subject_id, device, signals, protocol.timeline)?;
    Ok(LoadedSession { session, reports })
}

pub fn device_dir(subject_dir: &Path, device: DeviceKind) -> PathBuf {
    subject_dir.join(device.slug())
}

/// Subject directories of a cohort, sorted by name.
pub fn subject_dirs(data_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(data_dir).map_err(|e| Error::io(data_dir, e))? {
        let entry = entry.map_err(|e| Error::io(data_dir, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_dir() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, kind: SignalKind) -> Result<(TimeSeries, IngestReport)> {
        parse_signal_csv(text, kind, None, Path::new("mem.csv"))
    }

    #[test]
    fn plain_rows_parse() {
        let (s, r) = parse("0.0,72\n0.5,74\n1.0,73", SignalKind::HeartRate).unwrap();
        assert_eq!(s.values(), &[72.0, 74.0, 73.0]);
        assert_eq!(s.timestamps(), &[0.0, 0.5, 1.0]);
        assert_eq!((r.total_rows, r.valid_rows, r.dropped_rows), (3, 3, 0));
    }

    #[test]
    fn duplicates_collapse_to_median() {
        let (s, r) = parse("t_seconds,value\n0.0,72\n0.0,74\n1.0,73\n", SignalKind::HeartRate).unwrap();
        assert_eq!(s.timestamps(), &[0.0, 1.0]);
        assert_eq!(s.values(), &[73.0, 73.0]);
        assert_eq!(r.duplicates_collapsed, 1);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(parse("", SignalKind::Eda), Err(Error::EmptySignal { .. })));
        assert!(matches!(parse("t_seconds,value\n", SignalKind::Eda), Err(Error::EmptySignal { .. })));
        let mostly_bad = "0,1\n1,x\n2,y\n3,4\n";
        assert!(matches!(parse(mostly_bad, SignalKind::Eda), Err(Error::MalformedFile { bad_rows: 2, total_rows: 4, .. })));
        let mut ok = String::new();
        for i in 0..20 {
            ok.push_str(&format!("{i},1.5\n"));
        }
        ok.push_str("20,oops\n21,NaN\n");
        let (s, r) = parse(&ok, SignalKind::Eda).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!((r.total_rows, r.valid_rows, r.dropped_rows, r.malformed_rows, r.non_finite_rows), (22, 20, 2, 1, 1));
        assert_eq!(r.valid_rows + r.dropped_rows, r.total_rows);
    }

    #[test]
    fn header_kind_is_checked() {
        assert!(parse("t_seconds,rr_ms\n0,800\n", SignalKind::RrInterval).is_ok());
        assert!(matches!(
            parse("t_seconds,hr_bpm\n0,80\n", SignalKind::RrInterval),
            Err(Error::KindMismatch { expected: SignalKind::RrInterval, found: SignalKind::HeartRate, .. })
        ));
        assert!(matches!(parse("time,val\n0,80\n", SignalKind::HeartRate), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn rebasing() {
        let (s, _) = parse("100.5,1\n101.5,2\n", SignalKind::Eda).unwrap();
        assert_eq!(s.timestamps(), &[0.0, 1.0]);
        let (s, _) = parse_signal_csv("100.5,1\n101.5,2\n", SignalKind::Eda, Some(100.0), Path::new("m")).unwrap();
        assert_eq!(s.timestamps(), &[0.5, 1.5]);
    }

    #[test]
    fn round_trip_is_identity() {
        let s = TimeSeries::new(SignalKind::RrInterval, vec![0.0, 0.8123456789, 1.7], vec![812.3456789, 1e-7, 900.0]).unwrap();
        let (back, _) = parse(&signal_csv(&s), SignalKind::RrInterval).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bundled_protocol_matches_lab_session() {
        let p = default_protocol();
        assert_eq!(p.timeline, ProtocolTimeline::lab_default());
        assert_eq!(p.t0, None);
    }

    #[test]
    fn protocol_errors_and_directive() {
        let p = parse_protocol("# t0: 12.5\nBaseline,0,600\n", Path::new("p")).unwrap();
        assert_eq!(p.t0, Some(12.5));
        assert_eq!(p.timeline.segments().len(), 1);
        let overlap = parse_protocol("Baseline,0,600\nMentalArithmetic,500,700\n", Path::new("p"));
        assert!(matches!(overlap, Err(Error::Core(stressdetect_core::Error::OverlappingSegments(_)))));
        let start = parse_protocol("Rest,0,600\n", Path::new("p"));
        assert!(matches!(start, Err(Error::Core(stressdetect_core::Error::NonBaselineStart))));
        assert!(matches!(parse_protocol("baseline,0,600\n", Path::new("p")), Err(Error::MalformedProtocol { line: 1, .. })));
        let text = protocol_text(&ProtocolTimeline::lab_default(), Some(0.0));
        assert_eq!(parse_protocol(&text, Path::new("p")).unwrap().timeline, ProtocolTimeline::lab_default());
    }
}
