//! Tabular rendering of evaluation reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stressdetect_core::eval::{EvalMode, EvalReport};
use stressdetect_core::DeviceKind;

use crate::error::Result;
use crate::fsutil::write_atomic;

pub const REPORT_CSV_HEADER: &str = "device,mode,scenario,model,median,q1,q3,n_subjects,n_skipped";

/// `median [q1–q3]` with three decimals.
pub fn format_cell(median: f64, q1: f64, q3: f64) -> String {
    format!("{median:.3} [{q1:.3}\u{2013}{q3:.3}]")
}

pub fn report_cell(r: &EvalReport) -> String {
    format_cell(r.median, r.q1, r.q3)
}

fn mode_slug(mode: EvalMode) -> &'static str {
    match mode {
        EvalMode::Loso => "loso",
        EvalMode::Pretrained => "pretrained",
    }
}

fn sorted(reports: &[EvalReport]) -> Vec<&EvalReport> {
    let mut out: Vec<&EvalReport> = reports.iter().collect();
    out.sort_by_key(|r| (r.device, r.mode, r.scenario, r.model_desc));
    out
}

pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in sorted(reports) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.device.slug(),
            mode_slug(r.mode),
            r.scenario.number(),
            r.model_desc.slug(),
            r.median,
            r.q1,
            r.q3,
            r.per_subject_auroc.len(),
            r.skipped.len()
        );
    }
    out
}

/// Devices as rows, one column per evaluation mode and scenario; a cell
/// lists `model: median [q1–q3]` for every model evaluated there.
pub fn report_table(reports: &[EvalReport]) -> String {
    let reports = sorted(reports);
    let mut columns: Vec<_> = reports.iter().map(|r| (r.mode, r.scenario)).collect();
    columns.sort();
    columns.dedup();
    let mut devices: Vec<DeviceKind> = reports.iter().map(|r| r.device).collect();
    devices.dedup();

    let mut grid = vec![std::iter::once("Device".to_string())
        .chain(columns.iter().map(|(m, s)| format!("{}, Scenario {}", m.label(), s.number())))
        .collect::<Vec<_>>()];
    for d in &devices {
        let mut row = vec![d.display_name().to_string()];
        for &(mode, scenario) in &columns {
            let cell: Vec<String> = reports
                .iter()
                .filter(|r| r.device == *d && r.mode == mode && r.scenario == scenario)
                .map(|r| format!("{}: {}", r.model_desc.label(), report_cell(r)))
                .collect();
            row.push(if cell.is_empty() { "-".to_string() } else { cell.join("; ") });
        }
        grid.push(row);
    }
    let widths: Vec<usize> =
        (0..grid[0].len()).map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::from("Median AUROC [IQR] across subjects\n\n");
    for (i, row) in grid.iter().enumerate() {
        let cells: Vec<String> =
            row.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
    }
    out
}

/// Writes `report.csv` and `report.txt` into `dir`.
pub fn render_report(reports: &[EvalReport], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if reports.is_empty() {
        return Err(stressdetect_core::Error::EmptyInput.into());
    }
    let csv = dir.join("report.csv");
    let txt = dir.join("report.txt");
    write_atomic(&csv, report_csv(reports).as_bytes())?;
    write_atomic(&txt, report_table(reports).as_bytes())?;
    Ok((csv, txt))
}
