//! Argument parsing and exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use stressdetect_core::eval::EvalMode;

use crate::commands::{cmd_eval, cmd_features, cmd_report, cmd_synth, cmd_train};
use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::report::report_cell;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Stress detection from wearable heart rate and electrodermal activity.
///
/// Exit status: 0 on success, 1 for invalid arguments or configuration,
/// 2 when the pipeline fails.
#[derive(Debug, Parser)]
#[command(name = "stressdetect", version)]
pub struct Cli {
    /// TOML run configuration; relative paths inside resolve against its directory.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (synthetic data, forest bootstrap).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Comma-separated devices: biopac_mp160, polar_h10, empatica_e4, garmin_forerunner_55s.
    #[arg(long, global = true, value_name = "NAME,...", value_delimiter = ',')]
    pub device: Option<Vec<String>>,
    /// 1: rest vs. all stressors; 2: rest vs. mental arithmetic.
    #[arg(long, global = true, value_name = "1|2", value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: Option<u8>,
    /// Feature set: hrv (16 columns) or hrv_eda (32 columns).
    #[arg(long, global = true, value_name = "hrv|hrv_eda", value_parser = ["hrv", "hrv_eda"])]
    pub model: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Leave-one-subject-out cross-validation.
    Loso,
    /// Frozen model from the configured model file.
    Pretrained,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort into the data directory.
    Synth,
    /// Extract per-subject feature CSVs from the data directory.
    Features,
    /// Train a classifier on the extracted features and save the model file.
    Train,
    /// Evaluate and write per-device reports plus the summary tables.
    Eval {
        /// Evaluation mode.
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Re-render report.csv and report.txt from saved evaluation reports.
    Report,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, devices: self.device.clone(), scenario: self.scenario, model: self.model.clone() }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&cli.overrides());
    let s = config.settings()?;
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Synth => {
            let n = cmd_synth(&s)?;
            writeln!(out, "wrote {n} files to {}", s.data_dir.display()).map_err(io)?;
        }
        Command::Features => {
            for d in cmd_features(&s)? {
                writeln!(out, "{}: {} subjects, {} features", d.device.slug(), d.files.len(), d.schema.len()).map_err(io)?;
            }
        }
        Command::Train => {
            let m = cmd_train(&s)?;
            let meta = &m.training_meta;
            writeln!(
                out,
                "trained {} on {} windows ({} stress), saved to {}",
                m.kind().name(),
                meta.n_rows,
                meta.n_positive,
                s.model_file.display()
            )
            .map_err(io)?;
        }
        Command::Eval { mode } => {
            let mode = match mode {
                ModeArg::Loso => EvalMode::Loso,
                ModeArg::Pretrained => EvalMode::Pretrained,
            };
            for r in cmd_eval(&s, mode)? {
                writeln!(
                    out,
                    "{} {} {} scenario {}: {} ({} subjects, {} skipped)",
                    r.device.slug(),
                    r.mode.label(),
                    r.model_desc.label(),
                    r.scenario.number(),
                    report_cell(&r),
                    r.per_subject_auroc.len(),
                    r.skipped.len()
                )
                .map_err(io)?;
            }
        }
        Command::Report => {
            let (csv, txt) = cmd_report(&s)?;
            writeln!(out, "wrote {} and {}", csv.display(), txt.display()).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
