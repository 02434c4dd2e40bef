//! File formats, configuration and command-line front end around
//! [`stressdetect_core`].
//!
//! On-disk cohort layout:
//!
//! ```text
//! <data_dir>/
//!   manifest.json                 ground truth (synthetic cohorts only)
//!   S01/
//!     protocol.txt                optional per-subject protocol
//!     biopac_mp160/rr_ms.csv
//!     biopac_mp160/eda_us.csv
//!     polar_h10/rr_ms.csv
//!     ...
//! <output_dir>/
//!   features/<device>/scenario<k>/<subject>.csv
//!   model.json
//!   reports/<mode>_<model>_scenario<k>_<device>.json
//!   reports/report.csv
//!   reports/report.txt
//! ```

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod fsutil;
pub mod ingest;
pub mod model_file;
pub mod report;

pub use error::{Error, Result};
