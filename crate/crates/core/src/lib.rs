//! Numerical core of a wearable stress-detection toolkit.
//!
//! Everything in this crate is pure computation over in-memory data and only
//! needs `alloc`: signal containers and protocol timelines, artifact
//! removal and normalization, convex tonic/phasic decomposition of
//! electrodermal activity, windowed HRV/EDA features, an RBF support vector
//! machine with Platt calibration, a CART random forest, AUROC-based
//! leave-one-subject-out and frozen-model evaluation, and a synthetic cohort
//! generator with known ground truth.
//!
//! File formats, configuration and the command-line front end live in the
//! `stressdetect` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod eda;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod qp;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{DeviceKind, DeviceSession, ProtocolTimeline, Segment, SegmentLabel, SignalKind, TimeSeries};
