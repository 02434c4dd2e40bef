use alloc::vec::Vec;

use crate::features::find_peaks;
use crate::signal::TimeSeries;

/// Default driver peak threshold as a fraction of the largest driver value.
pub const DRIVER_EVENT_REL_THRESHOLD: f64 = 0.1;

/// Times of driver peaks above `rel_threshold * max(driver)`, at least 1 s
/// apart.
pub fn detect_driver_events(driver: &TimeSeries, rel_threshold: f64) -> Vec<f64> {
    let max = driver.values().iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    find_peaks(driver, rel_threshold * max, 1.0).into_iter().map(|k| driver.timestamps()[k]).collect()
}

/// Counts of true events with a detection within `tol_s`, and of detections
/// with a true event within `tol_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventMatch {
    pub events: usize,
    pub recovered: usize,
    pub detections: usize,
    pub confirmed: usize,
}

impl EventMatch {
    pub fn of(truth: &[f64], detected: &[f64], tol_s: f64) -> EventMatch {
        let near = |t: f64, set: &[f64]| set.iter().any(|s| libm::fabs(s - t) <= tol_s);
        EventMatch {
            events: truth.len(),
            recovered: truth.iter().filter(|&&t| near(t, detected)).count(),
            detections: detected.len(),
            confirmed: detected.iter().filter(|&&t| near(t, truth)).count(),
        }
    }

    pub fn merge(self, other: EventMatch) -> EventMatch {
        EventMatch {
            events: self.events + other.events,
            recovered: self.recovered + other.recovered,
            detections: self.detections + other.detections,
            confirmed: self.confirmed + other.confirmed,
        }
    }

    pub fn recall(&self) -> f64 {
        if self.events == 0 { 1.0 } else { self.recovered as f64 / self.events as f64 }
    }

    pub fn precision(&self) -> f64 {
        if self.detections == 0 { 1.0 } else { self.confirmed as f64 / self.detections as f64 }
    }
}
