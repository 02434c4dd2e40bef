//! Tonic/phasic decomposition of electrodermal activity.
//!
//! The observed (normalized) skin conductance `y` is modelled as
//!
//! ```text
//! y = M q + B l + C d + noise
//! ```
//!
//! where `M` convolves a non-negative sparse sudomotor driver `q` with a
//! biexponential impulse response, `B` holds cubic B-splines for the slow
//! tonic level, and `C = [1, t]` adds an offset and linear drift. The
//! components are the minimizer of
//!
//! ```text
//! ½‖y − Mq − Bl − Cd‖² + alpha·Σq + ½·gamma·‖l‖²   subject to q ≥ 0
//! ```
//!
//! solved with the projected Newton method of [`crate::qp`] using the banded
//! structure of `MᵀM`.

mod decompose;
mod events;
mod irf;
mod spline;

pub use decompose::{decompose_eda, solve_decomposition, CvxEdaConfig, CvxEdaProblem, EdaDecomposition, SolveInfo};
pub use events::{detect_driver_events, EventMatch, DRIVER_EVENT_REL_THRESHOLD};
pub use irf::{ConvolutionOperator, sample_kernel};
pub use spline::TonicBasis;
