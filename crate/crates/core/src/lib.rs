//! Offline toolkit for EEG-based evaluation of user experience.
//!
//! Calibration protocols generate event streams; per-construct pipelines
//! (workload, attention, interaction errors) are trained from calibration
//! recordings and applied to interaction sessions to produce continuous
//! indices, which the statistics module compares across conditions. A
//! synthetic forward model supplies recordings with known ground truth.

pub mod error;
pub mod linalg;
pub mod protocols;
pub mod session;
pub mod sigproc;
pub mod spatial;

pub mod classify;
pub mod constructs;
pub mod stats;
pub mod synth;
pub use error::{Error, Result};
pub use nalgebra;
