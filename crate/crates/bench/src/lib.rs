//! Fixtures shared by the benchmarks.

use neuroeval_core::nalgebra::DMatrix;
use neuroeval_core::session::Recording;
use neuroeval_core::synth::{gen_noise, ForwardModelConfig, Preset};

/// Background EEG of the given length at the default preset.
pub fn noise_recording(duration_sec: f64) -> Recording {
    gen_noise(&ForwardModelConfig::preset(Preset::PaperLike), duration_sec, 1).expect("noise recording")
}

/// Well-conditioned symmetric positive definite matrix.
pub fn spd(n: usize, phase: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64 * 0.37 + phase).sin());
    &a * a.transpose() + DMatrix::identity(n, n) * n as f64
}

/// Deterministic two-class feature rows with a mean shift on every column.
pub fn features(n_trials: usize, n_features: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let y: Vec<bool> = (0..n_trials).map(|i| i % 5 == 0).collect();
    let x = (0..n_trials)
        .map(|i| {
            (0..n_features)
                .map(|j| ((i * 31 + j * 17) as f64 * 0.61).sin() + if y[i] { 0.3 } else { 0.0 })
                .collect()
        })
        .collect();
    (x, y)
}
