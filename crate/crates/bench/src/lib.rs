//! Shared helpers for the benchmark targets.

use gaplap_core::Mat;

/// Deterministic pseudo-random score matrix (no RNG dependency in the lib).
pub fn scores_for_len(len: usize) -> Mat {
    Mat::from_fn(len, len, |h, m| {
        let x = (h * 31 + m * 17 + 7) % 101;
        (x as f64) / 101.0 * 6.0 - 3.0
    })
}
