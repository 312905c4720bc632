//! Shared inputs for the benchmarks.

use std::f64::consts::TAU;

use cbw_core::experiment::ScanConfig;
use cbw_core::montecarlo::{NoiseModel, SourceModel};

/// The default two-stage scan at the default noise level.
pub fn default_scan(points: usize) -> (ScanConfig, SourceModel, NoiseModel) {
    let cfg = ScanConfig {
        points,
        scan_duration: points as f64 * 0.1,
        ..ScanConfig::default()
    };
    (cfg, SourceModel::default(), NoiseModel::default())
}

/// A uniformly sampled cosine fringe with `cycles` periods over `n` points.
pub fn cosine_trace(n: usize, cycles: f64) -> (Vec<f64>, Vec<f64>) {
    let psi: Vec<f64> = (0..n).map(|i| TAU * cycles * i as f64 / n as f64).collect();
    let values = psi.iter().map(|p| (1.0 - p.cos()) / 2.0).collect();
    (values, psi)
}
