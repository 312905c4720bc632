//! Experiment harness: the PZT ramp model, scan execution and fringe
//! analysis.

mod analysis;
mod sensitivity;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_cbw_chain, CircuitAst};
use crate::error::{Error, Result};
use crate::montecarlo::{
    simulate_classical_trace, simulate_scan_counts, CountTrace, NoiseModel, RngSeed, SourceMode,
    SourceModel,
};

pub use analysis::{
    analyze_series, dominant_period, find_extrema, spectral_peak, visibility, visibility_with,
    Extrema, Extremum, FringeStats, SpectralPeak, DEFAULT_PROMINENCE, MIN_PEAK_RATIO,
};
pub use sensitivity::{estimate_sensitivity, SensitivityReport};

/// Linear PZT response: single-interferometer phase cycles produced by the
/// whole voltage ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PztCalibration {
    pub cycles_per_full_ramp: f64,
}

impl Default for PztCalibration {
    /// 10.5 cycles per ramp, i.e. 21 fringes of the doubled coincidence
    /// signal of a single interferometer.
    fn default() -> Self {
        Self {
            cycles_per_full_ramp: 10.5,
        }
    }
}

/// Swept phase for a PZT voltage.
pub fn pzt_phase(voltage: f64, cal: &PztCalibration, ramp_span: f64) -> f64 {
    voltage * (TAU * cal.cycles_per_full_ramp / ramp_span)
}

/// One simulated scan: a single up-leg of the PZT ramp sampled in
/// equal acquisition bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Volts.
    pub ramp_start: f64,
    /// Volts.
    pub ramp_end: f64,
    /// Seconds.
    pub scan_duration: f64,
    pub points: usize,
    /// Seconds per acquisition bin.
    pub bin_duration: f64,
    pub calibration: PztCalibration,
    /// Control phase between stages, radians.
    pub phi: f64,
    /// Number of cascaded stages used when `circuit` is `None`.
    pub modules: usize,
    /// Explicit circuit replacing the generated chain. Its `psi` parameter is
    /// swept; a `phi` parameter, if present, takes the value above.
    pub circuit: Option<CircuitAst>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            ramp_start: 0.0,
            ramp_end: 100.0,
            scan_duration: 500.0,
            points: 5000,
            bin_duration: 0.1,
            calibration: PztCalibration::default(),
            phi: 0.0,
            modules: 2,
            circuit: None,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("ramp_start", self.ramp_start),
            ("ramp_end", self.ramp_end),
            ("scan_duration", self.scan_duration),
            ("bin_duration", self.bin_duration),
            ("phi", self.phi),
            (
                "cycles_per_full_ramp",
                self.calibration.cycles_per_full_ramp,
            ),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite, got {v}")));
        }
        if self.ramp_end <= self.ramp_start {
            return Err(Error::Config(format!(
                "ramp_end ({}) must exceed ramp_start ({})",
                self.ramp_end, self.ramp_start
            )));
        }
        if self.bin_duration <= 0.0 {
            return Err(Error::Config(format!(
                "bin_duration must be > 0, got {}",
                self.bin_duration
            )));
        }
        if self.calibration.cycles_per_full_ramp <= 0.0 {
            return Err(Error::Config(format!(
                "cycles_per_full_ramp must be > 0, got {}",
                self.calibration.cycles_per_full_ramp
            )));
        }
        if self.points == 1 {
            return Err(Error::Config("a scan needs at least 2 points".into()));
        }
        if self.circuit.is_none() && self.modules == 0 {
            return Err(Error::Config("modules must be >= 1".into()));
        }
        let acquired = self.points as f64 * self.bin_duration;
        if (acquired - self.scan_duration).abs() > self.bin_duration * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "{} points of {} s do not fill a {} s scan (tolerance one bin)",
                self.points, self.bin_duration, self.scan_duration
            )));
        }
        Ok(())
    }

    pub fn ramp_span(&self) -> f64 {
        self.ramp_end - self.ramp_start
    }

    /// PZT voltage of bin `i`; the first bin sits at `ramp_start` and the last
    /// at `ramp_end`.
    pub fn voltage(&self, i: usize) -> f64 {
        if self.points < 2 {
            return self.ramp_start;
        }
        self.ramp_start + self.ramp_span() * i as f64 / (self.points - 1) as f64
    }

    pub fn psi(&self, i: usize) -> f64 {
        pzt_phase(self.voltage(i), &self.calibration, self.ramp_span())
    }

    /// Start time of bin `i`, seconds.
    pub fn bin_time(&self, i: usize) -> f64 {
        i as f64 * self.bin_duration
    }

    /// The circuit this scan drives.
    pub fn circuit_ast(&self) -> Result<CircuitAst> {
        match &self.circuit {
            Some(ast) => Ok(ast.clone()),
            None => build_cbw_chain(self.modules, self.phi),
        }
    }
}

/// Runs the scan with the photon-counting or classical simulator according to
/// the source mode.
pub fn run_scan(
    config: &ScanConfig,
    source: &SourceModel,
    noise: &NoiseModel,
    seed: RngSeed,
) -> Result<CountTrace> {
    config.validate()?;
    let ast = config.circuit_ast()?;
    match source.mode {
        SourceMode::PhotonCounting => simulate_scan_counts(&ast, config, source, noise, seed),
        SourceMode::ClassicalIntensity => {
            simulate_classical_trace(&ast, config, source, noise, seed)
        }
    }
}
