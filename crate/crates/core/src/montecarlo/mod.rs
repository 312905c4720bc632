//! Photon-counting Monte Carlo for an attenuated laser driving a circuit.
//!
//! Time is discretized twice. Coincidence windows (10 ns by default) stand in
//! for the gate of a coincidence counting unit: a detector either fires in a
//! window or not, and a coincidence is both detectors firing in the same
//! window. Windows are summed into acquisition bins (0.1 s by default), one
//! per scan point.
//!
//! The noise path (phase jitter and source-intensity drift) carries state
//! from bin to bin, so it is generated sequentially from stream 0 of the seed.
//! Given the path, bins are independent and each bin draws from its own
//! stream, so bins run in parallel with output identical to a sequential run.

mod sampling;

use rand::RngExt;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitAst, ParameterBindings, CONTROL_PHASE, SWEPT_PHASE};
use crate::error::{Error, Result};
use crate::experiment::ScanConfig;

pub use sampling::{route_photons, sample_window, seeded_rng, stream_rng, RngSeed};

/// Sub-steps per bin at which the phase-jitter process is sampled.
pub const JITTER_SUBSTEPS: usize = 16;

/// Bins with at most this many windows are simulated window by window under
/// [`Counting::Auto`].
pub const AUTO_PER_WINDOW_MAX: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    PhotonCounting,
    ClassicalIntensity,
}

/// How the windows of one bin are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counting {
    /// Per-window below [`AUTO_PER_WINDOW_MAX`] windows per bin, aggregated
    /// above.
    Auto,
    /// Draw a photon number for every window and route each photon.
    PerWindow,
    /// Draw the bin totals directly from the per-window outcome
    /// distribution. Poisson thinning makes the two detectors fire
    /// independently within a window, so the four outcomes
    /// (none / D1 only / D2 only / both) are a multinomial over the windows.
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Mean photon number per coincidence window.
    pub mean_photons_per_window: f64,
    /// Seconds.
    pub window_duration: f64,
    pub mode: SourceMode,
    pub counting: Counting,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            mean_photons_per_window: 0.04,
            window_duration: 10e-9,
            mode: SourceMode::PhotonCounting,
            counting: Counting::Auto,
        }
    }
}

impl SourceModel {
    pub fn classical() -> Self {
        Self {
            mode: SourceMode::ClassicalIntensity,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.mean_photons_per_window;
        if self.mode == SourceMode::PhotonCounting && !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!(
                "mean photons per window must be > 0, got {lambda}"
            )));
        }
        if !(self.window_duration > 0.0 && self.window_duration.is_finite()) {
            return Err(Error::Config(format!(
                "window duration must be > 0, got {}",
                self.window_duration
            )));
        }
        Ok(())
    }
}

/// Imperfections of the interferometer and detectors.
///
/// The defaults are not measured values. `phase_jitter_sigma` was fitted so
/// that the coincidence fringe of the two-stage chain over a default scan
/// shows a visibility near 98.5%, as measured by
/// [`crate::experiment::visibility`]; the rest are plausible magnitudes for a boxed table-top setup with
/// silicon photon counters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Stationary standard deviation of the common phase jitter, radians.
    pub phase_jitter_sigma: f64,
    /// Correlation time of the jitter, seconds. The jitter is an
    /// Ornstein-Uhlenbeck walk with step correlation `exp(-dt / tau)`;
    /// `0` makes successive sub-steps independent.
    pub phase_jitter_correlation: f64,
    /// Relative standard deviation of the per-bin source intensity.
    pub intensity_drift_fraction: f64,
    /// Dark counts per second, per detector.
    pub dark_rate: f64,
    /// Probability that an arriving photon is registered.
    pub detector_efficiency: f64,
}

impl NoiseModel {
    /// Ideal detectors and a perfectly still interferometer.
    pub fn none() -> Self {
        Self {
            phase_jitter_sigma: 0.0,
            phase_jitter_correlation: 0.0,
            intensity_drift_fraction: 0.0,
            dark_rate: 0.0,
            detector_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("phase_jitter_sigma", self.phase_jitter_sigma),
            ("phase_jitter_correlation", self.phase_jitter_correlation),
            ("intensity_drift_fraction", self.intensity_drift_fraction),
            ("dark_rate", self.dark_rate),
            ("detector_efficiency", self.detector_efficiency),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.detector_efficiency > 1.0 {
            return Err(Error::Config(format!(
                "detector_efficiency must be <= 1, got {}",
                self.detector_efficiency
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            phase_jitter_sigma: 0.056,
            phase_jitter_correlation: 1e-3,
            intensity_drift_fraction: 0.02,
            dark_rate: 100.0,
            detector_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Singles and coincidences are counts.
    PhotonCounting,
    /// Singles hold output powers; coincidences are zero.
    Classical,
}

/// Per-bin detector record of one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTrace {
    pub mode: TraceMode,
    pub bin_index: Vec<u64>,
    /// Bin start, seconds.
    pub time: Vec<f64>,
    pub voltage: Vec<f64>,
    /// Nominal swept phase from the PZT model (without jitter).
    pub psi: Vec<f64>,
    pub singles_d1: Vec<f64>,
    pub singles_d2: Vec<f64>,
    pub coincidences: Vec<f64>,
    pub metadata: TraceMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub seed: RngSeed,
    pub windows_per_bin: u64,
    pub scan: Option<ScanConfig>,
    pub source: Option<SourceModel>,
    pub noise: Option<NoiseModel>,
}

impl CountTrace {
    pub fn empty(mode: TraceMode, seed: RngSeed) -> Self {
        Self {
            mode,
            bin_index: Vec::new(),
            time: Vec::new(),
            voltage: Vec::new(),
            psi: Vec::new(),
            singles_d1: Vec::new(),
            singles_d2: Vec::new(),
            coincidences: Vec::new(),
            metadata: TraceMetadata {
                seed,
                windows_per_bin: 0,
                scan: None,
                source: None,
                noise: None,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.bin_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_index.is_empty()
    }

    /// Checks the per-bin invariants: equal column lengths, non-negative
    /// finite values and coincidences bounded by both singles.
    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let cols = [
            self.time.len(),
            self.voltage.len(),
            self.psi.len(),
            self.singles_d1.len(),
            self.singles_d2.len(),
            self.coincidences.len(),
        ];
        if cols.iter().any(|&c| c != n) {
            return Err(Error::InvalidArgument(format!(
                "trace columns have unequal lengths: {n} bins vs {cols:?}"
            )));
        }
        for i in 0..n {
            let (a, b, c) = (self.singles_d1[i], self.singles_d2[i], self.coincidences[i]);
            if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || c > a.min(b) {
                return Err(Error::InvalidArgument(format!(
                    "bin {i}: invalid counts d1={a} d2={b} coinc={c}"
                )));
            }
        }
        Ok(())
    }

    fn push_row(&mut self, scan: &ScanConfig, i: usize, row: BinCounts) {
        self.bin_index.push(i as u64);
        self.time.push(scan.bin_time(i));
        self.voltage.push(scan.voltage(i));
        self.psi.push(scan.psi(i));
        self.singles_d1.push(row.d1);
        self.singles_d2.push(row.d2);
        self.coincidences.push(row.coinc);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BinCounts {
    d1: f64,
    d2: f64,
    coinc: f64,
}

/// Number of whole coincidence windows in one acquisition bin.
pub fn windows_per_bin(bin_duration: f64, window_duration: f64) -> Result<u64> {
    let ratio = bin_duration / window_duration;
    let n = ratio.round();
    if !(n >= 1.0 && n.is_finite()) || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::Config(format!(
            "bin duration {bin_duration} s is not an integer multiple of the window duration {window_duration} s"
        )));
    }
    Ok(n as u64)
}

/// Phase offsets and intensity factors for every bin, generated sequentially.
struct NoisePath {
    phase: Vec<[f64; JITTER_SUBSTEPS]>,
    intensity: Vec<f64>,
}

impl NoisePath {
    fn generate(points: usize, bin_duration: f64, noise: &NoiseModel, seed: RngSeed) -> Self {
        let mut rng = stream_rng(seed, 0);
        let tau = noise.phase_jitter_correlation;
        let sub_dt = bin_duration / JITTER_SUBSTEPS as f64;
        let rho_sub = if tau > 0.0 {
            (-sub_dt / tau).exp()
        } else {
            0.0
        };
        let rho_bin = if tau > 0.0 {
            (-bin_duration / tau).exp()
        } else {
            0.0
        };
        let sigma = noise.phase_jitter_sigma;
        let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

        let mut x = sigma * normal();
        let mut y = normal();
        let mut phase = Vec::with_capacity(points);
        let mut intensity = Vec::with_capacity(points);
        for _ in 0..points {
            let mut sub = [0.0; JITTER_SUBSTEPS];
            for s in sub.iter_mut() {
                *s = x;
                x = rho_sub * x + sigma * (1.0 - rho_sub * rho_sub).sqrt() * normal();
            }
            phase.push(sub);
            intensity.push((1.0 + noise.intensity_drift_fraction * y).max(0.0));
            y = rho_bin * y + (1.0 - rho_bin * rho_bin).sqrt() * normal();
        }
        Self { phase, intensity }
    }

    fn substeps(&self, noise: &NoiseModel) -> usize {
        if noise.phase_jitter_sigma > 0.0 {
            JITTER_SUBSTEPS
        } else {
            1
        }
    }
}

fn bindings_for(ast: &CircuitAst, psi: f64, phi: f64) -> ParameterBindings {
    let mut b = ParameterBindings::new().with(SWEPT_PHASE, psi);
    if ast.parameters().contains(CONTROL_PHASE) {
        b.set(CONTROL_PHASE, phi);
    }
    b
}

/// Windows assigned to sub-step `s` out of `substeps`.
fn sub_windows(total: u64, substeps: usize, s: usize) -> u64 {
    let k = substeps as u64;
    total / k + u64::from((s as u64) < total % k)
}

struct CountingContext {
    lambda: f64,
    efficiency: f64,
    dark_per_window: f64,
    per_window: bool,
}

fn count_windows(
    ctx: &CountingContext,
    lambda: f64,
    p_upper: f64,
    windows: u64,
    rng: &mut rand_pcg::Pcg64,
) -> BinCounts {
    if windows == 0 {
        return BinCounts::default();
    }
    if ctx.per_window {
        let (mut d1, mut d2, mut both) = (0u64, 0u64, 0u64);
        for _ in 0..windows {
            let (mut a, mut b) = if lambda > 0.0 {
                let k = sample_window(lambda, rng);
                route_photons(k, p_upper, ctx.efficiency, rng)
            } else {
                (false, false)
            };
            if ctx.dark_per_window > 0.0 {
                a |= rng.random::<f64>() < ctx.dark_per_window;
                b |= rng.random::<f64>() < ctx.dark_per_window;
            }
            d1 += u64::from(a);
            d2 += u64::from(b);
            both += u64::from(a && b);
        }
        return BinCounts {
            d1: d1 as f64,
            d2: d2 as f64,
            coinc: both as f64,
        };
    }

    // Detected photons per window on each output are independent Poisson
    // variables; dark counts add independently.
    let dark_mean = -(-ctx.dark_per_window).ln_1p();
    let q1 = -(-(lambda * ctx.efficiency * p_upper + dark_mean)).exp_m1();
    let q2 = -(-(lambda * ctx.efficiency * (1.0 - p_upper) + dark_mean)).exp_m1();
    let binomial = |n: u64, p: f64, rng: &mut rand_pcg::Pcg64| -> u64 {
        let p = p.clamp(0.0, 1.0);
        if n == 0 || p == 0.0 {
            0
        } else if p == 1.0 {
            n
        } else {
            Binomial::new(n, p)
                .expect("p clamped to [0, 1]")
                .sample(rng)
        }
    };
    let both = binomial(windows, q1 * q2, rng);
    let only_d1 = binomial(windows - both, q1 * (1.0 - q2) / (1.0 - q1 * q2), rng);
    let only_d2 = binomial(windows - both - only_d1, q2, rng);
    BinCounts {
        d1: (both + only_d1) as f64,
        d2: (both + only_d2) as f64,
        coinc: both as f64,
    }
}

/// Photon-counting scan of `ast` over the PZT ramp in `scan`.
///
/// For each bin: the swept phase comes from the PZT model plus the jitter
/// path; the circuit gives the routing probability; every window of the bin
/// is counted as described for [`Counting`]. Dark counts fire each detector
/// independently with probability `1 - exp(-dark_rate * window)` per window,
/// so they also produce accidental coincidences.
///
/// The circuit's source intensity is not used: the photon flux is set by
/// `source.mean_photons_per_window`.
pub fn simulate_scan_counts(
    ast: &CircuitAst,
    scan: &ScanConfig,
    source: &SourceModel,
    noise: &NoiseModel,
    seed: RngSeed,
) -> Result<CountTrace> {
    if source.mode != SourceMode::PhotonCounting {
        return Err(Error::Config(
            "photon-counting simulation needs a photon-counting source".into(),
        ));
    }
    source.validate()?;
    noise.validate()?;
    scan.validate()?;
    let mut trace = CountTrace::empty(TraceMode::PhotonCounting, seed);
    if scan.points == 0 {
        return Ok(trace);
    }
    let windows = windows_per_bin(scan.bin_duration, source.window_duration)?;
    let per_window = match source.counting {
        Counting::PerWindow => true,
        Counting::Aggregated => false,
        Counting::Auto => windows <= AUTO_PER_WINDOW_MAX,
    };
    let ctx = CountingContext {
        lambda: source.mean_photons_per_window,
        efficiency: noise.detector_efficiency,
        dark_per_window: -(-noise.dark_rate * source.window_duration).exp_m1(),
        per_window,
    };
    let path = NoisePath::generate(scan.points, scan.bin_duration, noise, seed);
    let substeps = path.substeps(noise);

    let rows = (0..scan.points)
        .into_par_iter()
        .map(|i| -> Result<BinCounts> {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let psi = scan.psi(i);
            let lambda = ctx.lambda * path.intensity[i];
            let mut total = BinCounts::default();
            for s in 0..substeps {
                let b = bindings_for(ast, psi + path.phase[i][s], scan.phi);
                let (p_upper, _) = circuit::output_probabilities(ast, &b)?;
                let c = count_windows(
                    &ctx,
                    lambda,
                    p_upper,
                    sub_windows(windows, substeps, s),
                    &mut rng,
                );
                total.d1 += c.d1;
                total.d2 += c.d2;
                total.coinc += c.coinc;
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;

    for (i, row) in rows.into_iter().enumerate() {
        trace.push_row(scan, i, row);
    }
    trace.metadata.windows_per_bin = windows;
    trace.metadata.scan = Some(scan.clone());
    trace.metadata.source = Some(*source);
    trace.metadata.noise = Some(*noise);
    Ok(trace)
}

/// Continuous-wave version of the scan: per-bin output powers with the same
/// jitter path and intensity drift, stored in the singles columns.
///
/// Dark counts and detector efficiency do not apply to a power measurement.
pub fn simulate_classical_trace(
    ast: &CircuitAst,
    scan: &ScanConfig,
    source: &SourceModel,
    noise: &NoiseModel,
    seed: RngSeed,
) -> Result<CountTrace> {
    if source.mode != SourceMode::ClassicalIntensity {
        return Err(Error::Config(
            "classical trace needs a classical-intensity source".into(),
        ));
    }
    source.validate()?;
    noise.validate()?;
    scan.validate()?;
    let mut trace = CountTrace::empty(TraceMode::Classical, seed);
    if scan.points == 0 {
        return Ok(trace);
    }
    let path = NoisePath::generate(scan.points, scan.bin_duration, noise, seed);
    let substeps = path.substeps(noise);
    let i0 = ast.source_intensity();

    let rows = (0..scan.points)
        .into_par_iter()
        .map(|i| -> Result<BinCounts> {
            let psi = scan.psi(i);
            let scale = i0 * path.intensity[i] / substeps as f64;
            let mut row = BinCounts::default();
            for s in 0..substeps {
                let b = bindings_for(ast, psi + path.phase[i][s], scan.phi);
                let (u, l) = circuit::output_probabilities(ast, &b)?;
                row.d1 += u * scale;
                row.d2 += l * scale;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    for (i, row) in rows.into_iter().enumerate() {
        trace.push_row(scan, i, row);
    }
    trace.metadata.scan = Some(scan.clone());
    trace.metadata.source = Some(*source);
    trace.metadata.noise = Some(*noise);
    Ok(trace)
}
