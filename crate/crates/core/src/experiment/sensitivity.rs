use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_cbw_chain, output_intensities, ParameterBindings, SWEPT_PHASE};
use crate::error::{Error, Result};

/// Grid points per fringe period below which central differences are not
/// trusted.
pub const MIN_POINTS_PER_PERIOD: usize = 10_000;

/// Phase sensitivity of an `m`-stage chain.
///
/// Sensitivity is taken as the inverse of the steepest slope of the
/// normalized output difference `I_upper - I_lower` (with unit intensity
/// noise). Only ratios between chains carry physical meaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub m: usize,
    /// Maximum of `|d(I_upper - I_lower)/d psi|` for unit input intensity.
    pub eta: f64,
    /// `1 / eta`, radians.
    pub delta_phi: f64,
    /// `delta_phi` of this chain over that of a single interferometer.
    pub ratio_to_classical: f64,
    /// First grid point in `[0, 2 pi)` where the slope is steepest.
    pub max_slope_psi: f64,
}

/// Steepest slope of the output difference and where it occurs, by
/// periodic central differences over `grid` points of `[0, 2 pi)`.
fn max_slope(m: usize, grid: usize) -> Result<(f64, f64)> {
    let ast = build_cbw_chain(m, 0.0)?;
    let h = TAU / grid as f64;
    let diff = (0..grid)
        .map(|i| {
            let b = ParameterBindings::new().with(SWEPT_PHASE, i as f64 * h);
            output_intensities(&ast, &b).map(|(u, l)| u - l)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0.0, 0.0);
    for i in 0..grid {
        let slope = (diff[(i + 1) % grid] - diff[(i + grid - 1) % grid]) / (2.0 * h);
        if slope.abs() > best.0 {
            best = (slope.abs(), i as f64 * h);
        }
    }
    Ok(best)
}

/// Evaluates the noiseless chain at `phi = 0` on `grid` points of one
/// single-interferometer period.
///
/// `grid` must give at least [`MIN_POINTS_PER_PERIOD`] points per period of
/// the `m`-fold fringe.
pub fn estimate_sensitivity(m: usize, grid: usize) -> Result<SensitivityReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if grid < MIN_POINTS_PER_PERIOD.saturating_mul(m) {
        return Err(Error::InvalidArgument(format!(
            "grid of {grid} points is too coarse for m={m}; need at least {}",
            MIN_POINTS_PER_PERIOD * m
        )));
    }
    let (eta, max_slope_psi) = max_slope(m, grid)?;
    let (eta_1, _) = if m == 1 {
        (eta, 0.0)
    } else {
        max_slope(1, grid)?
    };
    let delta_phi = 1.0 / eta;
    Ok(SensitivityReport {
        m,
        eta,
        delta_phi,
        ratio_to_classical: delta_phi * eta_1,
        max_slope_psi,
    })
}
