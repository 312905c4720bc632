//! Closed-form intensity laws and the experiment's auxiliary formulas.
//!
//! The closed forms here are written out by hand, independently of the matrix
//! engine, so the two routes can check each other. Only configurations
//! without a printed closed form are delegated to [`circuit::evaluate_chain`].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::circuit::{self, ParameterBindings, CONTROL_PHASE, SWEPT_PHASE};
use crate::error::{ensure_finite, Error, Result};

/// Angular distance below which a control phase counts as exactly 0 or pi.
const BASIS_TOL: f64 = 1e-14;

/// Which formula produced an [`AnalyticPrediction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleBranch {
    /// `I0 (1 -/+ cos psi) / 2`.
    SingleMzi,
    /// Two stages, `phi = 0`: `I0 (1 +/- cos 2 psi) / 2`.
    Asymmetric,
    /// Two stages, `phi = pi`: `(I0, 0)` for every `psi`.
    Symmetric,
    /// Numeric matrix composition.
    Composition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPrediction {
    pub i_upper: f64,
    pub i_lower: f64,
    pub branch: OracleBranch,
}

fn check_i0(i0: f64) -> Result<()> {
    ensure_finite("i0", i0)?;
    if i0 < 0.0 {
        return Err(Error::InvalidParameter {
            name: "i0",
            reason: format!("must be >= 0, got {i0}"),
        });
    }
    Ok(())
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn single_mzi_intensities(psi: f64, i0: f64) -> AnalyticPrediction {
    let c = psi.cos();
    AnalyticPrediction {
        i_upper: i0 * (1.0 - c) / 2.0,
        i_lower: i0 * (1.0 + c) / 2.0,
        branch: OracleBranch::SingleMzi,
    }
}

/// Output intensities of the `m`-stage chain built by
/// [`circuit::build_cbw_chain`].
pub fn cbw_intensities(psi: f64, phi: f64, m: usize, i0: f64) -> Result<AnalyticPrediction> {
    check_i0(i0)?;
    ensure_finite("psi", psi)?;
    ensure_finite("phi", phi)?;
    match m {
        0 => Err(Error::InvalidArgument(
            "a chain needs at least one stage".into(),
        )),
        1 => Ok(single_mzi_intensities(psi, i0)),
        2 if angular_distance(phi, 0.0) < BASIS_TOL => {
            let c = (2.0 * psi).cos();
            Ok(AnalyticPrediction {
                i_upper: i0 * (1.0 + c) / 2.0,
                i_lower: i0 * (1.0 - c) / 2.0,
                branch: OracleBranch::Asymmetric,
            })
        }
        2 if angular_distance(phi, PI) < BASIS_TOL => Ok(AnalyticPrediction {
            i_upper: i0,
            i_lower: 0.0,
            branch: OracleBranch::Symmetric,
        }),
        _ => {
            let ast = circuit::build_cbw_chain(m, circuit::PhaseValue::param(CONTROL_PHASE))?;
            let bindings = ParameterBindings::new()
                .with(SWEPT_PHASE, psi)
                .with(CONTROL_PHASE, phi);
            let (u, l) = circuit::output_intensities(&ast, &bindings)?;
            Ok(AnalyticPrediction {
                i_upper: u * i0,
                i_lower: l * i0,
                branch: OracleBranch::Composition,
            })
        }
    }
}

/// Fringe wavelength of the individual outputs of an `m`-stage chain at
/// `phi = 0`: `lambda0 / m`.
///
/// Counting basic C+B building blocks as `n`, the two-stage chain is `n = 1`
/// and `lambda0 / 2n` coincides with `lambda0 / m` at `m = 2`.
pub fn cbw_wavelength(m: usize, lambda0: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "a chain needs at least one stage".into(),
        ));
    }
    ensure_finite("lambda0", lambda0)?;
    if lambda0 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda0",
            reason: format!("must be > 0, got {lambda0}"),
        });
    }
    Ok(lambda0 / m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpdFormula {
    /// `L0 (n / cos theta - 1)`: the glass path lengthens as `1 / cos theta`
    /// with the ray left undeviated. This overstates the tuning slope about
    /// sixfold at 45 degrees.
    SecantApprox,
    /// `L0 (sqrt(n^2 - sin^2 theta) - cos theta)`, the refracted-ray path
    /// difference of a tilted plate.
    SnellCorrected,
}

/// A tilted glass plate used as a fine phase tuner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlassPlateModel {
    pub formula: OpdFormula,
    thickness: f64,
    refractive_index: f64,
}

impl GlassPlateModel {
    pub fn new(formula: OpdFormula, thickness: f64, refractive_index: f64) -> Result<Self> {
        ensure_finite("thickness", thickness)?;
        ensure_finite("refractive index", refractive_index)?;
        if thickness <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "thickness",
                reason: format!("must be > 0, got {thickness}"),
            });
        }
        if refractive_index <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "refractive index",
                reason: format!("must be > 1, got {refractive_index}"),
            });
        }
        Ok(Self {
            formula,
            thickness,
            refractive_index,
        })
    }

    /// 1 mm of n = 1.5 glass with the corrected formula.
    pub fn default_plate() -> Self {
        Self::new(OpdFormula::SnellCorrected, 1e-3, 1.5).expect("valid constants")
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn refractive_index(&self) -> f64 {
        self.refractive_index
    }
}

/// Optical path difference in meters at tilt `theta` from normal incidence.
pub fn glass_plate_opd(model: &GlassPlateModel, theta: f64) -> Result<f64> {
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "tilt must lie in [0, pi/2), got {theta}"
        )));
    }
    let n = model.refractive_index;
    let l0 = model.thickness;
    Ok(match model.formula {
        OpdFormula::SecantApprox => l0 * (n / (1.0 - theta.sin().powi(2)).sqrt() - 1.0),
        OpdFormula::SnellCorrected => l0 * ((n * n - theta.sin().powi(2)).sqrt() - theta.cos()),
    })
}

/// Tail mass below which the Poisson series is cut.
const SERIES_TAIL: f64 = 1e-15;

/// Probability that both detectors fire in a window, given that at least one
/// photon arrived, for a Poissonian source of mean `mean_photons` split with
/// probabilities `(p_upper, p_lower)`.
pub fn expected_coincidence_fraction(mean_photons: f64, p_upper: f64, p_lower: f64) -> Result<f64> {
    ensure_finite("mean photons", mean_photons)?;
    if mean_photons <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "mean photons",
            reason: format!("must be > 0, got {mean_photons}"),
        });
    }
    if !(0.0..=1.0).contains(&p_upper)
        || !(0.0..=1.0).contains(&p_lower)
        || (p_upper + p_lower - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidArgument(format!(
            "routing probabilities must sum to 1, got {p_upper} + {p_lower}"
        )));
    }

    let p0 = (-mean_photons).exp();
    let mut pmf = p0 * mean_photons; // k = 1
    let mut cumulative = p0 + pmf;
    let mut sum = 0.0;
    let mut k = 1i32;
    loop {
        k += 1;
        pmf *= mean_photons / k as f64;
        cumulative += pmf;
        sum += pmf * (1.0 - p_upper.powi(k) - p_lower.powi(k));
        // Past the mode the pmf decreases geometrically; the second test
        // covers rounding in `cumulative`.
        let past_mode = k as f64 > mean_photons;
        if past_mode && (1.0 - cumulative <= SERIES_TAIL || pmf < SERIES_TAIL * 1e-3) {
            break;
        }
    }
    Ok(sum / -(-mean_photons).exp_m1())
}
