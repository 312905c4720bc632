use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default extremum threshold, as a fraction of the trace's full range.
pub const DEFAULT_PROMINENCE: f64 = 0.2;

/// The strongest spectral line must exceed every other local maximum of the
/// spectrum by this factor.
pub const MIN_PEAK_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub bin_index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
}

impl Extrema {
    /// Maxima and minima merged in bin order; kinds alternate.
    pub fn merged(&self) -> Vec<(Extremum, bool)> {
        let mut all: Vec<(Extremum, bool)> = self
            .maxima
            .iter()
            .map(|e| (*e, true))
            .chain(self.minima.iter().map(|e| (*e, false)))
            .collect();
        all.sort_by_key(|(e, _)| e.bin_index);
        all
    }

    /// Number of fringe periods spanned by the trace.
    ///
    /// `k` interior extrema cut the trace into `k + 1` monotone half-periods,
    /// so a trace covering 10.5 cycles has 20 interior extrema and counts as
    /// `21 / 2`.
    pub fn fringe_count(&self) -> f64 {
        (self.maxima.len() + self.minima.len() + 1) as f64 / 2.0
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "trace value at bin {i} is not finite"
        )));
    }
    Ok(())
}

/// Alternating maxima and minima of a trace.
///
/// Hysteresis peak detection: a running maximum is confirmed once the trace
/// has fallen `prominence * (max - min)` below it, after which the search
/// switches to minima, and vice versa. Each confirmed extremum therefore
/// stands out from its neighbourhood by at least the threshold, the kinds
/// alternate by construction, and small noise wiggles never split a fringe.
/// An extremum must stand out by the threshold on both sides, so one sitting
/// on (or, with noise, next to) either end of the trace is dropped: the trace
/// may continue past it.
pub fn find_extrema(values: &[f64], prominence: f64) -> Result<Extrema> {
    if values.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "extrema need at least 3 bins, got {}",
            values.len()
        )));
    }
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "prominence must lie in (0, 1), got {prominence}"
        )));
    }
    check_values(values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::InsufficientFringes("trace is constant".into()));
    }
    let delta = prominence * (hi - lo);
    let last = values.len() - 1;

    #[derive(PartialEq)]
    enum Seek {
        Either,
        Max,
        Min,
    }
    let mut seek = Seek::Either;
    let mut out = Extrema {
        maxima: Vec::new(),
        minima: Vec::new(),
    };
    let (mut mx, mut mx_i) = (values[0], 0);
    let (mut mn, mut mn_i) = (values[0], 0);
    // Later extrema are preceded by a confirmed opposite extremum, which
    // already proves the rise or fall on their left; the first one needs an
    // explicit look back.
    let mut first = true;
    let mut keep = |i: usize, rises_from_left: bool| {
        let ok = i != 0
            && i != last
            && (!first || {
                let before = &values[..i];
                if rises_from_left {
                    before.iter().any(|&b| b <= values[i] - delta)
                } else {
                    before.iter().any(|&b| b >= values[i] + delta)
                }
            });
        first = false;
        ok
    };

    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > mx {
            mx = v;
            mx_i = i;
        }
        if v < mn {
            mn = v;
            mn_i = i;
        }
        if seek != Seek::Min && v <= mx - delta {
            if keep(mx_i, true) {
                out.maxima.push(Extremum {
                    bin_index: mx_i,
                    value: mx,
                });
            }
            seek = Seek::Min;
            mn = v;
            mn_i = i;
        } else if seek != Seek::Max && v >= mn + delta {
            if keep(mn_i, false) {
                out.minima.push(Extremum {
                    bin_index: mn_i,
                    value: mn,
                });
            }
            seek = Seek::Max;
            mx = v;
            mx_i = i;
        }
    }

    if out.maxima.is_empty() || out.minima.is_empty() {
        return Err(Error::InsufficientFringes(format!(
            "found {} maxima and {} minima at prominence {prominence}",
            out.maxima.len(),
            out.minima.len()
        )));
    }
    Ok(out)
}

/// Mean and sample standard deviation of `(max - min) / (max + min)` over
/// every adjacent maximum/minimum pair, at the default prominence.
pub fn visibility(values: &[f64]) -> Result<(f64, f64)> {
    visibility_with(values, DEFAULT_PROMINENCE)
}

pub fn visibility_with(values: &[f64], prominence: f64) -> Result<(f64, f64)> {
    let extrema = find_extrema(values, prominence)?;
    pair_visibility(&extrema)
}

fn pair_visibility(extrema: &Extrema) -> Result<(f64, f64)> {
    let merged = extrema.merged();
    let mut vis = Vec::with_capacity(merged.len());
    for w in merged.windows(2) {
        let (a, a_is_max) = w[0];
        let (b, _) = w[1];
        let (max, min) = if a_is_max {
            (a.value, b.value)
        } else {
            (b.value, a.value)
        };
        if min < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "visibility needs a non-negative trace, minimum {min} at bin {}",
                if a_is_max { b.bin_index } else { a.bin_index }
            )));
        }
        vis.push((max - min) / (max + min));
    }
    let n = vis.len() as f64;
    let mean = vis.iter().sum::<f64>() / n;
    let std = if vis.len() > 1 {
        (vis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

/// The strongest line of a trace's spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Frequency bin, in cycles per `span`.
    pub bin: usize,
    /// `span / bin`, radians of psi.
    pub period: f64,
    /// Sample count times grid step.
    pub span: f64,
    pub magnitude: f64,
    /// Largest other local maximum of the magnitude spectrum.
    pub next: f64,
}

impl SpectralPeak {
    /// Width of one Fourier bin expressed as a period change around the peak.
    pub fn period_resolution(&self) -> f64 {
        self.span / self.bin as f64 - self.span / (self.bin + 1) as f64
    }
}

fn grid_step(psi: &[f64]) -> Result<f64> {
    let step = psi[1] - psi[0];
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(
            "psi grid must be strictly increasing".into(),
        ));
    }
    for (i, w) in psi.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::InvalidArgument(format!(
                "psi grid is not uniform at bin {}",
                i + 1
            )));
        }
    }
    Ok(step)
}

/// Magnitude spectrum of the mean-removed trace for bins `0..=n/2`.
fn magnitude_spectrum(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = values
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

/// Locates the dominant nonzero frequency of `values` sampled on `psi`.
pub fn spectral_peak(values: &[f64], psi: &[f64]) -> Result<SpectralPeak> {
    let n = values.len();
    if n < 4 || psi.len() != n {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs at least 4 samples and one psi per sample, got {n} values and {} psi",
            psi.len()
        )));
    }
    check_values(values)?;
    let step = grid_step(psi)?;
    let mag = magnitude_spectrum(values);
    let top = mag.len() - 1;

    let mut k_star = 1;
    for k in 2..=top {
        if mag[k] > mag[k_star] {
            k_star = k;
        }
    }
    let peak = mag[k_star];
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak <= 1e-12 * scale * n as f64 || peak == 0.0 {
        return Err(Error::InsufficientFringes(
            "trace has no oscillating component".into(),
        ));
    }
    if k_star < 3 {
        return Err(Error::InsufficientFringes(format!(
            "dominant frequency is {k_star} cycles over the trace; at least 3 are needed"
        )));
    }
    let next = (1..=top)
        .filter(|&k| k != k_star)
        .filter(|&k| (k == 1 || mag[k] >= mag[k - 1]) && (k == top || mag[k] >= mag[k + 1]))
        .map(|k| mag[k])
        .fold(0.0, f64::max);
    if peak < MIN_PEAK_RATIO * next {
        return Err(Error::AmbiguousPeriod { peak, next });
    }
    let span = n as f64 * step;
    Ok(SpectralPeak {
        bin: k_star,
        period: span / k_star as f64,
        span,
        magnitude: peak,
        next,
    })
}

/// Fringe period of `values`, in radians of psi.
pub fn dominant_period(values: &[f64], psi: &[f64]) -> Result<f64> {
    spectral_peak(values, psi).map(|p| p.period)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeStats {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
    pub visibility_mean: f64,
    pub visibility_std: f64,
    /// Radians of psi.
    pub dominant_period: f64,
}

/// Extrema, visibility and period of one trace column.
pub fn analyze_series(values: &[f64], psi: &[f64], prominence: f64) -> Result<FringeStats> {
    let extrema = find_extrema(values, prominence)?;
    let (visibility_mean, visibility_std) = pair_visibility(&extrema)?;
    let dominant_period = dominant_period(values, psi)?;
    Ok(FringeStats {
        maxima: extrema.maxima,
        minima: extrema.minima,
        visibility_mean,
        visibility_std,
        dominant_period,
    })
}
