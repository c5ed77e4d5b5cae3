//! Frequency, amplitude and synchronization measures of sampled time series.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples after the transient cutoff.
pub const MIN_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Cycles per unit time (1/γ).
    pub frequency: f64,
    /// Half the peak-to-peak excursion of the detrended series.
    pub amplitude: f64,
    pub is_oscillatory: bool,
    /// Analyzed window (t_start, t_end).
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncMetrics {
    pub order_parameter: f64,
    pub locked_fraction: f64,
    pub ensemble_frequency: f64,
}

/// η = (f_cou − f_co)/(f_cou + f_co), undefined when both frequencies vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Eta {
    Defined(f64),
    Undefined,
}

impl Eta {
    pub fn value(self) -> Option<f64> {
        match self {
            Eta::Defined(v) => Some(v),
            Eta::Undefined => None,
        }
    }
}

impl std::fmt::Display for Eta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eta::Defined(v) => write!(f, "{v:e}"),
            Eta::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub f_cou: f64,
    pub f_co: f64,
    pub eta: Eta,
}

pub fn contrast_ratio(f_cou: f64, f_co: f64) -> ContrastResult {
    let sum = f_cou + f_co;
    let eta = if sum == 0.0 { Eta::Undefined } else { Eta::Defined((f_cou - f_co) / sum) };
    ContrastResult { f_cou, f_co, eta }
}

/// Index of the first sample at or after `t_min` on a grid starting at 0.
fn cutoff_index(len: usize, dt: f64, t_min: f64) -> usize {
    if t_min <= 0.0 {
        0
    } else {
        ((t_min / dt) * (1.0 - 1e-12)).ceil().min(len as f64) as usize
    }
}

/// Removes the least-squares line from `x` in place.
pub fn detrend(x: &mut [f64]) {
    let n = x.len();
    if n < 2 {
        if n == 1 {
            x[0] = 0.0;
        }
        return;
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (v - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    for (i, v) in x.iter_mut().enumerate() {
        *v -= x_mean + slope * (i as f64 - t_mean);
    }
}

fn hann(i: usize, n: usize) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
    0.5 * (1.0 - phase.cos())
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Dominant oscillation frequency of a uniformly sampled series (first sample
/// at t = 0). Samples before `t_min` are discarded, the linear trend is
/// removed, a Hann taper is applied, and the largest non-DC peak of the
/// magnitude spectrum is refined by a parabola through the log magnitudes of
/// the three bins around it.
pub fn dominant_frequency(series: &[f64], dt: f64, t_min: f64, eps_osc: f64) -> Result<SpectralResult> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParam { field: "dt", reason: format!("must be > 0, got {dt}") });
    }
    let start = cutoff_index(series.len(), dt, t_min);
    let n = series.len() - start;
    if n < MIN_SAMPLES {
        return Err(Error::SeriesTooShort { needed: MIN_SAMPLES, got: n });
    }
    if series[start..].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series"));
    }
    let window = (start as f64 * dt, (series.len() - 1) as f64 * dt);

    let mut x = series[start..].to_vec();
    detrend(&mut x);
    let amplitude = 0.5 * peak_to_peak(&x);
    // NaN-safe: anything not clearly above the threshold is quiet.
    if amplitude.partial_cmp(&eps_osc).is_none_or(|o| o.is_lt()) || amplitude == 0.0 {
        return Ok(SpectralResult { frequency: 0.0, amplitude, is_oscillatory: false, window });
    }

    let mut buf: Vec<Complex64> = x.iter().enumerate().map(|(i, &v)| Complex64::new(v * hann(i, n), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();

    let peak = (1..mags.len()).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap_or(1);
    let mut bin = peak as f64;
    if peak + 1 < mags.len() {
        let (a, b, c) = (mags[peak - 1].max(1e-300).ln(), mags[peak].max(1e-300).ln(), mags[peak + 1].max(1e-300).ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            bin += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(SpectralResult { frequency: bin / (n as f64 * dt), amplitude, is_oscillatory: true, window })
}

/// Phase of the analytic signal of a (detrended) real series.
pub fn analytic_phase(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // keep DC and Nyquist, double positive frequencies, drop negative ones
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        if k == 0 || (n.is_multiple_of(2) && k == half) {
            continue;
        } else if k <= (n - 1) / 2 {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.arg()).collect()
}

/// Synchronization of an ensemble from a time × class matrix of one observable.
///
/// Non-oscillatory classes contribute a zero phasor to the order parameter and
/// never count as locked.
pub fn sync_metrics(
    matrix: &[Vec<f64>],
    weights: &[f64],
    dt: f64,
    t_min: f64,
    eps_osc: f64,
    freq_tol: f64,
) -> Result<SyncMetrics> {
    let n_classes = weights.len();
    if matrix.iter().any(|row| row.len() != n_classes) {
        return Err(Error::InvalidParam { field: "matrix", reason: "rows must have one entry per weight".into() });
    }
    let column = |j: usize| matrix.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let average: Vec<f64> = matrix.iter().map(|row| row.iter().zip(weights).map(|(v, w)| v * w).sum()).collect();
    let ensemble = dominant_frequency(&average, dt, t_min, eps_osc)?;

    let per_class: Vec<(SpectralResult, Vec<f64>)> = (0..n_classes)
        .into_par_iter()
        .map(|j| {
            let series = column(j);
            let spectral = dominant_frequency(&series, dt, t_min, eps_osc)?;
            let phase = if spectral.is_oscillatory {
                let mut x = series[cutoff_index(series.len(), dt, t_min)..].to_vec();
                detrend(&mut x);
                analytic_phase(&x)
            } else {
                Vec::new()
            };
            Ok((spectral, phase))
        })
        .collect::<Result<_>>()?;

    let f_ens = ensemble.frequency;
    let locked_fraction = if f_ens > 0.0 {
        per_class
            .iter()
            .zip(weights)
            .filter(|((s, _), _)| s.is_oscillatory && ((s.frequency - f_ens) / f_ens).abs() < freq_tol)
            .map(|(_, w)| w)
            .sum::<f64>()
    } else {
        0.0
    };

    let n_time = matrix.len() - cutoff_index(matrix.len(), dt, t_min);
    let mut order = 0.0;
    for t in 0..n_time {
        let mut phasor = Complex64::new(0.0, 0.0);
        for ((s, phase), w) in per_class.iter().zip(weights) {
            if s.is_oscillatory {
                phasor += Complex64::from_polar(*w, phase[t]);
            }
        }
        order += phasor.norm();
    }
    let order_parameter = (order / n_time as f64).clamp(0.0, 1.0);

    Ok(SyncMetrics { order_parameter, locked_fraction: locked_fraction.clamp(0.0, 1.0), ensemble_frequency: f_ens })
}
