//! Adiabatic Δc sweeps in both directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::integrator::integrate_with;
use crate::model::{self_consistent_rhs_packed, BlochState, IntegratorConfig, ModelParams};

/// Fraction of each hold window used for the time-averaged readout.
const READOUT_FRACTION: f64 = 0.25;
/// Peak-to-peak floor for the monostable baseline.
const PTP_FLOOR: f64 = 1e-6;
/// A step is flagged oscillatory when its readout peak-to-peak exceeds this
/// multiple of the baseline.
const OSCILLATION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisConfig {
    #[serde(rename = "delta_c_from_in_gamma")]
    pub delta_c_from: f64,
    #[serde(rename = "delta_c_to_in_gamma")]
    pub delta_c_to: f64,
    pub n_steps: usize,
    #[serde(rename = "hold_time_in_inverse_gamma")]
    pub hold_time: f64,
}

impl Default for HysteresisConfig {
    fn default() -> Self {
        Self { delta_c_from: 20.0, delta_c_to: -20.0, n_steps: 200, hold_time: 2000.0 }
    }
}

impl HysteresisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::InvalidParam { field: "n_steps", reason: format!("must be >= 2, got {}", self.n_steps) });
        }
        if !(self.hold_time.is_finite() && self.hold_time > 0.0) {
            return Err(Error::InvalidParam { field: "hold_time", reason: format!("must be > 0, got {}", self.hold_time) });
        }
        if !(self.delta_c_from.is_finite() && self.delta_c_to.is_finite()) {
            return Err(Error::InvalidParam { field: "delta_c_from", reason: "sweep bounds must be finite".into() });
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_steps;
        let step = (self.delta_c_to - self.delta_c_from) / (n - 1) as f64;
        (0..n).map(|i| self.delta_c_from + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisResult {
    /// Sweep grid in forward order (`delta_c_from` → `delta_c_to`).
    pub delta_c_grid: Vec<f64>,
    /// Time-averaged ρrr per grid point, forward pass.
    pub forward_rho_rr: Vec<f64>,
    /// Time-averaged ρrr per grid point, backward pass (aligned with the grid).
    pub backward_rho_rr: Vec<f64>,
    pub forward_peak_to_peak: Vec<f64>,
    pub backward_peak_to_peak: Vec<f64>,
    pub forward_oscillatory: Vec<bool>,
    pub backward_oscillatory: Vec<bool>,
    pub hold_time: f64,
    pub loop_area: f64,
}

struct Branch {
    mean: Vec<f64>,
    ptp: Vec<f64>,
}

fn run_branch(
    params: &ModelParams,
    grid: impl Iterator<Item = f64>,
    hold_time: f64,
    integ: &IntegratorConfig,
    label: &'static str,
) -> Result<Branch> {
    let cfg = IntegratorConfig { t_end: hold_time, ..*integ };
    let readout_start = hold_time * (1.0 - READOUT_FRACTION);
    let mut x = BlochState::ground().to_packed().to_vec();
    let mut branch = Branch { mean: Vec::new(), ptp: Vec::new() };
    for (step, dc) in grid.enumerate() {
        let p = params.with_delta_c(dc);
        let (mut sum, mut count, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
        x = integrate_with(
            |_, y, dy| self_consistent_rhs_packed(y, &p, dy),
            &x,
            &cfg,
            |t, y| {
                if t >= readout_start {
                    sum += y[2];
                    count += 1;
                    lo = lo.min(y[2]);
                    hi = hi.max(y[2]);
                }
            },
        )
        .map_err(|e| Error::Sweep { branch: label, step, source: Box::new(e) })?;
        branch.mean.push(sum / count.max(1) as f64);
        branch.ptp.push(hi - lo);
    }
    Ok(branch)
}

/// Sweeps Δc forward and backward, holding each value for `hold_time` and
/// carrying the final state to the next step. Both passes start from the
/// ground state and run concurrently.
pub fn hysteresis_sweep(params: &ModelParams, cfg: &HysteresisConfig, integ: &IntegratorConfig) -> Result<HysteresisResult> {
    params.validate()?;
    cfg.validate()?;
    integ.validate()?;
    let grid = cfg.grid();

    let (forward, backward) = rayon::join(
        || run_branch(params, grid.iter().copied(), cfg.hold_time, integ, "forward"),
        || run_branch(params, grid.iter().rev().copied(), cfg.hold_time, integ, "backward"),
    );
    let forward = forward?;
    let mut backward = backward?;
    backward.mean.reverse();
    backward.ptp.reverse();

    let baseline = forward.ptp.iter().chain(&backward.ptp).copied().fold(f64::INFINITY, f64::min).max(PTP_FLOOR);
    let flag = |ptp: &[f64]| ptp.iter().map(|&v| v > OSCILLATION_FACTOR * baseline).collect::<Vec<_>>();

    let loop_area = loop_area(&grid, &forward.mean, &backward.mean);
    Ok(HysteresisResult {
        forward_oscillatory: flag(&forward.ptp),
        backward_oscillatory: flag(&backward.ptp),
        delta_c_grid: grid,
        forward_rho_rr: forward.mean,
        backward_rho_rr: backward.mean,
        forward_peak_to_peak: forward.ptp,
        backward_peak_to_peak: backward.ptp,
        hold_time: cfg.hold_time,
        loop_area,
    })
}

/// |∫ (forward − backward) dΔc| by the trapezoid rule.
pub fn loop_area(grid: &[f64], forward: &[f64], backward: &[f64]) -> f64 {
    let diff: Vec<f64> = forward.iter().zip(backward).map(|(f, b)| f - b).collect();
    let integral: f64 = grid
        .windows(2)
        .zip(diff.windows(2))
        .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
        .sum();
    integral.abs()
}
