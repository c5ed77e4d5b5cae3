//! Adaptive Dormand–Prince 5(4) integrator with continuous output.
//!
//! Works on any state dimension. Samples are produced on the uniform grid
//! `k * output_dt` by evaluating the fourth-order dense interpolant of the
//! step that covers each grid time, so the step size never has to land on
//! the sample grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(rename = "max_step_in_inverse_gamma")]
    pub max_step: f64,
    #[serde(rename = "output_dt_in_inverse_gamma")]
    pub output_dt: f64,
    #[serde(rename = "t_end_in_inverse_gamma")]
    pub t_end: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-8, max_step: 0.1, output_dt: 0.5, t_end: 100.0 }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_output_dt(mut self, output_dt: f64) -> Self {
        self.output_dt = output_dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |field: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, reason: format!("must be finite and > 0, got {value}") })
            }
        };
        check("rel_tol", self.rel_tol)?;
        check("abs_tol", self.abs_tol)?;
        check("max_step", self.max_step)?;
        check("output_dt", self.output_dt)?;
        check("t_end", self.t_end)?;
        Ok(())
    }

    /// Number of samples on the output grid, including t = 0.
    pub fn n_samples(&self) -> usize {
        (self.t_end / self.output_dt * (1.0 + 1e-12)).floor() as usize + 1
    }
}

/// Uniformly sampled solution. States are stored row-major, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub dim: usize,
    pub states: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    /// Time series of one state component.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.states.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrates `dx/dt = rhs(t, x)` from t = 0 to `cfg.t_end`, returning samples
/// at every multiple of `cfg.output_dt`.
pub fn integrate<F>(rhs: F, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n_samples = cfg.n_samples();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_samples),
        dim: x0.len(),
        states: Vec::with_capacity(n_samples * x0.len()),
    };
    integrate_with(rhs, x0, cfg, |t, x| {
        traj.times.push(t);
        traj.states.extend_from_slice(x);
    })?;
    Ok(traj)
}

/// Like [`integrate`] but hands each output sample to `observer` instead of
/// storing it. Returns the final state.
pub fn integrate_with<F, O>(mut rhs: F, x0: &[f64], cfg: &IntegratorConfig, mut observer: O) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t: 0.0 });
    }
    let n = x0.len();
    let n_samples = cfg.n_samples();
    let sample_time = |k: usize| k as f64 * cfg.output_dt;

    let mut x = x0.to_vec();
    observer(0.0, &x);
    let mut next_sample = 1;
    if n == 0 || next_sample >= n_samples {
        while next_sample < n_samples {
            observer(sample_time(next_sample), &x);
            next_sample += 1;
        }
        return Ok(x);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut dense = vec![0.0; n];
    let mut sample = vec![0.0; n];

    let mut t = 0.0;
    rhs(t, &x, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    let mut h = initial_step(&mut rhs, &x, &k1, cfg, &mut tmp, &mut k2);
    let t_end = cfg.t_end;
    let mut last_rejected = false;
    let mut last_non_finite = false;

    while t < t_end {
        h = h.min(cfg.max_step).min(t_end - t);
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(if last_non_finite { Error::NonFiniteState { t } } else { Error::StepUnderflow { t, h } });
        }

        for i in 0..n {
            tmp[i] = x[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &tmp, &mut k6);
        for i in 0..n {
            x_new[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &x_new, &mut k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x_new[i].abs());
            err = err.max(e.abs() / scale);
        }
        if !err.is_finite() || k7.iter().any(|v| !v.is_finite()) {
            last_non_finite = true;
            last_rejected = true;
            h *= FAC_MIN;
            continue;
        }
        last_non_finite = false;

        if err <= 1.0 {
            let t_new = t + h;
            // Emit every grid sample covered by (t, t_new].
            let mut dense_ready = false;
            while next_sample < n_samples && sample_time(next_sample) <= t_new * (1.0 + 1e-14) {
                let ts = sample_time(next_sample);
                if (ts - t_new).abs() <= 1e-12 * t_new.abs().max(1.0) {
                    observer(ts, &x_new);
                } else {
                    if !dense_ready {
                        for i in 0..n {
                            dense[i] = h
                                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                        }
                        dense_ready = true;
                    }
                    let theta = (ts - t) / h;
                    let theta1 = 1.0 - theta;
                    for i in 0..n {
                        let r2 = x_new[i] - x[i];
                        let r3 = h * k1[i] - r2;
                        let r4 = r2 - h * k7[i] - r3;
                        sample[i] = x[i] + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * dense[i])));
                    }
                    observer(ts, &sample);
                }
                next_sample += 1;
            }

            t = t_new;
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut k1, &mut k7);

            let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            h *= fac;
            last_rejected = true;
        }
    }

    // Guard against rounding leaving the final grid point unemitted.
    while next_sample < n_samples {
        observer(sample_time(next_sample), &x);
        next_sample += 1;
    }
    Ok(x)
}

fn initial_step<F>(rhs: &mut F, x: &[f64], f0: &[f64], cfg: &IntegratorConfig, x1: &mut [f64], f1: &mut [f64]) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len() as f64;
    let scale = |v: f64| cfg.abs_tol + cfg.rel_tol * v.abs();
    let d0 = (x.iter().map(|&v| (v / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (x.iter().zip(f0).map(|(&v, &f)| (f / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    for i in 0..x.len() {
        x1[i] = x[i] + h0 * f0[i];
    }
    rhs(h0, x1, f1);
    let d2 = (x.iter().zip(f0).zip(f1.iter()).map(|((&v, &a), &b)| ((b - a) / scale(v)).powi(2)).sum::<f64>() / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.max_step)
}
