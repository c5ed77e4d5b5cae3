//! Doppler-broadened ensembles of velocity classes sharing one mean-field shift.
//!
//! Each class is a full 9-real Bloch block with its own Doppler-shifted
//! detunings. The classes are stacked into a single state vector and evolved
//! together: at every right-hand-side evaluation the shared shift is reduced
//! from the instantaneous ρrr of all classes first, then every class derivative
//! is evaluated against that one value.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::integrator::integrate_with;
use crate::model::{bloch_rhs_packed, clamped_power, BlochState, IntegratorConfig, ModelParams, STATE_DIM};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Mass of a Rb-87 atom, kg.
pub const RB87_MASS: f64 = 1.4431e-25;

/// Relative direction of the probe and coupling beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "co")]
    CoPropagating,
    #[serde(rename = "counter")]
    CounterPropagating,
}

impl Geometry {
    pub fn label(self) -> &'static str {
        match self {
            Geometry::CoPropagating => "co",
            Geometry::CounterPropagating => "counter",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co" | "co-propagating" => Ok(Geometry::CoPropagating),
            "counter" | "counter-propagating" => Ok(Geometry::CounterPropagating),
            other => Err(Error::Config(format!("unknown geometry `{other}` (expected co or counter)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Uniform velocity grid with Maxwell–Boltzmann weights.
    UniformGridWeighted,
    /// Velocities drawn from the truncated distribution, equal weights.
    RandomMaxwell,
}

/// How the per-class ρrr values are folded into the shared shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// s = V̄ Σ w ρrr^b
    AverageOfPower,
    /// s = V̄ (Σ w ρrr)^b
    PowerOfAverage,
}

impl CouplingMode {
    pub fn label(self) -> &'static str {
        match self {
            CouplingMode::AverageOfPower => "average_of_power",
            CouplingMode::PowerOfAverage => "power_of_average",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    #[serde(rename = "temperature_in_kelvin")]
    pub temperature: f64,
    #[serde(rename = "mass_in_kg")]
    pub mass: f64,
    #[serde(rename = "k_p_in_rad_per_m")]
    pub k_p: f64,
    #[serde(rename = "k_c_in_rad_per_m")]
    pub k_c: f64,
    /// γ in rad/s, used to express k·v in units of γ.
    #[serde(rename = "gamma_unit_in_rad_per_s")]
    pub gamma_unit: f64,
    pub geometry: Geometry,
    pub n_classes: usize,
    #[serde(rename = "v_min_in_m_per_s")]
    pub v_min: f64,
    #[serde(rename = "v_max_in_m_per_s")]
    pub v_max: f64,
    pub sampling: Sampling,
    pub rng_seed: u64,
}

impl Default for ThermalConfig {
    /// Rb ladder (780 nm probe, 480 nm coupling, γ = 2π·6.07 MHz) at 321 K,
    /// 150 classes on a uniform grid over ±400 m/s.
    fn default() -> Self {
        Self {
            temperature: 321.0,
            mass: RB87_MASS,
            k_p: 2.0 * std::f64::consts::PI / 780e-9,
            k_c: 2.0 * std::f64::consts::PI / 480e-9,
            gamma_unit: 2.0 * std::f64::consts::PI * 6.07e6,
            geometry: Geometry::CounterPropagating,
            n_classes: 150,
            v_min: -400.0,
            v_max: 400.0,
            sampling: Sampling::UniformGridWeighted,
            rng_seed: 0,
        }
    }
}

impl ThermalConfig {
    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, reason: format!("must be finite and > 0, got {value}") })
            }
        };
        positive("temperature", self.temperature)?;
        positive("mass", self.mass)?;
        // Zero wave numbers switch the Doppler shift off.
        for (field, k) in [("k_p", self.k_p), ("k_c", self.k_c)] {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidParam { field, reason: format!("must be finite and >= 0, got {k}") });
            }
        }
        positive("gamma_unit", self.gamma_unit)?;
        if self.n_classes == 0 {
            return Err(Error::InvalidParam { field: "n_classes", reason: "must be >= 1".into() });
        }
        if !(self.v_min.is_finite() && self.v_max.is_finite() && self.v_min < self.v_max) {
            return Err(Error::InvalidParam {
                field: "v_min",
                reason: format!("need finite v_min < v_max, got [{}, {}]", self.v_min, self.v_max),
            });
        }
        Ok(())
    }

    /// Most probable speed sqrt(2 k_B T / M), m/s.
    pub fn most_probable_speed(&self) -> f64 {
        (2.0 * BOLTZMANN * self.temperature / self.mass).sqrt()
    }

    /// Unnormalized Maxwell–Boltzmann density exp(−(v/v_T)²).
    pub fn density(&self, v: f64) -> f64 {
        let x = v / self.most_probable_speed();
        (-x * x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityClass {
    pub v: f64,
    pub weight: f64,
    pub effective_delta_p: f64,
    pub effective_delta_c: f64,
}

/// Probe and coupling detunings seen by an atom moving at `v` along the probe axis.
pub fn doppler_detunings(v: f64, delta_p: f64, delta_c: f64, cfg: &ThermalConfig) -> (f64, f64) {
    let probe_shift = cfg.k_p * v / cfg.gamma_unit;
    let coupling_shift = cfg.k_c * v / cfg.gamma_unit;
    match cfg.geometry {
        Geometry::CoPropagating => (delta_p + probe_shift, delta_c + coupling_shift),
        Geometry::CounterPropagating => (delta_p + probe_shift, delta_c - coupling_shift),
    }
}

/// Velocity grid and weights. Effective detunings are the pure Doppler
/// shifts (zero base detunings); see [`ensemble_classes`] for a given drive.
pub fn sample_velocities(cfg: &ThermalConfig) -> Vec<VelocityClass> {
    let n = cfg.n_classes.max(1);
    let (velocities, weights): (Vec<f64>, Vec<f64>) = match cfg.sampling {
        Sampling::UniformGridWeighted => {
            let velocities: Vec<f64> = if n == 1 {
                vec![0.5 * (cfg.v_min + cfg.v_max)]
            } else {
                let step = (cfg.v_max - cfg.v_min) / (n - 1) as f64;
                (0..n).map(|j| cfg.v_min + j as f64 * step).collect()
            };
            let raw: Vec<f64> = velocities.iter().map(|&v| cfg.density(v)).collect();
            let total: f64 = raw.iter().sum();
            let weights = raw.iter().map(|w| w / total).collect();
            (velocities, weights)
        }
        Sampling::RandomMaxwell => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            // exp(−(v/v_T)²) is a normal density with σ = v_T/√2
            let normal = Normal::new(0.0, cfg.most_probable_speed() / std::f64::consts::SQRT_2)
                .expect("positive standard deviation");
            let mut velocities = Vec::with_capacity(n);
            while velocities.len() < n {
                let v = normal.sample(&mut rng);
                if v >= cfg.v_min && v <= cfg.v_max {
                    velocities.push(v);
                }
            }
            velocities.sort_by(f64::total_cmp);
            (velocities, vec![1.0 / n as f64; n])
        }
    };
    velocities
        .into_iter()
        .zip(weights)
        .map(|(v, weight)| {
            let (dp, dc) = doppler_detunings(v, 0.0, 0.0, cfg);
            VelocityClass { v, weight, effective_delta_p: dp, effective_delta_c: dc }
        })
        .collect()
}

/// Velocity classes with detunings shifted from the base drive in `params`.
pub fn ensemble_classes(params: &ModelParams, cfg: &ThermalConfig) -> Vec<VelocityClass> {
    sample_velocities(cfg)
        .into_iter()
        .map(|c| {
            let (dp, dc) = doppler_detunings(c.v, params.delta_p, params.delta_c, cfg);
            VelocityClass { effective_delta_p: dp, effective_delta_c: dc, ..c }
        })
        .collect()
}

/// Mean-field shift shared by all classes at one instant.
pub fn shared_shift<I>(rho_rr: I, weights: &[f64], params: &ModelParams, mode: CouplingMode) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let b = params.b_exponent;
    match mode {
        CouplingMode::AverageOfPower => {
            params.v_rr_bar * rho_rr.into_iter().zip(weights).map(|(r, w)| w * clamped_power(r, b)).sum::<f64>()
        }
        CouplingMode::PowerOfAverage => {
            let avg: f64 = rho_rr.into_iter().zip(weights).map(|(r, w)| w * r.clamp(0.0, 1.0)).sum();
            params.v_rr_bar * clamped_power(avg, b)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionConfig {
    /// Dimensionless peak optical depth.
    pub od_scale: f64,
    pub coupling_mode: CouplingMode,
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        Self { od_scale: 10.0, coupling_mode: CouplingMode::AverageOfPower }
    }
}

impl TransmissionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.od_scale.is_finite() && self.od_scale >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam { field: "od_scale", reason: format!("must be finite and >= 0, got {}", self.od_scale) })
        }
    }
}

/// Probe transmission T = exp[−α_od · Im ρ̃ge / Ωp], with Ωp in units of γe.
///
/// A zero probe carries no absorption signal and returns 1.
pub fn transmission(im_rho_ge_avg: f64, omega_p: f64, cfg: &TransmissionConfig) -> f64 {
    if omega_p <= 0.0 || cfg.od_scale == 0.0 {
        return 1.0;
    }
    (-cfg.od_scale * im_rho_ge_avg / omega_p).exp()
}

/// Time-gridded ensemble solution.
#[derive(Debug, Clone)]
pub struct EnsembleTrajectory {
    pub times: Vec<f64>,
    pub classes: Vec<VelocityClass>,
    pub geometry: Geometry,
    pub coupling_mode: CouplingMode,
    /// Sample-major: `states[(i * n_classes + j) * 9 + k]`.
    pub states: Vec<f64>,
    pub rho_ge_avg: Vec<Complex64>,
    pub rho_rr_avg: Vec<f64>,
    pub transmission: Vec<f64>,
    pub shift: Vec<f64>,
}

impl EnsembleTrajectory {
    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.weight).collect()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn class_packed(&self, sample: usize, class: usize) -> &[f64] {
        let start = (sample * self.n_classes() + class) * STATE_DIM;
        &self.states[start..start + STATE_DIM]
    }

    pub fn class_state(&self, sample: usize, class: usize) -> BlochState {
        BlochState::from_packed(self.class_packed(sample, class))
    }

    /// Time series of packed component `component` for one class.
    pub fn class_series(&self, class: usize, component: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.class_packed(i, class)[component]).collect()
    }

    /// Im ρeg (= −Im ρge) as a time × class matrix, row-major.
    pub fn im_rho_eg_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_samples())
            .map(|i| (0..self.n_classes()).map(|j| -self.class_packed(i, j)[4]).collect())
            .collect()
    }

    /// Per-class series of one component as a time × class matrix.
    pub fn component_matrix(&self, component: usize) -> Vec<Vec<f64>> {
        (0..self.n_samples())
            .map(|i| (0..self.n_classes()).map(|j| self.class_packed(i, j)[component]).collect())
            .collect()
    }

    pub fn im_rho_ge_avg(&self) -> Vec<f64> {
        self.rho_ge_avg.iter().map(|c| c.im).collect()
    }
}

/// Coupled right-hand side of the stacked ensemble.
pub struct EnsembleRhs {
    class_params: Vec<ModelParams>,
    weights: Vec<f64>,
    base: ModelParams,
    mode: CouplingMode,
    parallel: bool,
}

impl EnsembleRhs {
    pub fn new(params: &ModelParams, classes: &[VelocityClass], mode: CouplingMode) -> Self {
        Self {
            class_params: classes
                .iter()
                .map(|c| params.with_detunings(c.effective_delta_p, c.effective_delta_c))
                .collect(),
            weights: classes.iter().map(|c| c.weight).collect(),
            base: *params,
            mode,
            parallel: false,
        }
    }

    /// Evaluate class derivatives on the rayon pool after the shift reduction.
    pub fn parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn shift(&self, x: &[f64]) -> f64 {
        shared_shift(x.chunks_exact(STATE_DIM).map(|c| c[2]), &self.weights, &self.base, self.mode)
    }

    pub fn eval(&self, x: &[f64], dx: &mut [f64]) {
        let shift = self.shift(x);
        if self.parallel {
            dx.par_chunks_exact_mut(STATE_DIM)
                .zip(x.par_chunks_exact(STATE_DIM))
                .zip(self.class_params.par_iter())
                .for_each(|((d, xc), p)| bloch_rhs_packed(xc, p, shift, d));
        } else {
            for ((d, xc), p) in dx.chunks_exact_mut(STATE_DIM).zip(x.chunks_exact(STATE_DIM)).zip(&self.class_params) {
                bloch_rhs_packed(xc, p, shift, d);
            }
        }
    }
}

/// Evolves every velocity class from the ground state under the shared shift.
pub fn integrate_ensemble(
    params: &ModelParams,
    thermal: &ThermalConfig,
    trans: &TransmissionConfig,
    integ: &IntegratorConfig,
) -> Result<EnsembleTrajectory> {
    integrate_ensemble_with(params, thermal, trans, integ, false)
}

/// [`integrate_ensemble`] with optional data-parallel class evaluation.
pub fn integrate_ensemble_with(
    params: &ModelParams,
    thermal: &ThermalConfig,
    trans: &TransmissionConfig,
    integ: &IntegratorConfig,
    parallel_classes: bool,
) -> Result<EnsembleTrajectory> {
    params.validate()?;
    thermal.validate()?;
    trans.validate()?;
    integ.validate()?;

    let classes = ensemble_classes(params, thermal);
    let n = classes.len();
    let rhs = EnsembleRhs::new(params, &classes, trans.coupling_mode).parallel(parallel_classes);
    let weights = rhs.weights.clone();

    let mut x0 = Vec::with_capacity(n * STATE_DIM);
    for _ in 0..n {
        x0.extend_from_slice(&BlochState::ground().to_packed());
    }

    let n_samples = integ.n_samples();
    let mut out = EnsembleTrajectory {
        times: Vec::with_capacity(n_samples),
        classes,
        geometry: thermal.geometry,
        coupling_mode: trans.coupling_mode,
        states: Vec::with_capacity(n_samples * n * STATE_DIM),
        rho_ge_avg: Vec::with_capacity(n_samples),
        rho_rr_avg: Vec::with_capacity(n_samples),
        transmission: Vec::with_capacity(n_samples),
        shift: Vec::with_capacity(n_samples),
    };
    let omega_p_rel = params.omega_p / params.gamma_e;

    integrate_with(
        |_, x, dx| rhs.eval(x, dx),
        &x0,
        integ,
        |t, x| {
            let mut ge = Complex64::new(0.0, 0.0);
            let mut rr = 0.0;
            for (block, w) in x.chunks_exact(STATE_DIM).zip(&weights) {
                ge += Complex64::new(block[3], block[4]) * *w;
                rr += w * block[2];
            }
            out.times.push(t);
            out.states.extend_from_slice(x);
            out.rho_ge_avg.push(ge);
            out.rho_rr_avg.push(rr);
            out.transmission.push(transmission(ge.im, omega_p_rel, trans));
            out.shift.push(rhs.shift(x));
        },
    )?;
    Ok(out)
}
