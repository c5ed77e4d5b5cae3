//! Scenario files: a nested TOML record whose keys carry their units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_points::{HysteresisConfig, DEFAULT_GRID_N};
use crate::model::{IntegratorConfig, ModelParams};
use crate::thermal::{CouplingMode, ThermalConfig, TransmissionConfig};

/// Thresholds for the post-processing of time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Oscillation threshold, in the native units of the analyzed series.
    pub eps_osc: f64,
    /// Transient cutoff; `None` means one third of the horizon.
    #[serde(rename = "t_min_in_inverse_gamma", default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    /// Relative frequency tolerance for counting a class as locked.
    pub freq_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { eps_osc: 1e-3, t_min: None, freq_tol: 0.05 }
    }
}

impl AnalysisConfig {
    pub fn t_min_for(&self, t_end: f64) -> f64 {
        self.t_min.unwrap_or(t_end / 3.0)
    }
}

/// Numeric parameters a scan axis may sweep.
pub const SCAN_PARAMETERS: &[&str] = &[
    "delta_c",
    "delta_p",
    "omega_p",
    "omega_c",
    "gamma_e",
    "gamma_r",
    "v_rr_bar",
    "b_exponent",
    "temperature",
    "od_scale",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

impl ScanAxis {
    pub fn delta_c(from: f64, to: f64, n: usize) -> Self {
        Self { parameter: "delta_c".into(), from, to, n }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.from + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Worker threads for scans; `None` uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Evaluate ensemble classes in parallel inside one run.
    #[serde(default)]
    pub parallel_classes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Grid intervals of the self-consistency scan.
    #[serde(default = "default_grid_n")]
    pub fixed_point_grid_n: usize,
    pub model: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalConfig>,
    #[serde(default)]
    pub transmission: TransmissionConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub hysteresis: HysteresisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanAxis>,
    #[serde(default)]
    pub execution: ExecutionConfig,
}

fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}

/// Doppler scale of the `fig3` preset: k·v is expressed in units of
/// γ_unit = 2π·6.07 MHz / FIG3_DOPPLER_SCALE.
pub const FIG3_DOPPLER_SCALE: f64 = 2.0;
/// Optical depth of the `fig3` preset.
pub const FIG3_OD_SCALE: f64 = 100.0;

impl Scenario {
    /// Homogeneous model with the bistable/oscillatory parameter set, a
    /// 2000/γ horizon and a Δc axis over ±20γ at 0.05γ.
    pub fn fig2() -> Self {
        Self {
            name: "fig2".into(),
            output_dir: PathBuf::from("runs/fig2"),
            seed: 0,
            fixed_point_grid_n: DEFAULT_GRID_N,
            model: ModelParams::fig2(),
            thermal: None,
            transmission: TransmissionConfig::default(),
            integrator: IntegratorConfig { t_end: 2000.0, ..IntegratorConfig::default() },
            analysis: AnalysisConfig::default(),
            hysteresis: HysteresisConfig::default(),
            scan: Some(ScanAxis::delta_c(-20.0, 20.0, 801)),
            execution: ExecutionConfig::default(),
        }
    }

    /// Thermal ensemble at the synchronization operating point: 150 classes
    /// at 321 K over ±400 m/s, counter-propagating by default.
    pub fn fig3() -> Self {
        let base = ThermalConfig::default();
        Self {
            name: "fig3".into(),
            output_dir: PathBuf::from("runs/fig3"),
            seed: 0,
            fixed_point_grid_n: DEFAULT_GRID_N,
            model: ModelParams::fig3(),
            thermal: Some(ThermalConfig { gamma_unit: base.gamma_unit / FIG3_DOPPLER_SCALE, ..base }),
            transmission: TransmissionConfig { od_scale: FIG3_OD_SCALE, coupling_mode: CouplingMode::AverageOfPower },
            integrator: IntegratorConfig { rel_tol: 1e-7, abs_tol: 1e-9, max_step: 0.1, output_dt: 0.5, t_end: 600.0 },
            analysis: AnalysisConfig { eps_osc: 1e-3, t_min: Some(300.0), freq_tol: 0.05 },
            hysteresis: HysteresisConfig::default(),
            scan: Some(ScanAxis::delta_c(-20.0, 0.0, 21)),
            execution: ExecutionConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig2" => Ok(Self::fig2()),
            "fig3" => Ok(Self::fig3()),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected fig2 or fig3)"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        // A run manifest embeds the resolved scenario under [scenario].
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let scenario: Scenario = match value.get("scenario") {
            Some(inner) if value.contains_key("config_hash") => {
                inner.clone().try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?
            }
            _ => toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Serializes the scenario. Every scenario that passes [`Scenario::validate`]
    /// is representable.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Sets the scenario seed and the thermal sampling seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(thermal) = self.thermal.as_mut() {
            thermal.rng_seed = seed;
        }
        self
    }

    pub fn thermal_or_default(&self) -> ThermalConfig {
        self.thermal.unwrap_or_default()
    }

    pub fn t_min(&self) -> f64 {
        self.analysis.t_min_for(self.integrator.t_end)
    }

    pub fn validate(&self) -> Result<()> {
        let section = |name: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::InvalidParam { field, reason } => Error::Config(format!("{name}.{field}: {reason}")),
                other => other,
            })
        };
        section("model", self.model.validate())?;
        if let Some(thermal) = &self.thermal {
            section("thermal", thermal.validate())?;
        }
        section("transmission", self.transmission.validate())?;
        section("integrator", self.integrator.validate())?;
        section("hysteresis", self.hysteresis.validate())?;
        if self.fixed_point_grid_n < 100 {
            return Err(Error::Config(format!("fixed_point_grid_n: must be >= 100, got {}", self.fixed_point_grid_n)));
        }
        let a = &self.analysis;
        if !(a.eps_osc.is_finite() && a.eps_osc >= 0.0) {
            return Err(Error::Config(format!("analysis.eps_osc: must be finite and >= 0, got {}", a.eps_osc)));
        }
        if !(a.freq_tol.is_finite() && a.freq_tol > 0.0) {
            return Err(Error::Config(format!("analysis.freq_tol: must be > 0, got {}", a.freq_tol)));
        }
        if let Some(t_min) = a.t_min {
            if !(t_min.is_finite() && t_min >= 0.0 && t_min < self.integrator.t_end) {
                return Err(Error::Config(format!(
                    "analysis.t_min_in_inverse_gamma: must lie in [0, t_end), got {t_min}"
                )));
            }
        }
        if let Some(scan) = &self.scan {
            if !SCAN_PARAMETERS.contains(&scan.parameter.as_str()) {
                return Err(Error::Config(format!(
                    "scan.parameter: `{}` is not a numeric parameter (one of {})",
                    scan.parameter,
                    SCAN_PARAMETERS.join(", ")
                )));
            }
            if scan.n < 2 {
                return Err(Error::Config(format!("scan.n: must be >= 2, got {}", scan.n)));
            }
            if !(scan.from.is_finite() && scan.to.is_finite()) {
                return Err(Error::Config("scan.from/scan.to: must be finite".into()));
            }
        }
        // TOML integers are signed 64-bit.
        let seeds = [("seed", Some(self.seed)), ("thermal.rng_seed", self.thermal.map(|t| t.rng_seed))];
        for (field, seed) in seeds {
            if seed.is_some_and(|v| v > i64::MAX as u64) {
                return Err(Error::Config(format!("{field}: must be <= {}", i64::MAX)));
            }
        }
        if let Some(0) = self.execution.workers {
            return Err(Error::Config("execution.workers: must be >= 1".into()));
        }
        Ok(())
    }

    /// Copy of the scenario with the named scan parameter set to `value`.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match parameter {
            "delta_c" => s.model.delta_c = value,
            "delta_p" => s.model.delta_p = value,
            "omega_p" => s.model.omega_p = value,
            "omega_c" => s.model.omega_c = value,
            "gamma_e" => s.model.gamma_e = value,
            "gamma_r" => s.model.gamma_r = value,
            "v_rr_bar" => s.model.v_rr_bar = value,
            "b_exponent" => s.model.b_exponent = value,
            "temperature" => {
                let mut thermal = s.thermal_or_default();
                thermal.temperature = value;
                s.thermal = Some(thermal);
            }
            "od_scale" => s.transmission.od_scale = value,
            other => return Err(Error::Config(format!("scan.parameter: unknown parameter `{other}`"))),
        }
        Ok(s)
    }
}
