//! Experiment commands: each runs one kind of computation for a [`Scenario`]
//! and writes its tables plus a manifest into a run directory.
//!
//! Every command has a pure counterpart (`single_run`, `regime_scan`, ...)
//! that returns the results in memory.

pub mod output;
pub mod scenario;

use std::path::Path;

use rayon::prelude::*;

pub use output::{config_hash, RunDir, RunManifest, MANIFEST_FILE};
pub use scenario::{AnalysisConfig, ExecutionConfig, ScanAxis, Scenario, SCAN_PARAMETERS};

use crate::error::{Error, Result};
use crate::fixed_points::{classify_regime_with, hysteresis_sweep, HysteresisResult, Regime, RegimeTag};
use crate::model::{integrate, self_consistent_rhs_packed, BlochState, Trajectory};
use crate::signal::{contrast_ratio, dominant_frequency, sync_metrics, ContrastResult, SpectralResult, SyncMetrics};
use crate::thermal::{integrate_ensemble_with, EnsembleTrajectory, Geometry};
use output::num;

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("execution.workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn scan_axis(s: &Scenario) -> Result<&ScanAxis> {
    s.scan.as_ref().ok_or_else(|| Error::Config("scan: this command needs a [scan] axis".into()))
}

fn bool_str(b: bool) -> String {
    (if b { "true" } else { "false" }).to_string()
}

// ---------------------------------------------------------------- single run

pub struct SingleRun {
    pub trajectory: Trajectory,
    /// Spectrum of ρ_rr after the analysis cutoff.
    pub spectral: SpectralResult,
}

/// Integrates the homogeneous model from the ground state.
pub fn single_run(s: &Scenario) -> Result<SingleRun> {
    s.validate()?;
    let p = s.model;
    let trajectory = integrate(|_, x, dx| self_consistent_rhs_packed(x, &p, dx), &BlochState::ground().to_packed(), &s.integrator)?;
    let rho_rr = trajectory.component(2);
    let spectral = dominant_frequency(&rho_rr, trajectory.dt(), s.t_min(), s.analysis.eps_osc)?;
    Ok(SingleRun { trajectory, spectral })
}

const SPECTRAL_HEADER: &[&str] = &[
    "observable",
    "frequency_in_gamma",
    "amplitude",
    "is_oscillatory",
    "window_start_in_inverse_gamma",
    "window_end_in_inverse_gamma",
];

fn spectral_row(observable: &str, r: &SpectralResult) -> Vec<String> {
    vec![
        observable.to_string(),
        num(r.frequency),
        num(r.amplitude),
        bool_str(r.is_oscillatory),
        num(r.window.0),
        num(r.window.1),
    ]
}

/// Writes `timeseries.csv` and `spectral.csv`.
pub fn cmd_single_run(s: &Scenario, out: &Path) -> Result<RunManifest> {
    let run = single_run(s)?;
    let mut dir = RunDir::create(out)?;
    let tr = &run.trajectory;
    dir.write_csv(
        "timeseries.csv",
        &[
            "t_in_inverse_gamma",
            "rho_gg",
            "rho_ee",
            "rho_rr",
            "re_rho_ge",
            "im_rho_ge",
            "re_rho_gr",
            "im_rho_gr",
            "re_rho_er",
            "im_rho_er",
        ],
        (0..tr.len()).map(|i| std::iter::once(num(tr.times[i])).chain(tr.sample(i).iter().map(|&v| num(v)))),
    )?;
    dir.write_csv("spectral.csv", SPECTRAL_HEADER, [spectral_row("rho_rr", &run.spectral)])?;
    dir.finish("single-run", s)
}

// -------------------------------------------------------------- regime scan

pub struct RegimeScan {
    pub parameter: String,
    pub values: Vec<f64>,
    pub regimes: Vec<Result<Regime>>,
}

impl RegimeScan {
    /// Tags of the successful points, `None` where classification failed.
    pub fn tags(&self) -> Vec<Option<RegimeTag>> {
        self.regimes.iter().map(|r| r.as_ref().ok().map(|r| r.tag)).collect()
    }

    /// Intervals `(value_before, value_after, tag_before, tag_after)` where the tag changes.
    pub fn boundaries(&self) -> Vec<(f64, f64, RegimeTag, RegimeTag)> {
        let points: Vec<(f64, RegimeTag)> =
            self.values.iter().zip(self.tags()).filter_map(|(&v, t)| t.map(|t| (v, t))).collect();
        points
            .windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| (w[0].0, w[1].0, w[0].1, w[1].1))
            .collect()
    }
}

/// Classifies every point of the scan axis; failures are kept per point.
pub fn regime_scan(s: &Scenario) -> Result<RegimeScan> {
    s.validate()?;
    let axis = scan_axis(s)?;
    let values = axis.values();
    let points: Vec<Scenario> = values.iter().map(|&v| s.with_parameter(&axis.parameter, v)).collect::<Result<_>>()?;
    let grid_n = s.fixed_point_grid_n;
    let regimes = with_workers(s.execution.workers, || {
        points.par_iter().map(|p| classify_regime_with(&p.model, grid_n)).collect::<Vec<_>>()
    })?;
    Ok(RegimeScan { parameter: axis.parameter.clone(), values, regimes })
}

/// Writes `regimes.csv`, `fixed_points.csv` and `boundaries.csv`.
pub fn cmd_regime_scan(s: &Scenario, out: &Path) -> Result<RunManifest> {
    let scan = regime_scan(s)?;
    let param = format!("{}_in_gamma", scan.parameter);
    let mut dir = RunDir::create(out)?;

    dir.write_csv(
        "regimes.csv",
        &["index", &param, "tag", "n_fixed_points", "n_stable", "max_real_part_min", "max_real_part_max", "error"],
        scan.values.iter().zip(&scan.regimes).enumerate().map(|(i, (v, r))| match r {
            Ok(r) => {
                let re = r.fixed_points.iter().map(|f| f.max_real_part);
                let lo = re.clone().fold(f64::INFINITY, f64::min);
                let hi = re.fold(f64::NEG_INFINITY, f64::max);
                vec![
                    i.to_string(),
                    num(*v),
                    r.tag.label().to_string(),
                    r.fixed_points.len().to_string(),
                    r.n_stable().to_string(),
                    num(lo),
                    num(hi),
                    String::new(),
                ]
            }
            Err(e) => vec![i.to_string(), num(*v), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()],
        }),
    )?;

    let mut fp_rows = Vec::new();
    for (i, (v, r)) in scan.values.iter().zip(&scan.regimes).enumerate() {
        let Ok(r) = r else { continue };
        for (k, f) in r.fixed_points.iter().enumerate() {
            let st = &f.state;
            fp_rows.push(vec![
                i.to_string(),
                num(*v),
                k.to_string(),
                num(st.rho_gg),
                num(st.rho_ee),
                num(st.rho_rr),
                num(st.rho_ge.re),
                num(st.rho_ge.im),
                num(f.shift),
                bool_str(f.stable),
                num(f.max_real_part),
            ]);
        }
    }
    dir.write_csv(
        "fixed_points.csv",
        &[
            "index",
            &param,
            "root",
            "rho_gg",
            "rho_ee",
            "rho_rr",
            "re_rho_ge",
            "im_rho_ge",
            "shift_in_gamma",
            "stable",
            "max_real_part_in_gamma",
        ],
        fp_rows,
    )?;

    let from = format!("{param}_before");
    let to = format!("{param}_after");
    dir.write_csv(
        "boundaries.csv",
        &[&from, &to, "tag_before", "tag_after"],
        scan.boundaries().into_iter().map(|(a, b, ta, tb)| vec![num(a), num(b), ta.label().into(), tb.label().into()]),
    )?;
    dir.finish("regime-scan", s)
}

// --------------------------------------------------------------- hysteresis

pub fn hysteresis(s: &Scenario) -> Result<HysteresisResult> {
    s.validate()?;
    hysteresis_sweep(&s.model, &s.hysteresis, &s.integrator)
}

/// Writes `forward.csv`, `backward.csv` and `loop.csv`.
pub fn cmd_hysteresis(s: &Scenario, out: &Path) -> Result<RunManifest> {
    let h = hysteresis(s)?;
    let mut dir = RunDir::create(out)?;
    let header = &["delta_c_in_gamma", "rho_rr", "peak_to_peak_rho_rr", "oscillatory"];
    let branch = |rho: &[f64], ptp: &[f64], osc: &[bool]| {
        (0..rho.len()).map(|i| vec![num(h.delta_c_grid[i]), num(rho[i]), num(ptp[i]), bool_str(osc[i])]).collect::<Vec<_>>()
    };
    // Forward runs in sweep order (from -> to), backward in reverse.
    let fwd = branch(&h.forward_rho_rr, &h.forward_peak_to_peak, &h.forward_oscillatory);
    let mut bwd = branch(&h.backward_rho_rr, &h.backward_peak_to_peak, &h.backward_oscillatory);
    bwd.reverse();
    dir.write_csv("forward.csv", header, fwd)?;
    dir.write_csv("backward.csv", header, bwd)?;
    dir.write_csv(
        "loop.csv",
        &["v_rr_bar_in_gamma", "loop_area_in_gamma", "hold_time_in_inverse_gamma", "n_steps"],
        [vec![num(s.model.v_rr_bar), num(h.loop_area), num(h.hold_time), h.delta_c_grid.len().to_string()]],
    )?;
    dir.finish("hysteresis", s)
}

// ----------------------------------------------------------------- ensemble

pub struct EnsembleRun {
    pub trajectory: EnsembleTrajectory,
    /// Spectrum of the probe transmission T(t) after the cutoff.
    pub transmission: SpectralResult,
    /// Synchronization of the per-class Im ρ_eg series.
    pub sync: SyncMetrics,
}

/// Thermal-ensemble run. `geometry` overrides the scenario's geometry.
pub fn ensemble_run(s: &Scenario, geometry: Option<Geometry>) -> Result<EnsembleRun> {
    s.validate()?;
    let mut thermal = s.thermal_or_default();
    if let Some(g) = geometry {
        thermal.geometry = g;
    }
    let trajectory =
        integrate_ensemble_with(&s.model, &thermal, &s.transmission, &s.integrator, s.execution.parallel_classes)?;
    let dt = trajectory.dt();
    let transmission = dominant_frequency(&trajectory.transmission, dt, s.t_min(), s.analysis.eps_osc)?;
    let sync = sync_metrics(
        &trajectory.im_rho_eg_matrix(),
        &trajectory.weights(),
        dt,
        s.t_min(),
        s.analysis.eps_osc,
        s.analysis.freq_tol,
    )?;
    Ok(EnsembleRun { trajectory, transmission, sync })
}

/// Writes `heatmap.csv` (long format), `averaged.csv` and `sync.csv`.
pub fn cmd_ensemble_run(s: &Scenario, geometry: Option<Geometry>, out: &Path) -> Result<RunManifest> {
    let run = ensemble_run(s, geometry)?;
    let tr = &run.trajectory;
    let mut dir = RunDir::create(out)?;

    let n_classes = tr.n_classes();
    dir.write_csv(
        "heatmap.csv",
        &["t_in_inverse_gamma", "v_in_m_per_s", "im_rho_eg"],
        (0..tr.n_samples()).flat_map(|i| {
            (0..n_classes).map(move |j| vec![num(tr.times[i]), num(tr.classes[j].v), num(tr.class_state(i, j).im_rho_eg())])
        }),
    )?;
    dir.write_csv(
        "averaged.csv",
        &["t_in_inverse_gamma", "rho_rr_avg", "im_rho_ge_avg", "transmission", "shift_in_gamma"],
        (0..tr.n_samples()).map(|i| {
            vec![num(tr.times[i]), num(tr.rho_rr_avg[i]), num(tr.rho_ge_avg[i].im), num(tr.transmission[i]), num(tr.shift[i])]
        }),
    )?;
    let t = &run.transmission;
    dir.write_csv(
        "sync.csv",
        &[
            "geometry",
            "coupling_mode",
            "transmission_frequency_in_gamma",
            "transmission_amplitude",
            "transmission_oscillatory",
            "order_parameter",
            "locked_fraction",
            "ensemble_frequency_in_gamma",
        ],
        [vec![
            tr.geometry.label().to_string(),
            tr.coupling_mode.label().to_string(),
            num(t.frequency),
            num(t.amplitude),
            bool_str(t.is_oscillatory),
            num(run.sync.order_parameter),
            num(run.sync.locked_fraction),
            num(run.sync.ensemble_frequency),
        ]],
    )?;
    dir.finish("ensemble-run", s)
}

// ----------------------------------------------------------- nonreciprocity

pub struct NonreciprocityPoint {
    pub value: f64,
    pub counter: Result<SpectralResult>,
    pub co: Result<SpectralResult>,
}

impl NonreciprocityPoint {
    /// Contrast of the two transmission frequencies, if both runs succeeded.
    pub fn contrast(&self) -> Option<ContrastResult> {
        match (&self.counter, &self.co) {
            (Ok(cou), Ok(co)) => Some(contrast_ratio(cou.frequency, co.frequency)),
            _ => None,
        }
    }
}

pub struct NonreciprocityScan {
    pub parameter: String,
    pub points: Vec<NonreciprocityPoint>,
}

/// Runs both geometries at every point of the scan axis. Each (point,
/// geometry) pair is an independent job; failures stay with their point.
pub fn nonreciprocity(s: &Scenario) -> Result<NonreciprocityScan> {
    s.validate()?;
    let axis = scan_axis(s)?;
    let values = axis.values();
    let points: Vec<Scenario> = values.iter().map(|&v| s.with_parameter(&axis.parameter, v)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, Geometry)> =
        (0..points.len()).flat_map(|i| [(i, Geometry::CounterPropagating), (i, Geometry::CoPropagating)]).collect();
    let mut results = with_workers(s.execution.workers, || {
        jobs.par_iter()
            .map(|&(i, g)| ensemble_run(&points[i], Some(g)).map(|r| r.transmission))
            .collect::<Vec<_>>()
    })?
    .into_iter();
    let points = values
        .into_iter()
        .map(|value| {
            let counter = results.next().expect("one result per job");
            let co = results.next().expect("one result per job");
            NonreciprocityPoint { value, counter, co }
        })
        .collect();
    Ok(NonreciprocityScan { parameter: axis.parameter.clone(), points })
}

/// Writes `scan.csv`; amplitudes are also normalized to the largest amplitude
/// of their own geometry over the scan.
pub fn cmd_nonreciprocity(s: &Scenario, out: &Path) -> Result<RunManifest> {
    let scan = nonreciprocity(s)?;
    let amp = |r: &Result<SpectralResult>| r.as_ref().map(|x| x.amplitude).unwrap_or(0.0);
    let max_cou = scan.points.iter().map(|p| amp(&p.counter)).fold(0.0, f64::max);
    let max_co = scan.points.iter().map(|p| amp(&p.co)).fold(0.0, f64::max);
    let norm = |a: f64, m: f64| if m > 0.0 { a / m } else { 0.0 };
    let mode = s.transmission.coupling_mode.label();
    let param = format!("{}_in_gamma", scan.parameter);

    let mut dir = RunDir::create(out)?;
    dir.write_csv(
        "scan.csv",
        &[
            "index",
            &param,
            "f_cou_in_gamma",
            "amp_cou",
            "f_co_in_gamma",
            "amp_co",
            "eta",
            "amp_cou_normalized",
            "amp_co_normalized",
            "coupling_mode",
            "error",
        ],
        scan.points.iter().enumerate().map(|(i, p)| {
            let field = |r: &Result<SpectralResult>, f: fn(&SpectralResult) -> f64| r.as_ref().map(|x| num(f(x))).unwrap_or_default();
            let error = [("counter", &p.counter), ("co", &p.co)]
                .iter()
                .filter_map(|(g, r)| r.as_ref().err().map(|e| format!("{g}: {e}")))
                .collect::<Vec<_>>()
                .join("; ");
            vec![
                i.to_string(),
                num(p.value),
                field(&p.counter, |x| x.frequency),
                field(&p.counter, |x| x.amplitude),
                field(&p.co, |x| x.frequency),
                field(&p.co, |x| x.amplitude),
                p.contrast().map(|c| c.eta.to_string()).unwrap_or_default(),
                p.counter.as_ref().map(|x| num(norm(x.amplitude, max_cou))).unwrap_or_default(),
                p.co.as_ref().map(|x| num(norm(x.amplitude, max_co))).unwrap_or_default(),
                mode.to_string(),
                error,
            ]
        }),
    )?;
    dir.finish("nonreciprocity", s)
}
