use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rydsync::runner::{self, Scenario};
use rydsync::thermal::Geometry;
use rydsync::{Error, Result};

/// Mean-field Rydberg ladder simulator: single runs, regime scans, sweeps and ensembles.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the homogeneous model and analyze ρ_rr.
    SingleRun(Common),
    /// Classify fixed-point regimes along the scan axis.
    RegimeScan(Common),
    /// Adiabatic forward/backward Δc sweep.
    Hysteresis(Common),
    /// Thermal-ensemble run with per-class output.
    EnsembleRun(Common),
    /// Both geometries along the scan axis, with the contrast ratio η.
    Nonreciprocity(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML) or a previous run's manifest.toml.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = ["fig2", "fig3"])]
    preset: Option<String>,
    /// Output directory (defaults to the scenario's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scans.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Doppler geometry: co or counter.
    #[arg(long)]
    geometry: Option<Geometry>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match (&self.config, &self.preset) {
            (Some(path), _) => Scenario::from_file(path)?,
            (None, Some(name)) => Scenario::preset(name)?,
            (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
        };
        if let Some(seed) = self.seed {
            s = s.with_seed(seed);
        }
        if let Some(w) = self.workers {
            s.execution.workers = Some(w);
        }
        if let Some(out) = &self.out {
            s.output_dir = out.clone();
        }
        if let Some(g) = self.geometry {
            let mut thermal = s.thermal_or_default();
            thermal.geometry = g;
            s.thermal = Some(thermal);
        }
        s.validate()?;
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<runner::RunManifest> {
    let (common, cmd): (&Common, fn(&Scenario) -> Result<runner::RunManifest>) = match &cli.command {
        Command::SingleRun(c) => (c, |s| runner::cmd_single_run(s, &s.output_dir)),
        Command::RegimeScan(c) => (c, |s| runner::cmd_regime_scan(s, &s.output_dir)),
        Command::Hysteresis(c) => (c, |s| runner::cmd_hysteresis(s, &s.output_dir)),
        Command::EnsembleRun(c) => (c, |s| runner::cmd_ensemble_run(s, None, &s.output_dir)),
        Command::Nonreciprocity(c) => (c, |s| runner::cmd_nonreciprocity(s, &s.output_dir)),
    };
    cmd(&common.scenario()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage errors are configuration errors; exit code 2 is reserved for numerics.
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(m) => {
            println!("{}: wrote {} file(s) to {}", m.command, m.files.len() + 1, m.scenario.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
