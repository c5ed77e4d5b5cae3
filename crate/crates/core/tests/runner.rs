//! Scenario files, run directories and the command-line front end.

use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use rydsync::fixed_points::RegimeTag;
use rydsync::runner::{self, RunManifest, ScanAxis, Scenario, MANIFEST_FILE};
use rydsync::thermal::{Geometry, Sampling};

fn quick_ensemble() -> Scenario {
    let mut s = Scenario::fig3();
    let th = s.thermal.as_mut().unwrap();
    th.n_classes = 6;
    s.integrator.t_end = 80.0;
    s.analysis.t_min = Some(20.0);
    s.scan = Some(ScanAxis::delta_c(-12.0, -10.0, 3));
    s
}

fn read_header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn assert_run_dir(dir: &Path, manifest: &RunManifest, expected: &[&str]) {
    assert_eq!(manifest.files, expected);
    let mut on_disk: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    let mut listed: Vec<String> = expected.iter().map(|s| s.to_string()).chain([MANIFEST_FILE.to_string()]).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in expected {
        let header = read_header(&dir.join(f));
        assert!(header.split(',').all(|c| !c.is_empty() && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_')), "{header}");
    }
    assert_eq!(&RunManifest::load(&dir.join(MANIFEST_FILE)).unwrap(), manifest);
}

prop_compose! {
    fn arb_scenario()(
        omega_p in 0.0..10.0f64,
        delta_c in -30.0..30.0f64,
        v_rr_bar in -1000.0..1000.0f64,
        t_end in 10.0..5000.0f64,
        n_classes in 1usize..400,
        geometry in prop_oneof![Just(Geometry::CoPropagating), Just(Geometry::CounterPropagating)],
        random in any::<bool>(),
        seed in 0..=i64::MAX as u64,
        scan_n in 2usize..1000,
        workers in proptest::option::of(1usize..64),
    ) -> Scenario {
        let mut s = Scenario::fig3().with_seed(seed);
        s.model.omega_p = omega_p;
        s.model.delta_c = delta_c;
        s.model.v_rr_bar = v_rr_bar;
        s.integrator.t_end = t_end;
        s.analysis.t_min = None;
        let th = s.thermal.as_mut().unwrap();
        th.n_classes = n_classes;
        th.geometry = geometry;
        th.sampling = if random { Sampling::RandomMaxwell } else { Sampling::UniformGridWeighted };
        s.scan = Some(ScanAxis::delta_c(-delta_c.abs() - 1.0, delta_c.abs(), scan_n));
        s.execution.workers = workers;
        s
    }
}

proptest! {
    #[test]
    fn scenario_round_trips(s in arb_scenario()) {
        prop_assert!(s.validate().is_ok());
        prop_assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }
}

#[test]
fn regime_scan_is_independent_of_worker_count() {
    let mut s = Scenario::fig2();
    s.scan = Some(ScanAxis::delta_c(-2.0, 5.0, 15));
    s.fixed_point_grid_n = 300;
    let runs: Vec<_> = [1, 3]
        .iter()
        .map(|&w| {
            s.execution.workers = Some(w);
            runner::regime_scan(&s).unwrap()
        })
        .collect();
    for (a, b) in runs[0].regimes.iter().zip(&runs[1].regimes) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(a.tag, b.tag);
        let ra: Vec<f64> = a.fixed_points.iter().map(|f| f.state.rho_rr).collect();
        let rb: Vec<f64> = b.fixed_points.iter().map(|f| f.state.rho_rr).collect();
        assert_eq!(ra, rb);
    }
}

#[test]
fn nonreciprocity_files_are_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = quick_ensemble();
    s.execution.workers = Some(1);
    runner::cmd_nonreciprocity(&s, &dir.path().join("a")).unwrap();
    s.execution.workers = Some(4);
    runner::cmd_nonreciprocity(&s, &dir.path().join("b")).unwrap();
    let a = fs::read(dir.path().join("a/scan.csv")).unwrap();
    let b = fs::read(dir.path().join("b/scan.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_run_directory_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::fig2();
    s.integrator.t_end = 200.0;
    let first = dir.path().join("first");
    let m = runner::cmd_single_run(&s, &first).unwrap();
    assert_run_dir(&first, &m, &["timeseries.csv", "spectral.csv"]);
    assert_eq!(m.config_hash, runner::config_hash(&s));

    let again = Scenario::from_file(&first.join(MANIFEST_FILE)).unwrap();
    assert_eq!(again, s);
    let second = dir.path().join("second");
    runner::cmd_single_run(&again, &second).unwrap();
    for f in &m.files {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn undriven_single_run_stays_in_the_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::fig2();
    s.model.omega_p = 0.0;
    s.integrator.t_end = 100.0;
    runner::cmd_single_run(&s, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1..], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
    let spectral = fs::read_to_string(dir.path().join("spectral.csv")).unwrap();
    assert!(spectral.lines().nth(1).unwrap().contains(",false,"));
}

#[test]
fn noninteracting_regime_scan_is_monostable_everywhere() {
    let mut s = Scenario::fig2();
    s.model.v_rr_bar = 0.0;
    s.scan = Some(ScanAxis::delta_c(-20.0, 20.0, 41));
    s.fixed_point_grid_n = 200;
    let scan = runner::regime_scan(&s).unwrap();
    assert!(scan.tags().iter().all(|t| *t == Some(RegimeTag::Monostable)));
    assert!(scan.boundaries().is_empty());
}

#[test]
fn regime_and_hysteresis_directories() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::fig2();
    s.scan = Some(ScanAxis::delta_c(-1.0, 5.0, 25));
    s.fixed_point_grid_n = 300;
    let m = runner::cmd_regime_scan(&s, &dir.path().join("regime")).unwrap();
    assert_run_dir(&dir.path().join("regime"), &m, &["regimes.csv", "fixed_points.csv", "boundaries.csv"]);
    let regimes = fs::read_to_string(dir.path().join("regime/regimes.csv")).unwrap();
    assert_eq!(regimes.lines().count(), 26);

    s.hysteresis.n_steps = 10;
    s.hysteresis.hold_time = 50.0;
    let m = runner::cmd_hysteresis(&s, &dir.path().join("hyst")).unwrap();
    assert_run_dir(&dir.path().join("hyst"), &m, &["forward.csv", "backward.csv", "loop.csv"]);
    let fwd = fs::read_to_string(dir.path().join("hyst/forward.csv")).unwrap();
    let bwd = fs::read_to_string(dir.path().join("hyst/backward.csv")).unwrap();
    // Each branch is written in its own sweep order.
    let first = |t: &str| t.lines().nth(1).unwrap().split(',').next().unwrap().parse::<f64>().unwrap();
    assert_eq!(first(&fwd), s.hysteresis.delta_c_from);
    assert_eq!(first(&bwd), s.hysteresis.delta_c_to);
}

#[test]
fn ensemble_directory() {
    let dir = tempfile::tempdir().unwrap();
    let s = quick_ensemble();
    let m = runner::cmd_ensemble_run(&s, Some(Geometry::CoPropagating), dir.path()).unwrap();
    assert_run_dir(dir.path(), &m, &["heatmap.csv", "averaged.csv", "sync.csv"]);
    let heatmap = fs::read_to_string(dir.path().join("heatmap.csv")).unwrap();
    assert_eq!(heatmap.lines().count(), 1 + 6 * s.integrator.n_samples());
    let sync = fs::read_to_string(dir.path().join("sync.csv")).unwrap();
    assert!(sync.lines().nth(1).unwrap().starts_with("co,average_of_power,"));
}

#[test]
fn degenerate_geometries_give_no_contrast() {
    let mut s = quick_ensemble();
    let th = s.thermal.as_mut().unwrap();
    th.k_p = 0.0;
    th.k_c = 0.0;
    let scan = runner::nonreciprocity(&s).unwrap();
    for p in &scan.points {
        let (cou, co) = (p.counter.as_ref().unwrap(), p.co.as_ref().unwrap());
        assert_eq!(cou, co);
        let eta = p.contrast().unwrap().eta;
        assert!(matches!(eta, rydsync::signal::Eta::Undefined) || eta.value() == Some(0.0));
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rydsync")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    let ok_cfg = dir.path().join("ok.toml");
    let mut s = Scenario::fig2();
    s.integrator.t_end = 100.0;
    fs::write(&ok_cfg, s.to_toml()).unwrap();
    let r = cli(&["single-run", "--config", ok_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join(MANIFEST_FILE).exists());

    // Field-level configuration error.
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, s.to_toml().replace("gamma_e_in_gamma = 1.0", "gamma_e_in_gamma = -1.0")).unwrap();
    let r = cli(&["single-run", "--config", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("model.gamma_e"));

    // Usage errors are configuration errors too.
    assert_eq!(cli(&["single-run", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(cli(&["single-run"]).status.code(), Some(1));

    // Too few samples after the transient cutoff is a numerical failure.
    let short = dir.path().join("short.toml");
    let mut s_short = s.clone();
    s_short.integrator.t_end = 10.0;
    fs::write(&short, s_short.to_toml()).unwrap();
    let r = cli(&["single-run", "--config", short.to_str().unwrap(), "--out", dir.path().join("short").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}
