//! Thermal-ensemble invariants: decoupling, degenerate geometries and averages.

use rydsync::model::{integrate, self_consistent_rhs_packed, IntegratorConfig};
use rydsync::thermal::{
    integrate_ensemble, transmission, CouplingMode, EnsembleTrajectory, Geometry, ThermalConfig, TransmissionConfig,
};
use rydsync::{BlochState, ModelParams};

fn tight(t_end: f64) -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-12, max_step: 0.05, output_dt: 0.5, t_end }
}

fn small_ensemble(n: usize, geometry: Geometry) -> ThermalConfig {
    ThermalConfig { n_classes: n, geometry, ..ThermalConfig::default() }
}

fn run(p: &ModelParams, th: &ThermalConfig, integ: &IntegratorConfig) -> EnsembleTrajectory {
    integrate_ensemble(p, th, &TransmissionConfig::default(), integ).unwrap()
}

#[test]
fn without_interaction_classes_evolve_independently() {
    let p = ModelParams { v_rr_bar: 0.0, gamma_r: 0.05, ..ModelParams::fig3() };
    let integ = tight(30.0);
    let ens = run(&p, &small_ensemble(7, Geometry::CounterPropagating), &integ);
    for (j, class) in ens.classes.iter().enumerate() {
        let single = ModelParams { delta_p: class.effective_delta_p, delta_c: class.effective_delta_c, ..p };
        let tr = integrate(|_, x, dx| self_consistent_rhs_packed(x, &single, dx), &BlochState::ground().to_packed(), &integ)
            .unwrap();
        for i in 0..ens.n_samples() {
            let diff = ens
                .class_packed(i, j)
                .iter()
                .zip(tr.sample(i))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-8, "class {j} sample {i}: {diff:e}");
        }
    }
}

#[test]
fn geometries_coincide_without_doppler_shifts() {
    let p = ModelParams::fig3();
    let integ = IntegratorConfig { t_end: 40.0, ..IntegratorConfig::default() };
    let mut th = small_ensemble(9, Geometry::CounterPropagating);
    th.k_p = 0.0;
    th.k_c = 0.0;
    let counter = run(&p, &th, &integ);
    let co = run(&p, &th.with_geometry(Geometry::CoPropagating), &integ);
    assert_eq!(counter.states, co.states);
    assert_eq!(counter.transmission, co.transmission);
}

#[test]
fn single_class_reduces_to_homogeneous_model() {
    // One class on a symmetric velocity range sits at v = 0.
    let p = ModelParams::fig2();
    let integ = tight(50.0);
    let ens = run(&p, &small_ensemble(1, Geometry::CounterPropagating), &integ);
    assert_eq!(ens.classes[0].v, 0.0);
    assert_eq!(ens.classes[0].weight, 1.0);
    let tr = integrate(|_, x, dx| self_consistent_rhs_packed(x, &p, dx), &BlochState::ground().to_packed(), &integ).unwrap();
    for i in 0..tr.len() {
        for (a, b) in ens.class_packed(i, 0).iter().zip(tr.sample(i)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn averaged_observables_follow_the_class_states() {
    let p = ModelParams::fig3();
    let trans = TransmissionConfig { od_scale: 25.0, coupling_mode: CouplingMode::PowerOfAverage };
    let integ = IntegratorConfig { t_end: 20.0, ..IntegratorConfig::default() };
    let ens = integrate_ensemble(&p, &small_ensemble(11, Geometry::CoPropagating), &trans, &integ).unwrap();
    let weights = ens.weights();
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for i in 0..ens.n_samples() {
        let states: Vec<BlochState> = (0..ens.n_classes()).map(|j| ens.class_state(i, j)).collect();
        let rr: f64 = states.iter().zip(&weights).map(|(s, w)| w * s.rho_rr).sum();
        let ge: f64 = states.iter().zip(&weights).map(|(s, w)| w * s.rho_ge.im).sum();
        assert!((ens.rho_rr_avg[i] - rr).abs() < 1e-14);
        assert!((ens.rho_ge_avg[i].im - ge).abs() < 1e-14);
        let expected_shift = p.v_rr_bar * rr.clamp(0.0, 1.0).powf(p.b_exponent);
        assert!((ens.shift[i] - expected_shift).abs() < 1e-9 * expected_shift.abs().max(1.0));
        assert_eq!(ens.transmission[i], transmission(ge, p.omega_p, &trans));
        for s in &states {
            assert!((s.trace() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn average_of_power_and_power_of_average_agree_for_linear_shift() {
    let p = ModelParams { b_exponent: 1.0, ..ModelParams::fig3() };
    let integ = IntegratorConfig { t_end: 20.0, ..IntegratorConfig::default() };
    let th = small_ensemble(5, Geometry::CounterPropagating);
    let a = integrate_ensemble(&p, &th, &TransmissionConfig { coupling_mode: CouplingMode::AverageOfPower, ..Default::default() }, &integ)
        .unwrap();
    let b = integrate_ensemble(&p, &th, &TransmissionConfig { coupling_mode: CouplingMode::PowerOfAverage, ..Default::default() }, &integ)
        .unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((x - y).abs() < 1e-9);
    }
}
