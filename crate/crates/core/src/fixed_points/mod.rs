//! Mean-field steady states, their linear stability, and regime classification.
//!
//! Freezing the shift at a value s makes the Bloch equations linear, so the
//! steady state for a given s is a 9×9 linear solve. Every self-consistent
//! fixed point is then a root of the scalar map
//! g(ρ) = ρrr[steady_state(V̄ ρ^b)] − ρ on [0, 1], which a dense scan with
//! bisection finds exhaustively.

pub mod hysteresis;

use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{bloch_rhs_packed, clamped_power, self_consistent_rhs_packed, BlochState, ModelParams, STATE_DIM};

pub use hysteresis::{hysteresis_sweep, HysteresisConfig, HysteresisResult};

pub type Matrix9 = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type Matrix8 = SMatrix<f64, 8, 8>;

/// Default number of grid intervals for the self-consistency scan.
pub const DEFAULT_GRID_N: usize = 2000;
/// Eigenvalues with Re λ ≥ −STABILITY_MARGIN count as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

const ROOT_TOL: f64 = 1e-12;
const ROOT_DEDUP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub state: BlochState,
    /// Self-consistent shift V̄ ρrr^b.
    pub shift: f64,
    /// Spectrum of the full 9×9 Jacobian. One eigenvalue is always ~0
    /// because the trace is conserved.
    pub eigenvalues: Vec<Complex64>,
    /// Spectrum restricted to trace-preserving perturbations (8 values).
    pub reduced_eigenvalues: Vec<Complex64>,
    pub stable: bool,
    /// Largest real part of `reduced_eigenvalues`.
    pub max_real_part: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    Monostable,
    Bistable,
    Oscillatory,
}

impl RegimeTag {
    pub fn from_stable_count(n_stable: usize) -> Self {
        match n_stable {
            0 => RegimeTag::Oscillatory,
            1 => RegimeTag::Monostable,
            _ => RegimeTag::Bistable,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegimeTag::Monostable => "monostable",
            RegimeTag::Bistable => "bistable",
            RegimeTag::Oscillatory => "oscillatory",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub fixed_points: Vec<FixedPoint>,
}

impl Regime {
    pub fn n_stable(&self) -> usize {
        self.fixed_points.iter().filter(|f| f.stable).count()
    }

    pub fn stable_points(&self) -> impl Iterator<Item = &FixedPoint> {
        self.fixed_points.iter().filter(|f| f.stable)
    }
}

/// Linear generator of the Bloch equations with the shift frozen at `shift`.
pub fn frozen_generator(params: &ModelParams, shift: f64) -> Matrix9 {
    let mut a = Matrix9::zeros();
    let mut unit = [0.0; STATE_DIM];
    let mut col = [0.0; STATE_DIM];
    for j in 0..STATE_DIM {
        unit[j] = 1.0;
        bloch_rhs_packed(&unit, params, shift, &mut col);
        unit[j] = 0.0;
        for i in 0..STATE_DIM {
            a[(i, j)] = col[i];
        }
    }
    a
}

/// Steady state of the linear system obtained by freezing the shift at `shift`.
///
/// The ρgg row is redundant (populations sum to a constant) and is replaced
/// by the trace condition.
pub fn steady_state_given_shift(params: &ModelParams, shift: f64) -> Result<BlochState> {
    params.validate()?;
    ensure_finite(shift, "shift")?;
    let mut a = frozen_generator(params, shift);
    for j in 0..STATE_DIM {
        a[(0, j)] = if j < 3 { 1.0 } else { 0.0 };
    }
    let mut rhs = SVector::<f64, STATE_DIM>::zeros();
    rhs[0] = 1.0;
    let solved = a.lu().solve(&rhs).filter(|x| x.iter().all(|v| v.is_finite()));
    match solved {
        Some(x) if condition_estimate(&a) < 1e14 => Ok(BlochState::from_packed(x.as_slice())),
        _ => Err(Error::Singular { condition: condition_estimate(&a) }),
    }
}

fn condition_estimate(a: &Matrix9) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Central finite-difference Jacobian of the self-consistent right-hand side,
/// including the derivative of V̄ ρrr^b through ρrr.
pub fn jacobian(state: &BlochState, params: &ModelParams) -> Matrix9 {
    let x = state.to_packed();
    let mut j = Matrix9::zeros();
    let mut xp = x;
    let mut xm = x;
    let mut fp = [0.0; STATE_DIM];
    let mut fm = [0.0; STATE_DIM];
    for col in 0..STATE_DIM {
        let h = 1e-6 * x[col].abs().max(1.0);
        xp[col] = x[col] + h;
        xm[col] = x[col] - h;
        self_consistent_rhs_packed(&xp, params, &mut fp);
        self_consistent_rhs_packed(&xm, params, &mut fm);
        xp[col] = x[col];
        xm[col] = x[col];
        for row in 0..STATE_DIM {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

/// Restricts a Jacobian to the trace-preserving subspace by eliminating
/// ρgg = 1 − ρee − ρrr. Its spectrum is the full spectrum minus the
/// conserved-trace zero mode.
pub fn reduced_jacobian(j: &Matrix9) -> Matrix8 {
    Matrix8::from_fn(|r, c| {
        let direct = j[(r + 1, c + 1)];
        if c < 2 {
            direct - j[(r + 1, 0)]
        } else {
            direct
        }
    })
}

pub fn eigenvalues<const N: usize>(m: &SMatrix<f64, N, N>) -> Vec<Complex64> {
    let d = DMatrix::from_column_slice(N, N, m.as_slice());
    d.complex_eigenvalues().iter().copied().collect()
}

fn fixed_point_at(state: BlochState, params: &ModelParams) -> FixedPoint {
    let j = jacobian(&state, params);
    let reduced_eigenvalues = eigenvalues(&reduced_jacobian(&j));
    let eigenvalues = eigenvalues(&j);
    let max_real_part = reduced_eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    FixedPoint {
        shift: params.v_rr_bar * clamped_power(state.rho_rr, params.b_exponent),
        state,
        eigenvalues,
        reduced_eigenvalues,
        stable: max_real_part < -STABILITY_MARGIN,
        max_real_part,
    }
}

/// Scalar self-consistency map g(ρ) = ρrr[steady_state(V̄ ρ^b)] − ρ.
pub fn self_consistency_map(params: &ModelParams, rho: f64) -> Result<f64> {
    let shift = params.v_rr_bar * clamped_power(rho, params.b_exponent);
    Ok(steady_state_given_shift(params, shift)?.rho_rr - rho)
}

/// All self-consistent fixed points, found by scanning g on `grid_n` uniform
/// intervals of [0, 1] and bisecting every sign change.
pub fn self_consistent_fixed_points(params: &ModelParams, grid_n: usize) -> Result<Vec<FixedPoint>> {
    params.validate()?;
    if grid_n < 100 {
        return Err(Error::InvalidParam { field: "grid_n", reason: format!("must be >= 100, got {grid_n}") });
    }
    let g = |rho: f64| self_consistency_map(params, rho);
    let nodes: Vec<f64> = (0..=grid_n).map(|i| i as f64 / grid_n as f64).collect();
    let values = nodes.iter().map(|&r| g(r)).collect::<Result<Vec<f64>>>()?;

    let mut roots = Vec::new();
    for i in 0..=grid_n {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
        }
        if i < grid_n && values[i] * values[i + 1] < 0.0 {
            roots.push(bisect(&g, nodes[i], nodes[i + 1], values[i])?);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < ROOT_DEDUP);

    roots
        .into_iter()
        .map(|rho| {
            let shift = params.v_rr_bar * clamped_power(rho, params.b_exponent);
            let state = steady_state_given_shift(params, shift)?;
            Ok(fixed_point_at(state, params))
        })
        .collect()
}

fn bisect<G>(g: &G, mut lo: f64, mut hi: f64, mut g_lo: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid.abs() < ROOT_TOL || hi - lo < 4.0 * f64::EPSILON {
            return Ok(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Regime from the number of stable fixed points, with the default scan resolution.
pub fn classify_regime(params: &ModelParams) -> Result<Regime> {
    classify_regime_with(params, DEFAULT_GRID_N)
}

pub fn classify_regime_with(params: &ModelParams, grid_n: usize) -> Result<Regime> {
    let fixed_points = self_consistent_fixed_points(params, grid_n)?;
    let n_stable = fixed_points.iter().filter(|f| f.stable).count();
    Ok(Regime { tag: RegimeTag::from_stable_count(n_stable), fixed_points })
}

/// Classifies every Δc in `delta_c` concurrently on the current rayon pool.
pub fn scan_regimes(params: &ModelParams, delta_c: &[f64], grid_n: usize) -> Vec<Result<Regime>> {
    delta_c.par_iter().map(|&dc| classify_regime_with(&params.with_delta_c(dc), grid_n)).collect()
}

/// Contiguous runs of one tag along a scan: `(first index, last index, tag)`.
pub fn regime_windows(tags: &[RegimeTag]) -> Vec<(usize, usize, RegimeTag)> {
    let mut out: Vec<(usize, usize, RegimeTag)> = Vec::new();
    for (i, &tag) in tags.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.2 == tag => last.1 = i,
            _ => out.push((i, i, tag)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_probe_gives_ground_state() {
        for (omega_c, shift) in [(4.4, 0.0), (1.0, -3.0), (0.0, 2.0)] {
            let p = ModelParams { omega_p: 0.0, omega_c, ..ModelParams::fig2() };
            let s = steady_state_given_shift(&p, shift).unwrap();
            assert_abs_diff_eq!(s.rho_gg, 1.0, epsilon = 1e-14);
            assert!(s.distance(&BlochState::ground()) < 1e-14);
        }
    }

    #[test]
    fn two_level_saturation_closed_form() {
        // ρee = (Ω²/4)/(Δ² + γ²/4 + Ω²/2), Im ρge = (γΩ/4)/(Δ² + γ²/4 + Ω²/2)
        // Re ρge = +(ΔΩ/2)/(...) for d_ge = −iΔ − γ/2.
        for (omega, delta) in [(6.0, 0.0), (1.3, 0.7), (0.2, -2.5)] {
            let p = ModelParams { omega_p: omega, omega_c: 0.0, delta_p: delta, v_rr_bar: 0.0, ..ModelParams::fig2() };
            let s = steady_state_given_shift(&p, 0.0).unwrap();
            let den = delta * delta + 0.25 + 0.5 * omega * omega;
            assert_abs_diff_eq!(s.rho_ee, 0.25 * omega * omega / den, epsilon = 1e-12);
            assert_abs_diff_eq!(s.rho_ge.im, 0.25 * omega / den, epsilon = 1e-12);
            assert_abs_diff_eq!(s.rho_ge.re, 0.5 * omega * delta / den, epsilon = 1e-12);
            assert_abs_diff_eq!(s.rho_rr, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        // Without any drive or Rydberg decay, every ρrr is stationary.
        let p = ModelParams { omega_p: 0.0, omega_c: 0.0, gamma_r: 0.0, ..ModelParams::fig2() };
        assert!(matches!(steady_state_given_shift(&p, 0.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn noninteracting_model_has_one_stable_point() {
        for dc in [-10.0, 0.0, 3.0] {
            let p = ModelParams { v_rr_bar: 0.0, ..ModelParams::fig2().with_delta_c(dc) };
            let regime = classify_regime_with(&p, 200).unwrap();
            assert_eq!(regime.fixed_points.len(), 1);
            assert_eq!(regime.tag, RegimeTag::Monostable);
        }
    }

    #[test]
    fn undriven_jacobian_spectrum() {
        let p = ModelParams { omega_p: 0.0, omega_c: 0.0, ..ModelParams::fig2() };
        let j = jacobian(&BlochState::ground(), &p);
        let mut re: Vec<f64> = eigenvalues(&j).iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        let (ge, gr) = (p.gamma_e, p.gamma_r);
        let mut expected = vec![-ge, -gr, 0.0, -ge / 2.0, -ge / 2.0, -gr / 2.0, -gr / 2.0, -(ge + gr) / 2.0, -(ge + gr) / 2.0];
        expected.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
        // the reduced spectrum drops exactly the conserved-trace mode
        let mut red: Vec<f64> = eigenvalues(&reduced_jacobian(&j)).iter().map(|l| l.re).collect();
        red.sort_by(f64::total_cmp);
        expected.retain(|&v| v != 0.0);
        for (a, b) in red.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn jacobian_matches_directional_differences() {
        let p = ModelParams::fig2().with_delta_c(4.0);
        let fps = self_consistent_fixed_points(&p, 400).unwrap();
        let dir = [0.3, -0.2, -0.1, 0.05, 0.4, -0.3, 0.2, 0.1, -0.25];
        for fp in fps {
            let j = jacobian(&fp.state, &p);
            let x = fp.state.to_packed();
            let eps = 1e-5;
            let shifted = |sign: f64| {
                let mut y = x;
                for k in 0..STATE_DIM {
                    y[k] += sign * eps * dir[k];
                }
                let mut f = [0.0; STATE_DIM];
                self_consistent_rhs_packed(&y, &p, &mut f);
                f
            };
            let (fp_, fm_) = (shifted(1.0), shifted(-1.0));
            let jv = j * SVector::<f64, STATE_DIM>::from_row_slice(&dir);
            for k in 0..STATE_DIM {
                let fd = (fp_[k] - fm_[k]) / (2.0 * eps);
                assert!((jv[k] - fd).abs() <= 1e-5 * fd.abs().max(1.0), "row {k}: {} vs {fd}", jv[k]);
            }
        }
    }

    #[test]
    fn fixed_points_have_tiny_residuals() {
        let p = ModelParams::fig2().with_delta_c(4.0);
        let fps = self_consistent_fixed_points(&p, 1000).unwrap();
        assert_eq!(fps.len(), 3);
        for fp in &fps {
            let mut f = [0.0; STATE_DIM];
            self_consistent_rhs_packed(&fp.state.to_packed(), &p, &mut f);
            let residual = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(residual < 1e-10, "{residual}");
            assert_abs_diff_eq!(fp.state.trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn small_grid_is_rejected() {
        assert!(self_consistent_fixed_points(&ModelParams::fig2(), 99).is_err());
    }

    #[test]
    fn regime_windows_group_runs() {
        use RegimeTag::*;
        let w = regime_windows(&[Monostable, Monostable, Bistable, Oscillatory, Oscillatory, Monostable]);
        assert_eq!(w, vec![(0, 1, Monostable), (2, 2, Bistable), (3, 4, Oscillatory), (5, 5, Monostable)]);
    }
}
