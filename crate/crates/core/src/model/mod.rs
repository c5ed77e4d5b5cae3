//! Single-velocity-class mean-field Bloch equations for a g-e-r ladder.
//!
//! All rates and detunings are in units of the intermediate-state decay
//! rate γ (so `gamma_e` is normally 1) and time is in units of 1/γ.
//!
//! Coherences decay and rotate with d_ge = −iΔp − γe/2,
//! d_gr = −i(Δp+Δc) − γr/2 and d_er = −iΔc − (γe+γr)/2, which is what the
//! rotating-frame Hamiltonian −Δp|e⟩⟨e| − (Δp+Δc)|r⟩⟨r| produces for
//! ρ_αβ = ⟨α|ρ|β⟩. The Rydberg mean-field shift s enters the two coherences
//! involving |r⟩ as −i·s·ρ, so it acts like an extra coupling detuning Δc + s.

pub mod integrator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub use integrator::{integrate, integrate_with, IntegratorConfig, Trajectory};

/// Number of reals in a packed single-class state.
pub const STATE_DIM: usize = 9;

/// Physical drives and rates of the homogeneous model, all in units of γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "omega_p_in_gamma")]
    pub omega_p: f64,
    #[serde(rename = "omega_c_in_gamma")]
    pub omega_c: f64,
    #[serde(rename = "delta_p_in_gamma")]
    pub delta_p: f64,
    #[serde(rename = "delta_c_in_gamma")]
    pub delta_c: f64,
    #[serde(rename = "gamma_e_in_gamma")]
    pub gamma_e: f64,
    #[serde(rename = "gamma_r_in_gamma")]
    pub gamma_r: f64,
    /// Signed effective mean-field interaction strength.
    #[serde(rename = "v_rr_bar_in_gamma")]
    pub v_rr_bar: f64,
    /// Power-law exponent of the density-dependent shift.
    pub b_exponent: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::fig2()
    }
}

impl ModelParams {
    /// Bistable/oscillatory parameter family: Ωp = 6, Ωc = 4.4, Δp = Δc = 0,
    /// γr = 1e-3, V̄ = −9, b = 2.
    pub fn fig2() -> Self {
        Self {
            omega_p: 6.0,
            omega_c: 4.4,
            delta_p: 0.0,
            delta_c: 0.0,
            gamma_e: 1.0,
            gamma_r: 1e-3,
            v_rr_bar: -9.0,
            b_exponent: 2.0,
        }
    }

    /// Thermal-vapor operating point: Ωp = 6, Ωc = 4, Δp = 0, Δc = −11,
    /// V̄ = +800, with γr and b carried over from [`ModelParams::fig2`].
    pub fn fig3() -> Self {
        Self {
            omega_p: 6.0,
            omega_c: 4.0,
            delta_p: 0.0,
            delta_c: -11.0,
            gamma_e: 1.0,
            gamma_r: 1e-3,
            v_rr_bar: 800.0,
            b_exponent: 2.0,
        }
    }

    pub fn with_delta_c(mut self, delta_c: f64) -> Self {
        self.delta_c = delta_c;
        self
    }

    pub fn with_detunings(mut self, delta_p: f64, delta_c: f64) -> Self {
        self.delta_p = delta_p;
        self.delta_c = delta_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("gamma_e", self.gamma_e),
            ("gamma_r", self.gamma_r),
            ("v_rr_bar", self.v_rr_bar),
            ("b_exponent", self.b_exponent),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParam { field, reason: "must be finite".into() });
            }
        }
        let positive = |field, value: f64| {
            if value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, reason: format!("must be > 0, got {value}") })
            }
        };
        let non_negative = |field, value: f64| {
            if value >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, reason: format!("must be >= 0, got {value}") })
            }
        };
        positive("gamma_e", self.gamma_e)?;
        positive("b_exponent", self.b_exponent)?;
        non_negative("gamma_r", self.gamma_r)?;
        non_negative("omega_p", self.omega_p)?;
        non_negative("omega_c", self.omega_c)?;
        Ok(())
    }
}

/// Mean-field density matrix of one velocity class.
///
/// Only the upper triangle is stored; ρ_eg is read out as the conjugate of ρ_ge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub rho_gg: f64,
    pub rho_ee: f64,
    pub rho_rr: f64,
    pub rho_ge: Complex64,
    pub rho_gr: Complex64,
    pub rho_er: Complex64,
}

impl Default for BlochState {
    fn default() -> Self {
        Self::ground()
    }
}

impl BlochState {
    pub fn ground() -> Self {
        Self {
            rho_gg: 1.0,
            rho_ee: 0.0,
            rho_rr: 0.0,
            rho_ge: Complex64::new(0.0, 0.0),
            rho_gr: Complex64::new(0.0, 0.0),
            rho_er: Complex64::new(0.0, 0.0),
        }
    }

    /// Packed order: [ρgg, ρee, ρrr, Re ρge, Im ρge, Re ρgr, Im ρgr, Re ρer, Im ρer].
    pub fn to_packed(&self) -> [f64; STATE_DIM] {
        [
            self.rho_gg,
            self.rho_ee,
            self.rho_rr,
            self.rho_ge.re,
            self.rho_ge.im,
            self.rho_gr.re,
            self.rho_gr.im,
            self.rho_er.re,
            self.rho_er.im,
        ]
    }

    /// # Panics
    /// If `x` has fewer than [`STATE_DIM`] entries.
    pub fn from_packed(x: &[f64]) -> Self {
        Self {
            rho_gg: x[0],
            rho_ee: x[1],
            rho_rr: x[2],
            rho_ge: Complex64::new(x[3], x[4]),
            rho_gr: Complex64::new(x[5], x[6]),
            rho_er: Complex64::new(x[7], x[8]),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.rho_ee + self.rho_rr
    }

    pub fn rho_eg(&self) -> Complex64 {
        self.rho_ge.conj()
    }

    /// Im ρ_eg = −Im ρ_ge.
    pub fn im_rho_eg(&self) -> f64 {
        -self.rho_ge.im
    }

    pub fn is_finite(&self) -> bool {
        self.to_packed().iter().all(|v| v.is_finite())
    }

    /// Max-norm distance between two packed states.
    pub fn distance(&self, other: &BlochState) -> f64 {
        let a = self.to_packed();
        let b = other.to_packed();
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// Clamps ρrr into [0, 1] before raising it to the power-law exponent.
#[inline]
pub fn clamped_power(rho_rr: f64, b: f64) -> f64 {
    let r = rho_rr.clamp(0.0, 1.0);
    if r == 0.0 {
        0.0
    } else {
        r.powf(b)
    }
}

/// Mean-field shift V̄·ρrr^b of a single class.
pub fn self_shift(state: &BlochState, params: &ModelParams) -> Result<f64> {
    ensure_finite(state.rho_rr, "rho_rr")?;
    ensure_finite(params.v_rr_bar, "v_rr_bar")?;
    ensure_finite(params.b_exponent, "b_exponent")?;
    Ok(params.v_rr_bar * clamped_power(state.rho_rr, params.b_exponent))
}

/// Time derivative of the Bloch state with the mean-field shift supplied by
/// the caller (own ρrr, or an ensemble average).
pub fn bloch_rhs(state: &BlochState, params: &ModelParams, shift: f64) -> Result<BlochState> {
    if !state.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    ensure_finite(shift, "shift")?;
    params.validate()?;
    let mut dx = [0.0; STATE_DIM];
    bloch_rhs_packed(&state.to_packed(), params, shift, &mut dx);
    Ok(BlochState::from_packed(&dx))
}

/// Unchecked kernel of [`bloch_rhs`] on packed slices.
#[inline]
pub fn bloch_rhs_packed(x: &[f64], p: &ModelParams, shift: f64, dx: &mut [f64]) {
    let (gg, ee, rr) = (x[0], x[1], x[2]);
    let ge = Complex64::new(x[3], x[4]);
    let gr = Complex64::new(x[5], x[6]);
    let er = Complex64::new(x[7], x[8]);
    let half_i = Complex64::new(0.0, 0.5);

    let (om_p, om_c) = (p.omega_p, p.omega_c);
    let (g_e, g_r) = (p.gamma_e, p.gamma_r);

    // Populations: only Im ρge and Im ρer drive transfer.
    let pump_e = om_p * ge.im;
    let pump_r = om_c * er.im;
    dx[0] = g_e * ee - pump_e;
    dx[1] = -g_e * ee + g_r * rr + pump_e - pump_r;
    dx[2] = -g_r * rr + pump_r;

    let d_ge = Complex64::new(-0.5 * g_e, -p.delta_p);
    let d_gr = Complex64::new(-0.5 * g_r, -(p.delta_p + p.delta_c + shift));
    let d_er = Complex64::new(-0.5 * (g_e + g_r), -(p.delta_c + shift));

    let dge = d_ge * ge + half_i * (om_p * (gg - ee) + om_c * gr);
    let dgr = d_gr * gr - half_i * (-om_c * ge + om_p * er);
    let der = d_er * er - half_i * (om_p * gr + om_c * (rr - ee));

    dx[3] = dge.re;
    dx[4] = dge.im;
    dx[5] = dgr.re;
    dx[6] = dgr.im;
    dx[7] = der.re;
    dx[8] = der.im;
}

/// Full nonlinear right-hand side with the class's own shift.
#[inline]
pub fn self_consistent_rhs_packed(x: &[f64], p: &ModelParams, dx: &mut [f64]) {
    let shift = p.v_rr_bar * clamped_power(x[2], p.b_exponent);
    bloch_rhs_packed(x, p, shift, dx);
}
