//! Adiabatic sweep of the coupling detuning in both directions; the enclosed
//! area shrinks as the interaction strength goes to zero.
//!
//!     cargo run --release --example hysteresis

use rydsync::fixed_points::{hysteresis_sweep, HysteresisConfig};
use rydsync::{IntegratorConfig, ModelParams};

fn main() -> rydsync::Result<()> {
    let cfg = HysteresisConfig { delta_c_from: 10.0, delta_c_to: -2.0, n_steps: 60, hold_time: 1000.0 };
    let integ = IntegratorConfig::default();
    for v in [-9.0, -4.5, 0.0] {
        let p = ModelParams { v_rr_bar: v, ..ModelParams::fig2() };
        let h = hysteresis_sweep(&p, &cfg, &integ)?;
        println!("V = {v:5.1}: loop area {:.3e}", h.loop_area);
        if v == -9.0 {
            println!("   delta_c  forward  backward  oscillating");
            for i in (0..h.delta_c_grid.len()).step_by(6) {
                println!(
                    "   {:6.2}   {:.4}   {:.4}    {}",
                    h.delta_c_grid[i],
                    h.forward_rho_rr[i],
                    h.backward_rho_rr[i],
                    h.forward_oscillatory[i] || h.backward_oscillatory[i]
                );
            }
        }
    }
    Ok(())
}
