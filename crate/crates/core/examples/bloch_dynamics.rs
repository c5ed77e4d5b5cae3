//! Time evolution of one class with the self-consistent shift: the
//! oscillatory parameter set settles onto a limit cycle in ρ_rr.
//!
//!     cargo run --release --example bloch_dynamics -- [delta_c]

use rydsync::model::{integrate, self_consistent_rhs_packed};
use rydsync::signal::dominant_frequency;
use rydsync::{BlochState, IntegratorConfig, ModelParams};

fn main() -> rydsync::Result<()> {
    let delta_c = std::env::args().nth(1).map_or(0.0, |s| s.parse().expect("delta_c must be a number"));
    let p = ModelParams::fig2().with_delta_c(delta_c);
    let cfg = IntegratorConfig { t_end: 2000.0, ..IntegratorConfig::default() };

    let tr = integrate(|_, x, dx| self_consistent_rhs_packed(x, &p, dx), &BlochState::ground().to_packed(), &cfg)?;
    let rho_rr = tr.component(2);

    println!("   t      rho_rr   trace");
    for i in (0..tr.len()).step_by(tr.len() / 20) {
        let s = BlochState::from_packed(tr.sample(i));
        println!("{:6.0}  {:.5}  {:.12}", tr.times[i], s.rho_rr, s.trace());
    }
    let spec = dominant_frequency(&rho_rr, tr.dt(), 0.75 * cfg.t_end, 1e-3)?;
    if spec.is_oscillatory {
        println!("limit cycle: f = {:.4} gamma, amplitude {:.3}", spec.frequency, spec.amplitude);
    } else {
        println!("steady: amplitude {:.1e} below threshold", spec.amplitude);
    }
    Ok(())
}
