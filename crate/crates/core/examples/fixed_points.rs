//! Self-consistent steady states and their linear stability at a few
//! coupling detunings.
//!
//!     cargo run --release --example fixed_points

use rydsync::fixed_points::{classify_regime, self_consistency_map};
use rydsync::ModelParams;

fn main() -> rydsync::Result<()> {
    for delta_c in [-10.0, 0.0, 4.1, 10.0] {
        let p = ModelParams::fig2().with_delta_c(delta_c);
        let regime = classify_regime(&p)?;
        println!("delta_c = {delta_c:5.1}: {}", regime.tag.label());
        for fp in &regime.fixed_points {
            println!(
                "    rho_rr = {:.6}  shift = {:8.4}  max Re(lambda) = {:+.3e}  {}  (g = {:.1e})",
                fp.state.rho_rr,
                fp.shift,
                fp.max_real_part,
                if fp.stable { "stable" } else { "unstable" },
                self_consistency_map(&p, fp.state.rho_rr)?,
            );
        }
    }
    Ok(())
}
