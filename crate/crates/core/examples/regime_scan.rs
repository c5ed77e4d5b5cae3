//! Regime partition along the coupling detuning, in parallel.
//!
//!     cargo run --release --example regime_scan

use rydsync::fixed_points::{regime_windows, scan_regimes, DEFAULT_GRID_N};
use rydsync::ModelParams;

fn main() -> rydsync::Result<()> {
    let deltas: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
    let tags = scan_regimes(&ModelParams::fig2(), &deltas, DEFAULT_GRID_N)
        .into_iter()
        .map(|r| r.map(|r| r.tag))
        .collect::<rydsync::Result<Vec<_>>>()?;
    for (first, last, tag) in regime_windows(&tags) {
        println!("[{:6.2}, {:6.2}]  {}", deltas[first], deltas[last], tag.label());
    }
    Ok(())
}
