//! Transmission frequencies of both geometries across the coupling detuning
//! and the resulting contrast ratio.
//!
//!     cargo run --release --example nonreciprocity -- [from] [to] [n]

use rydsync::runner::{nonreciprocity, ScanAxis, Scenario};

fn main() -> rydsync::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric arguments")).collect();
    let (from, to, n) = match args[..] {
        [a, b, n] => (a, b, n as usize),
        _ => (-14.0, -8.0, 4),
    };
    let mut s = Scenario::fig3();
    s.scan = Some(ScanAxis::delta_c(from, to, n));
    let scan = nonreciprocity(&s)?;
    println!("delta_c   f_cou    amp_cou    f_co     amp_co    eta");
    for p in &scan.points {
        let (Ok(cou), Ok(co)) = (&p.counter, &p.co) else {
            println!("{:7.2}   failed", p.value);
            continue;
        };
        let eta = p.contrast().map(|c| c.eta.to_string()).unwrap_or_default();
        println!(
            "{:7.2}  {:.4}  {:.2e}  {:.4}  {:.2e}  {eta}",
            p.value, cou.frequency, cou.amplitude, co.frequency, co.amplitude
        );
    }
    Ok(())
}
