//! Modulus of mean oscillation of logarithmic bumps on the model cube,
//! against the calibrated bound `(c0 / mu) min(1/2, 2^(mu+3) t / l)`.
//!
//! ```text
//! cargo run --release --example bump_profile [subcube|interior]
//! ```

use vmo_extension::bump::{bump_modulus, bump_modulus_bound, bump_sampler, calibrate_c0, model_cube, BumpSpec};
use vmo_extension::oscillation::Mode;

fn main() -> vmo_extension::Result<()> {
    let mode = match std::env::args().nth(1).as_deref() {
        Some("subcube") => Mode::Subcube,
        _ => Mode::Interior,
    };
    let s2 = BumpSpec::new(model_cube(), 2)?;
    let c0 = calibrate_c0(&s2, &bump_modulus(&s2, &bump_sampler(&s2, 0), mode)?);
    println!("mode {mode:?}, c0 = {c0:.4}");
    println!("{:>3} {:>10} {:>10} {:>8} {:>6}", "mu", "max omega", "mu*max", "worst", "ok");
    for mu in 2..=10 {
        let spec = BumpSpec::new(model_cube(), mu)?;
        let curve = bump_modulus(&spec, &bump_sampler(&spec, 0), mode)?;
        let mut worst: f64 = 0.0;
        for (t, v) in curve.present() {
            let b = bump_modulus_bound(&spec, t, c0);
            worst = worst.max(if b > 0.0 { v / b } else { f64::INFINITY });
        }
        println!("{mu:>3} {:>10.5} {:>10.5} {:>8.4} {:>6}", curve.sup(), curve.sup() * mu as f64, worst, worst <= 1.0);
    }
    Ok(())
}
