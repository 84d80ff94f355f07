//! Clamping a function never raises its mean oscillation by more than the
//! quadrature error. Compares the modulus of `log2 dist` with its
//! truncations.
//!
//! ```text
//! cargo run --release --example truncation
//! ```

use vmo_extension::domain::builtin;
use vmo_extension::field::TestFunction;
use vmo_extension::oscillation::{modulus, truncate, DomainRegion, Mode, SamplerConfig};

fn main() -> vmo_extension::Result<()> {
    let d = builtin("disk")?;
    let region = DomainRegion(d.as_ref());
    let cfg = SamplerConfig { grid_cap: 512, band_cap: 512, ..SamplerConfig::default() };
    let log = TestFunction::LogDist.instantiate(d.clone());
    let windows = [(-8.0, 0.0), (-4.0, -1.0), (-2.0, -1.5)];
    let full = modulus(log.as_ref(), &region, None, &cfg, Mode::Subcube)?;
    let mut cols = Vec::new();
    for (lo, hi) in windows {
        cols.push(modulus(&truncate(log.clone(), lo, hi)?, &region, None, &cfg, Mode::Subcube)?);
    }
    print!("{:>9} {:>8}", "t", "full");
    for (lo, hi) in windows {
        print!(" {:>12}", format!("[{lo},{hi}]"));
    }
    println!();
    for (k, p) in full.points.iter().enumerate() {
        print!("{:>9.4} {:>8.4}", p.t, p.value.unwrap_or(0.0));
        for c in &cols {
            print!(" {:>12.4}", c.points[k].value.unwrap_or(0.0));
        }
        println!();
    }
    Ok(())
}
