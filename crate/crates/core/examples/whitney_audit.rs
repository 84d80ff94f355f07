//! Decompose every built-in domain and print the Whitney invariant audit.
//!
//! ```text
//! cargo run --release --example whitney_audit -- 8
//! ```

use std::time::Instant;

use vmo_extension::domain::{builtin, BUILTIN_NAMES};
use vmo_extension::whitney::decompose;

fn main() -> vmo_extension::Result<()> {
    let level: i32 = std::env::args().nth(1).map(|s| s.parse().expect("level")).unwrap_or(6);
    println!("{:<15} {:>6} {:>6} {:>8} {:>7} {:>9} clean", "domain", "|E|", "|E'|", "L", "flagged", "residual");
    for name in BUILTIN_NAMES {
        let d = builtin(name)?;
        let t = Instant::now();
        let w = decompose(d.as_ref(), level)?;
        let a = w.audit(d.as_ref());
        println!(
            "{:<15} {:>6} {:>6} {:>8.4} {:>7} {:>8.3}% {} ({:.2?})",
            name,
            a.e_count,
            a.eprime_count,
            w.big_l,
            a.boundary_flagged,
            100.0 * a.residual_fraction,
            a.is_clean(),
            t.elapsed()
        );
    }
    Ok(())
}
