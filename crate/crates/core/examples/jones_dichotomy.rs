//! Sampled Jones constants across resolutions: bounded on uniform domains,
//! growing on the slit disk.
//!
//! ```text
//! cargo run --release --example jones_dichotomy -- 6 8
//! ```

use vmo_extension::domain::builtin;
use vmo_extension::metrics::{estimate_kappa, KappaSampler};
use vmo_extension::whitney::decompose;

fn main() -> vmo_extension::Result<()> {
    let levels: Vec<i32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let levels = if levels.is_empty() { vec![6, 8] } else { levels };
    println!("{:<16} {:>5} {:>8} {:>6} {:>8}  witness", "domain", "level", "kappa", "d1", "d2");
    for name in ["square", "disk", "l-shape", "slit-disk"] {
        let d = builtin(name)?;
        for &lv in &levels {
            let dec = decompose(d.as_ref(), lv)?;
            let sampler =
                if std::env::var("EXHAUSTIVE").is_ok() { KappaSampler::Exhaustive } else { KappaSampler::default() };
            let k = estimate_kappa(&dec, sampler)?;
            let (a, b) = (dec.box_e(k.argmax.i).center(), dec.box_e(k.argmax.j).center());
            println!(
                "{name:<16} {lv:>5} {:>8.3} {:>6} {:>8.3}  ({:.3}, {:.3}) - ({:.3}, {:.3})",
                k.kappa_hat, k.argmax.d1, k.argmax.d2, a[0], a[1], b[0], b[1]
            );
        }
    }
    Ok(())
}
