//! Extends test functions from a domain to the plane and compares BMO norms
//! and moduli of mean oscillation before and after.
//!
//! ```text
//! cargo run --release --example extend_disk -- disk 6 8
//! ```

use vmo_extension::domain::builtin;
use vmo_extension::extension::{box_modulus, build_with, eval_box, BuildOptions};
use vmo_extension::field::TestFunction;
use vmo_extension::oscillation::{bmo_norm, DomainRegion, SamplerConfig};
use vmo_extension::whitney::decompose;

fn main() -> vmo_extension::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map(String::as_str).unwrap_or("disk");
    let levels: Vec<i32> = args.iter().skip(1).filter_map(|a| a.parse().ok()).collect();
    let levels = if levels.is_empty() { vec![6, 8] } else { levels };
    let d = builtin(name)?;
    let cfg = SamplerConfig::default();
    println!(
        "{:<12} {:>5} {:>9} {:>9} {:>8} {:>9} {:>10}",
        "function", "level", "|f|", "|F|", "ratio", "tail", "w(t/64)/w"
    );
    for &lv in &levels {
        let dec = decompose(d.as_ref(), lv)?;
        let diam = eval_box(&dec).diam();
        let t: Vec<f64> = (0..=12).rev().map(|k| diam * 2f64.powi(-k)).collect();
        for tf in [TestFunction::Coord1, TestFunction::HalfStep, TestFunction::SqrtLogDist] {
            let f = tf.instantiate(d.clone());
            let op = build_with(f.as_ref(), &dec, BuildOptions::default())?;
            let nf = bmo_norm(f.as_ref(), &DomainRegion(d.as_ref()), &cfg)?;
            let bn = box_modulus(d.as_ref(), &dec, &op, f.as_ref(), &cfg, Some(&t))?;
            let ratio = bn.curve.value_at(diam / 64.0).unwrap_or(0.0) / bn.curve.value_at(diam).unwrap_or(f64::NAN);
            println!(
                "{:<12} {lv:>5} {nf:>9.4} {:>9.4} {:>8.4} {:>9.2e} {ratio:>10.4}",
                tf.to_string(),
                bn.bmo,
                bn.bmo / nf,
                bn.tail_bound
            );
        }
    }
    Ok(())
}
