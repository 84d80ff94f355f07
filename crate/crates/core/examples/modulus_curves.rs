//! Sampled moduli of mean oscillation for the named test functions, with
//! their least concave majorants and a VMO verdict at a small scale.
//!
//! ```text
//! cargo run --release --example modulus_curves -- l-shape
//! ```

use vmo_extension::domain::builtin;
use vmo_extension::field::TestFunction;
use vmo_extension::oscillation::{is_vmo, least_concave_majorant, modulus_pair, DomainRegion, SamplerConfig};

fn main() -> vmo_extension::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "disk".into());
    let d = builtin(&name)?;
    let cfg = SamplerConfig::default();
    let t_small = d.diam() / 64.0;
    for tf in ["coord1", "halfstep", "logdist", "sqrtlogdist", "bump:mu=3"] {
        let tf = TestFunction::parse(tf)?;
        let f = tf.instantiate(d.clone());
        let (sub, int) = modulus_pair(f.as_ref(), &DomainRegion(d.as_ref()), None, &cfg)?;
        let hull = least_concave_majorant(&sub.present());
        let v = is_vmo(&sub, 0.25, t_small);
        println!(
            "{tf} on {name}: {} cubes, vmo proxy {} (expected {})",
            sub.meta.cubes_sampled,
            v.vanishing,
            tf.is_vmo()
        );
        println!("  {:>10} {:>9} {:>9} {:>9}", "t", "subcube", "interior", "majorant");
        for (p, q) in sub.points.iter().zip(&int.points) {
            let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!("  {:>10.5} {:>9} {:>9} {:>9.4}", p.t, show(p.value), show(q.value), hull.value(p.t));
        }
    }
    Ok(())
}
