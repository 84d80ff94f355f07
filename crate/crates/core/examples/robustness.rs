//! How much the extension depends on the choices made while building it:
//! the matching tie-break and the base cube `S_L`.
//!
//! ```text
//! cargo run --release --example robustness -- l-shape 6
//! ```

use vmo_extension::domain::builtin;
use vmo_extension::extension::robustness_report;
use vmo_extension::field::TestFunction;
use vmo_extension::oscillation::{modulus, DomainRegion, Mode, SamplerConfig};
use vmo_extension::whitney::decompose;

fn main() -> vmo_extension::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map(String::as_str).unwrap_or("disk");
    let level: i32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let d = builtin(name)?;
    let dec = decompose(d.as_ref(), level)?;
    let cfg = SamplerConfig { grid_cap: 512, band_cap: 512, ..SamplerConfig::default() };
    for tf in [TestFunction::Coord1, TestFunction::SqrtLogDist, TestFunction::HalfStep] {
        let f = tf.instantiate(d.clone());
        let curve = modulus(f.as_ref(), &DomainRegion(d.as_ref()), None, &cfg, Mode::Subcube)?;
        let r = robustness_report(d.as_ref(), &dec, f.as_ref(), &curve, &cfg)?;
        println!("{tf}: {}", serde_json::to_string_pretty(&r).expect("plain data"));
    }
    Ok(())
}
