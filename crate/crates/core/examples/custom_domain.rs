//! Domains beyond the built-ins: a cardioid given only by a membership test,
//! and a dilated copy of the L-shape. Both go through the same pipeline.
//!
//! ```text
//! cargo run --release --example custom_domain -- 7
//! ```

use std::sync::Arc;

use vmo_extension::domain::{builtin, AffineDomain, DomainOracle, MembershipDomain};
use vmo_extension::dyadic::Box;
use vmo_extension::extension::{build, hypothesis_report};
use vmo_extension::field::Affine1;
use vmo_extension::metrics::{estimate_kappa, KappaSampler};
use vmo_extension::whitney::decompose;

fn cardioid(p: &[f64; 2]) -> bool {
    // r < 1 - cos(theta), shifted so the cusp sits at (0.5, 0)
    let (x, y) = (p[0] - 0.5, p[1]);
    let r2 = x * x + y * y;
    (r2 + x) * (r2 + x) < r2
}

fn main() -> vmo_extension::Result<()> {
    let level: i32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let bbox = Box::new([-4.0, -4.0], 8.0)?;
    let domains: Vec<Arc<dyn DomainOracle>> = vec![
        Arc::new(MembershipDomain::new("cardioid", cardioid, bbox, 2048)?),
        Arc::new(AffineDomain::new(builtin("l-shape")?, 1.5, [0.25, -0.5])?),
    ];
    let f = Affine1 { axis: 1, offset: 0.0, slope: 1.0 };
    for d in &domains {
        let dec = decompose(d.as_ref(), level)?;
        let a = dec.audit(d.as_ref());
        let k = estimate_kappa(&dec, KappaSampler::default())?;
        let op = build(&f, &dec)?;
        let h = hypothesis_report(d.as_ref(), &dec, &op, &f)?;
        println!(
            "{:<26} area {:.4} |E| {:>5} |E'| {:>5} residual {:.2}% kappa {:.3}",
            d.name(),
            d.area(),
            a.e_count,
            a.eprime_count,
            100.0 * a.residual_fraction,
            k.kappa_hat
        );
        println!(
            "{:<26} mu bound {} mu gap {} lambda/mu trend {} margin {:.4}",
            "",
            h.mu_lower_bound,
            h.max_adjacent_mu_gap,
            h.lambda_over_mu.nonincreasing,
            op.support_margin(&dec).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
