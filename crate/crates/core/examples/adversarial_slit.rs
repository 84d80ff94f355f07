//! Pairs with large chain distance but small cube distance on the slit disk,
//! and the functions that separate them with bounded norm.
//!
//! ```text
//! cargo run --release --example adversarial_slit -- 6 8
//! ```

use vmo_extension::adversarial::{
    adversarial_bmo, build_adversarial, pair_sampler, random_pairs, uniform_bmo_check, witness_pair,
};
use vmo_extension::domain::builtin;
use vmo_extension::dyadic::d2;
use vmo_extension::metrics::KappaSampler;
use vmo_extension::whitney::decompose;

fn main() -> vmo_extension::Result<()> {
    let levels: Vec<i32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let levels = if levels.is_empty() { vec![6, 8] } else { levels };
    let cfg = pair_sampler(0, 16);

    println!(
        "{:<10} {:>5} {:>5} {:>8} {:>9} {:>8} {:>8}  straddles",
        "domain", "level", "d1", "d2(J)", "sep/d2", "norm", "holds"
    );
    for name in ["disk", "slit-disk"] {
        let d = builtin(name)?;
        for &lv in &levels {
            let dec = decompose(d.as_ref(), lv)?;
            let w = witness_pair(d.as_ref(), &dec, KappaSampler::Exhaustive)?;
            let field = build_adversarial(&dec, w.s1, w.s2)?;
            let (j1, j2) = (field.bump(w.s1).plateau(), field.bump(w.s2).plateau());
            let norm = adversarial_bmo(d.as_ref(), &field, &cfg)?;
            println!(
                "{name:<10} {lv:>5} {:>5} {:>8.3} {:>9.3} {:>8.4} {:>8}  {}",
                w.d1,
                d2(&j1, &j2),
                field.separation_ratio(cfg.m)?,
                norm,
                field.conditions().holds,
                w.straddles
            );
        }
    }

    println!();
    for name in ["disk", "slit-disk"] {
        let d = builtin(name)?;
        let dec = decompose(d.as_ref(), *levels.last().unwrap())?;
        let report = uniform_bmo_check(d.as_ref(), &dec, &random_pairs(&dec, 20, 0), &cfg)?;
        println!(
            "{name:<10} 20 random pairs: norm in [{:.4}, {:.4}], spearman(d1, norm) = {:.3}",
            report.min_norm, report.max_norm, report.spearman
        );
    }
    Ok(())
}
