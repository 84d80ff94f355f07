use std::sync::OnceLock;

use proptest::prelude::*;

use vmo_extension::adversarial::build_adversarial;
use vmo_extension::bump::{model_cube, BumpSpec};
use vmo_extension::domain::{builtin, contains_cube, DomainOracle};
use vmo_extension::dyadic::{concentric_subcube, d2, dist, touches, Box, DyadicCube, Metric};
use vmo_extension::extension::build;
use vmo_extension::field::{Affine1, Combination, Field, FnField};
use vmo_extension::metrics::d1_from;
use vmo_extension::oscillation::{double_oscillation, least_concave_majorant, mean_oscillation, truncate};
use vmo_extension::whitney::{decompose, WhitneyDecomposition};

fn disk_dec() -> &'static (std::sync::Arc<dyn DomainOracle>, WhitneyDecomposition) {
    static CELL: OnceLock<(std::sync::Arc<dyn DomainOracle>, WhitneyDecomposition)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = builtin("disk").unwrap();
        let dec = decompose(d.as_ref(), 6).unwrap();
        (d, dec)
    })
}

fn slit_dec() -> &'static (std::sync::Arc<dyn DomainOracle>, WhitneyDecomposition) {
    static CELL: OnceLock<(std::sync::Arc<dyn DomainOracle>, WhitneyDecomposition)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = builtin("slit-disk").unwrap();
        let dec = decompose(d.as_ref(), 6).unwrap();
        (d, dec)
    })
}

fn cube() -> impl Strategy<Value = DyadicCube> {
    (0i32..5, -8i64..8, -8i64..8).prop_map(|(l, x, y)| DyadicCube::new(l, [x, y]))
}

fn small_box() -> impl Strategy<Value = Box> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.01..2.0f64).prop_map(|(x, y, s)| Box { lower: [x, y], side: s })
}

/// Closures meet, checked with rationals scaled to a common level.
fn meets_oracle(a: &DyadicCube, b: &DyadicCube) -> bool {
    let scale = |q: &DyadicCube| 1i64 << (8 - q.level);
    (0..2).all(|k| {
        let (a0, a1) = (a.coords[k] * scale(a), (a.coords[k] + 1) * scale(a));
        let (b0, b1) = (b.coords[k] * scale(b), (b.coords[k] + 1) * scale(b));
        a0 <= b1 && b0 <= a1
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn touches_is_symmetric_and_matches_oracle(a in cube(), b in cube()) {
        prop_assert_eq!(touches(&a, &b), touches(&b, &a));
        prop_assert_eq!(touches(&a, &b), a != b && meets_oracle(&a, &b));
    }

    #[test]
    fn parent_contains_children(a in cube()) {
        for c in a.children() {
            prop_assert_eq!(c.parent(), a);
            prop_assert!(a.contains(&c));
            prop_assert!(touches(&a, &c));
        }
    }

    #[test]
    fn cube_distance_is_symmetric(a in small_box(), b in small_box()) {
        for m in [Metric::L2, Metric::Linf] {
            prop_assert_eq!(dist(&a, &b, m), dist(&b, &a, m));
            prop_assert!(dist(&a, &b, Metric::Linf) <= dist(&a, &b, Metric::L2) + 1e-15);
        }
        prop_assert_eq!(dist(&a, &b, Metric::L2) == 0.0, a.intersects(&b));
        prop_assert!((d2(&a, &b) - d2(&b, &a)).abs() < 1e-12);
        prop_assert!(d2(&a, &b) >= 1.0 - 1e-12);
    }

    #[test]
    fn concentric_keeps_centre(a in small_box(), f in 0.05..3.0f64) {
        let c = concentric_subcube(&a, f).unwrap();
        let (p, q) = (a.center(), c.center());
        prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        prop_assert!((c.side - f * a.side).abs() < 1e-12);
    }

    #[test]
    fn contained_cubes_have_contained_corners(b in small_box(), name in prop::sample::select(vec!["disk", "l-shape", "slit-disk", "annulus-sector", "comb"])) {
        let d = builtin(name).unwrap();
        if contains_cube(d.as_ref(), &b) {
            prop_assert!(b.corners().iter().all(|c| d.contains(c)));
            prop_assert!(d.contains(&b.center()));
        }
    }

    #[test]
    fn boundary_distance_is_one_lipschitz(x in -1.2..1.2f64, y in -1.2..1.2f64, dx in -0.1..0.1f64, dy in -0.1..0.1f64) {
        let d = builtin("slit-disk").unwrap();
        let (p, q) = ([x, y], [x + dx, y + dy]);
        let (a, b) = (d.dist_to_boundary(&p), d.dist_to_boundary(&q));
        prop_assert!(a.lo <= a.hi);
        prop_assert!((a.lo - b.lo).abs() <= (dx * dx + dy * dy).sqrt() + 1e-12);
    }

    #[test]
    fn located_cube_contains_point(x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let (d, dec) = disk_dec();
        if let Some(i) = dec.locate_e(&[x, y]) {
            prop_assert!(dec.box_e(i).contains_point(&[x, y]));
            prop_assert!(d.contains(&[x, y]));
        }
        if let Some(i) = dec.locate_eprime(&[x, y]) {
            prop_assert!(dec.box_eprime(i).contains_point(&[x, y]));
        }
    }

    #[test]
    fn chain_distance_is_a_metric(i in 0usize..10_000, j in 0usize..10_000, k in 0usize..10_000) {
        let (_, dec) = slit_dec();
        let n = dec.cubes_e.len();
        let (i, j, k) = (i % n, j % n, k % n);
        let (di, dj) = (d1_from(dec, i).unwrap(), d1_from(dec, j).unwrap());
        prop_assert_eq!(di[j], dj[i]);
        prop_assert!(di[k] <= di[j] + dj[k]);
        // neighbours differ by at most two levels
        let levels = (dec.side_e(i) / dec.side_e(j)).log2().abs();
        prop_assert!(di[j] as f64 >= levels / 2.0);
    }

    #[test]
    fn oscillation_identities(a in -3.0..3.0f64, c in -5.0..5.0f64, k in 1.0..20.0f64, b in small_box()) {
        let f = FnField(move |x: &[f64; 2]| (k * x[0]).sin() + x[1] * x[1]);
        let g = Combination { a, f: &f, b: c, g: FnField(|_: &[f64; 2]| 1.0) };
        let m = 8;
        let of = mean_oscillation(&f, &b, m).unwrap();
        let og = mean_oscillation(&g, &b, m).unwrap();
        prop_assert!((og - a.abs() * of).abs() <= 1e-9 * (1.0 + of));
        let dbl = double_oscillation(&f, &b, m).unwrap();
        prop_assert!(of <= dbl + 1e-12 && dbl <= 2.0 * of + 1e-12);
    }

    #[test]
    fn truncation_never_raises_double_oscillation(lo in -1.5..0.5f64, w in 0.0..2.0f64, b in small_box()) {
        let f = FnField(|x: &[f64; 2]| (3.0 * x[0]).sin() * x[1]);
        let t = truncate(&f, lo, lo + w).unwrap();
        prop_assert!(double_oscillation(&t, &b, 8).unwrap() <= double_oscillation(&f, &b, 8).unwrap() + 1e-12);
    }

    #[test]
    fn majorant_properties(pts in prop::collection::vec((0.001..10.0f64, 0.0..5.0f64), 1..100)) {
        let m = least_concave_majorant(&pts);
        for &(t, v) in &pts {
            prop_assert!(m.value(t) >= v - 1e-12);
        }
        let sup = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        prop_assert_eq!(m.sup(), sup);
        for w in m.vertices.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s2 <= s1 + 1e-12);
        }
        for w in m.vertices.windows(2) {
            prop_assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn bump_is_between_zero_and_one(mu in 1u32..15, x in -2.5..2.5f64, y in -2.5..2.5f64) {
        let s = BumpSpec::new(model_cube(), mu).unwrap();
        let v = s.value(&[x, y]);
        prop_assert!((0.0..=1.0).contains(&v));
        let j = s.plateau();
        if j.contains_point(&[x, y]) {
            prop_assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn extension_is_linear_and_restricts(a in -2.0..2.0f64, b in -2.0..2.0f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let (d, dec) = disk_dec();
        let f = Affine1 { axis: 0, offset: 0.0, slope: 1.0 };
        let g = FnField(|p: &[f64; 2]| p[1] * p[1]);
        let h = Combination { a, f: &f, b, g: &g };
        let (of, og, oh) = (build(&f, dec).unwrap(), build(&g, dec).unwrap(), build(&h, dec).unwrap());
        for i in (0..dec.cubes_eprime.len()).step_by(17) {
            let want = a * of.lambdas[i] + b * og.lambdas[i];
            prop_assert!((oh.lambdas[i] - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
        let p = [x, y];
        if d.contains(&p) {
            prop_assert_eq!(oh.evaluate(d.as_ref(), dec, &h, &p), h.eval(&p) - oh.base_constant);
        }
    }

    #[test]
    fn adversarial_hypotheses_hold(i in 0usize..10_000, j in 0usize..10_000) {
        let (_, dec) = slit_dec();
        let n = dec.cubes_e.len();
        let field = build_adversarial(dec, i % n, j % n).unwrap();
        let c = field.conditions();
        prop_assert!(c.holds, "{:?}", c);
        prop_assert!((field.separation(4).unwrap() - field.d1() as f64).abs() < 1e-9);
    }
}
