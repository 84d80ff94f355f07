//! Checks against independent, deliberately naive reimplementations.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vmo_extension::domain::{builtin, contains_cube, DomainOracle};
use vmo_extension::dyadic::{dist, Box, Metric};
use vmo_extension::field::{Affine1, TestFunction};
use vmo_extension::metrics::{check_chain_average_bound, d1, estimate_kappa, KappaSampler};
use vmo_extension::oscillation::{modulus, truncate, DomainRegion, Mode, SamplerConfig};
use vmo_extension::whitney::decompose;

mod common;
use common::floyd_warshall;

fn sample_in(rng: &mut ChaCha8Rng, b: &Box) -> [f64; 2] {
    [b.lower[0] + rng.gen::<f64>() * b.side, b.lower[1] + rng.gen::<f64>() * b.side]
}

#[test]
fn slit_distance_matches_boundary_cloud() {
    let d = builtin("slit-disk").unwrap();
    // boundary: unit circle and the segment [0,1] x {0}
    let n = 1_000_000;
    let cloud: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            if k % 2 == 0 {
                let th = 2.0 * PI * k as f64 / n as f64;
                [th.cos(), th.sin()]
            } else {
                [k as f64 / n as f64, 0.0]
            }
        })
        .collect();
    let spacing = 2.0 * PI / (n as f64 / 2.0);
    let s = Box { lower: [0.4, 0.03], side: 0.02 };
    let corners = s.corners();
    let brute = cloud
        .iter()
        .map(|p| {
            let q = Box { lower: *p, side: 0.0 };
            dist(&s, &q, Metric::L2)
        })
        .fold(f64::INFINITY, f64::min);
    let iv = vmo_extension::domain::dist_cube_to_complement(d.as_ref(), &s).unwrap();
    assert!((iv.lo - brute).abs() <= spacing, "{} vs {brute}", iv.lo);
    assert!((iv.lo - 0.03).abs() < 1e-12);
    assert!(corners.iter().all(|c| d.contains(c)));
}

#[test]
fn slit_crossing_cube_is_rejected_by_sampling() {
    let d = builtin("slit-disk").unwrap();
    let s = Box { lower: [0.3, -0.05], side: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // the slit is measure zero; probe the segment itself
    let on_slit = (0..1000).any(|_| {
        let x = [s.lower[0] + rng.gen::<f64>() * s.side, 0.0];
        !d.contains(&x)
    });
    assert!(on_slit);
    assert!(!contains_cube(d.as_ref(), &s));
}

fn disk_dist(b: &Box) -> f64 {
    let far = b.corners().iter().map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt()).fold(0.0, f64::max);
    1.0 - far
}

#[test]
fn disk_whitney_invariants_by_exhaustive_scan() {
    let d = builtin("disk").unwrap();
    let dec = decompose(d.as_ref(), 6).unwrap();
    for i in 0..dec.cubes_e.len() {
        let b = dec.box_e(i);
        let dd = disk_dist(&b);
        assert!(SQRT_2 * b.side <= dd + 1e-12 && dd <= 4.0 * SQRT_2 * b.side, "cube {i}");
    }
    // brute-force touching scan
    let n = dec.cubes_e.len();
    let mut touching = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (dec.box_e(i), dec.box_e(j));
            if dist(&a, &b, Metric::Linf) == 0.0 {
                touching += 1;
                let r = a.side / b.side;
                assert!((0.25..=4.0).contains(&r));
                assert!(dec.adjacency_e.neighbors(i).contains(&j));
            }
        }
    }
    assert_eq!(touching, dec.adjacency_e.edge_count());
}

#[test]
fn square_rings() {
    let d = builtin("square").unwrap();
    let dec = decompose(d.as_ref(), 6).unwrap();
    let audit = dec.audit(d.as_ref());
    assert!(audit.is_clean(), "{audit:?}");
    // concentric rings: side depends only on the distance to the boundary
    for i in 0..dec.cubes_e.len() {
        for j in 0..dec.cubes_e.len() {
            if dec.dist_e[i].lo == dec.dist_e[j].lo {
                assert_eq!(dec.side_e(i), dec.side_e(j));
            }
        }
    }
}

#[test]
fn residual_decays_on_disk() {
    let d = builtin("disk").unwrap();
    let r: Vec<f64> = (6..=8).map(|l| decompose(d.as_ref(), l).unwrap().residual_measure).collect();
    for w in r.windows(2) {
        assert!(w[1] / w[0] <= 0.6, "{r:?}");
    }
}

#[test]
fn matching_sandwich_and_distance() {
    for name in ["disk", "square"] {
        let d = builtin(name).unwrap();
        let dec = decompose(d.as_ref(), 6).unwrap();
        let kappa = estimate_kappa(&dec, KappaSampler::Exhaustive).unwrap().kappa_hat;
        for (i, &s) in dec.matching.iter().enumerate() {
            let (lp, l) = (dec.side_eprime(i), dec.side_e(s));
            assert!(lp <= l && l <= 2.0 * lp, "{name} {i}");
            let gap = dist(&dec.box_e(s), &dec.box_eprime(i), Metric::L2);
            assert!(gap <= 65.0 * kappa * kappa * lp);
            // nearest among all admissible E cubes, ties to the smaller index
            let best = (0..dec.cubes_e.len())
                .filter(|&j| dec.side_e(j) >= lp)
                .map(|j| (dist(&dec.box_e(j), &dec.box_eprime(i), Metric::L2), j))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap();
            assert_eq!(best.0, gap);
        }
        let again = decompose(d.as_ref(), 6).unwrap();
        assert_eq!(dec.matching, again.matching);
    }
}

#[test]
fn omega_tilde_flags() {
    for name in ["disk", "square", "l-shape", "slit-disk"] {
        let d = builtin(name).unwrap();
        let dec = decompose(d.as_ref(), 6).unwrap();
        let flagged = dec.omega_tilde_boundary();
        assert!(!flagged.is_empty());
        for i in flagged {
            let l = dec.side_eprime(i);
            assert!(dec.big_l / 2.0 <= l && l <= dec.big_l, "{name}");
        }
    }
}

#[test]
fn bfs_matches_floyd_warshall() {
    let d = builtin("disk").unwrap();
    let dec = decompose(d.as_ref(), 6).unwrap();
    let n = dec.cubes_e.len();
    assert!(n <= 2000);
    let fw = floyd_warshall(&dec);
    // antipodal boundary-layer cubes
    let finest = (0..n).map(|i| dec.side_e(i)).fold(f64::INFINITY, f64::min);
    let far = |x: f64| {
        (0..n)
            .filter(|&i| dec.side_e(i) == finest)
            .min_by(|&a, &b| (dec.box_e(a).center()[0] - x).abs().total_cmp(&(dec.box_e(b).center()[0] - x).abs()))
    };
    if let (Some(a), Some(b)) = (far(-1.0), far(1.0)) {
        assert_eq!(d1(&dec, a, b).unwrap().length as u16, fw[a * n + b]);
    }
    for i in (0..n).step_by(37) {
        for j in (0..n).step_by(11) {
            assert_eq!(d1(&dec, i, j).unwrap().length as u16, fw[i * n + j]);
        }
    }
}

#[test]
fn chain_bound_constant_is_stable() {
    let d = builtin("disk").unwrap();
    let f = Affine1 { axis: 0, offset: 0.0, slope: 1.0 };
    let cfg = SamplerConfig { grid_cap: 512, band_cap: 512, ..SamplerConfig::default() };
    let curve = modulus(&f, &DomainRegion(d.as_ref()), None, &cfg, Mode::Subcube).unwrap();
    // the same 50 point pairs at both resolutions, each point in the cube
    // containing it
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut point = || loop {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if d.dist_to_boundary(&x).lo > 0.05 && d.contains(&x) {
            return x;
        }
    };
    let points: Vec<([f64; 2], [f64; 2])> = (0..50).map(|_| (point(), point())).collect();
    let mut constants = Vec::new();
    for level in [6, 8] {
        let dec = decompose(d.as_ref(), level).unwrap();
        let pairs: Vec<(usize, usize)> =
            points.iter().map(|(a, b)| (dec.locate_e(a).unwrap(), dec.locate_e(b).unwrap())).collect();
        let r = check_chain_average_bound(&dec, &f, &curve, &pairs, 16).unwrap();
        constants.push(r.max_chain_constant.expect("finite"));
    }
    let change = (constants[1] - constants[0]).abs() / constants[0];
    assert!(change <= 0.3, "{constants:?}");
}

#[test]
fn nested_bound_for_log_distance() {
    let d = builtin("disk").unwrap();
    let f = TestFunction::LogDist.instantiate(d.clone());
    let cfg = SamplerConfig { grid_cap: 512, band_cap: 512, ..SamplerConfig::default() };
    let curve = modulus(f.as_ref(), &DomainRegion(d.as_ref()), None, &cfg, Mode::Subcube).unwrap();
    let dec = decompose(d.as_ref(), 6).unwrap();
    let pairs: Vec<(usize, usize)> = (0..dec.cubes_e.len()).step_by(13).map(|i| (i, i)).collect();
    let r = check_chain_average_bound(&dec, f.as_ref(), &curve, &pairs, 16).unwrap();
    let c = r.max_nested_constant.expect("finite");
    assert!(c.is_finite() && c < 10.0, "{c}");
}

#[test]
fn log_distance_plateaus_and_sqrt_log_decays() {
    let d = builtin("disk").unwrap();
    let cfg = SamplerConfig::default();
    let region = DomainRegion(d.as_ref());
    let log = TestFunction::LogDist.instantiate(d.clone());
    let c = modulus(log.as_ref(), &region, None, &cfg, Mode::Interior).unwrap();
    let small: Vec<f64> = c.points.iter().take(4).filter_map(|p| p.value).collect();
    let top = c.sup();
    assert!(small.iter().all(|&v| v >= 0.5 * top), "{small:?} vs {top}");

    let sq = TestFunction::SqrtLogDist.instantiate(d.clone());
    let c = modulus(sq.as_ref(), &region, None, &cfg, Mode::Subcube).unwrap();
    let vals: Vec<f64> = c.present().iter().map(|p| p.1).collect();
    // decay is only like 1 / sqrt(log(1 / t))
    assert!(vals[0] < 0.9 * vals[vals.len() - 1], "{vals:?}");
}

#[test]
fn truncation_lowers_the_curve() {
    let d = builtin("disk").unwrap();
    let cfg = SamplerConfig { grid_cap: 512, band_cap: 512, ..SamplerConfig::default() };
    let region = DomainRegion(d.as_ref());
    let log = TestFunction::LogDist.instantiate(d.clone());
    let full = modulus(log.as_ref(), &region, None, &cfg, Mode::Subcube).unwrap();
    for (lo, hi) in [(0.0, 1.0), (-3.0, -1.0), (-6.0, 0.0)] {
        let t = truncate(log.clone(), lo, hi).unwrap();
        let cut = modulus(&t, &region, None, &cfg, Mode::Subcube).unwrap();
        for (a, b) in cut.points.iter().zip(&full.points) {
            assert!(a.value.unwrap_or(0.0) <= b.value.unwrap_or(0.0) + 1e-12, "[{lo}, {hi}] at t = {}", a.t);
        }
    }
}

#[test]
fn membership_sampling_agrees_on_disk_cubes() {
    let d: std::sync::Arc<dyn DomainOracle> = builtin("disk").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let c = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
        let b = Box::centered(c, rng.gen_range(0.01..0.3));
        let all_in =
            (0..400).all(|_| d.contains(&sample_in(&mut rng, &b))) && b.corners().iter().all(|p| d.contains(p));
        if contains_cube(d.as_ref(), &b) {
            assert!(all_in);
        } else {
            // excluded cubes really poke out: some corner is outside
            assert!(b.corners().iter().any(|p| p[0] * p[0] + p[1] * p[1] >= 1.0));
        }
    }
}
