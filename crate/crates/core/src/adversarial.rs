//! Test functions that defeat bounded extension on non-uniform domains.
//!
//! For interior Whitney cubes `S1`, `S2` with `A = d1(S1, S2)` and
//! `B_i = d1(S1, S_i)`:
//!
//! ```text
//! phi(x) = lambda_i psi^{mu_i}_{S_i}(x)     x in S_i
//! lambda_i = delta((1 + A) / (1 + B_i)) B_i,   mu_i = 1 + B_i
//! ```
//!
//! with `delta` a fixed smoothstep vanishing below `1/2` and equal to `1`
//! above `1`. Its BMO norm is bounded independently of the pair, while its
//! averages on the plateaus of `S1` and `S2` differ by exactly `A`. Any
//! bounded extension would then force `d1 <= C d2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{probe_cubes, BumpSpec};
use crate::domain::{contains_cube, DomainOracle};
use crate::dyadic::{self, Box, Point};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::metrics::{d1_from, estimate_kappa, KappaSampler};
use crate::oscillation::{bmo_norm, cube_average, OscillationRegion, SamplerConfig};
use crate::whitney::WhitneyDecomposition;

/// Smoothstep on `[1/2, 1]`: `u = clamp(2t - 1, 0, 1)`, `u^2 (3 - 2u)`.
pub fn cutoff_delta(t: f64) -> f64 {
    let u = (2.0 * t - 1.0).clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// `sup |delta|`.
pub const DELTA_SUP: f64 = 1.0;
/// `sup |delta'|`, attained at `t = 3/4`.
pub const DELTA_PRIME_SUP: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct AdversarialField<'a> {
    pub dec: &'a WhitneyDecomposition,
    pub s1: usize,
    pub s2: usize,
    /// `d1(S1, S_i)` for every `E` cube.
    pub chain_dist: Vec<u32>,
    pub lambdas: Vec<f64>,
    pub mus: Vec<u32>,
}

pub fn build_adversarial(dec: &WhitneyDecomposition, s1: usize, s2: usize) -> Result<AdversarialField<'_>> {
    let n = dec.cubes_e.len();
    if s1 >= n || s2 >= n {
        return Err(Error::Usage(format!("E indices ({s1}, {s2}) out of range (have {n})")));
    }
    let chain_dist = d1_from(dec, s1)?;
    let a = chain_dist[s2] as f64;
    let lambdas = chain_dist
        .iter()
        .map(|&b| {
            let b = b as f64;
            cutoff_delta((1.0 + a) / (1.0 + b)) * b
        })
        .collect();
    let mus = chain_dist.iter().map(|&b| 1 + b).collect();
    Ok(AdversarialField { dec, s1, s2, chain_dist, lambdas, mus })
}

impl AdversarialField<'_> {
    pub fn d1(&self) -> u32 {
        self.chain_dist[self.s2]
    }

    pub fn bump(&self, i: usize) -> BumpSpec {
        BumpSpec { cube: self.dec.box_e(i), mu: self.mus[i] }
    }

    /// `|phi_{J(S1)} - phi_{J(S2)}|` by quadrature.
    pub fn separation(&self, m: usize) -> Result<f64> {
        let j1 = self.bump(self.s1).plateau();
        let j2 = self.bump(self.s2).plateau();
        Ok((cube_average(self, &j1, m)? - cube_average(self, &j2, m)?).abs())
    }

    /// `separation / d2(J(S1), J(S2))`.
    pub fn separation_ratio(&self, m: usize) -> Result<f64> {
        let j1 = self.bump(self.s1).plateau();
        let j2 = self.bump(self.s2).plateau();
        Ok(self.separation(m)? / dyadic::d2(&j1, &j2))
    }

    pub fn conditions(&self) -> ConditionReport {
        let dec = self.dec;
        let n = dec.cubes_e.len();
        let l1 = dec.side_e(self.s1);
        let mu_log_failures =
            (0..n).filter(|&i| (self.chain_dist[i] as f64) < 0.5 * (l1 / dec.side_e(i)).log2().abs()).count();
        let mut max_adjacent_mu_gap = 0;
        let mut max_adjacent_lambda_gap: f64 = 0.0;
        for (i, j) in dec.adjacency_e.edges() {
            max_adjacent_mu_gap = max_adjacent_mu_gap.max(self.mus[i].abs_diff(self.mus[j]));
            max_adjacent_lambda_gap = max_adjacent_lambda_gap.max((self.lambdas[i] - self.lambdas[j]).abs());
        }
        let max_lambda_over_mu = (0..n).map(|i| self.lambdas[i].abs() / self.mus[i] as f64).fold(0.0, f64::max);
        let lambda_bound = DELTA_SUP + 2.0 * DELTA_PRIME_SUP;
        ConditionReport {
            mu_log_failures,
            max_adjacent_mu_gap,
            max_lambda_over_mu,
            max_adjacent_lambda_gap,
            lambda_bound,
            holds: mu_log_failures == 0
                && max_adjacent_mu_gap <= 1
                && max_lambda_over_mu <= DELTA_SUP
                && max_adjacent_lambda_gap <= lambda_bound,
        }
    }
}

impl Field for AdversarialField<'_> {
    fn eval(&self, x: &Point) -> f64 {
        match self.dec.locate_e(x) {
            Some(i) if self.lambdas[i] != 0.0 => self.lambdas[i] * self.bump(i).value(x),
            _ => 0.0,
        }
    }
}

/// Hypotheses of the gluing estimate for the adversarial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Cubes with `d1(S1, S_i) < |log2(l(S1) / l(S_i))| / 2`.
    pub mu_log_failures: usize,
    pub max_adjacent_mu_gap: u32,
    pub max_lambda_over_mu: f64,
    pub max_adjacent_lambda_gap: f64,
    /// `sup|delta| + 2 sup|delta'|`.
    pub lambda_bound: f64,
    pub holds: bool,
}

/// Cubes at distance at least `2 sqrt(2) l_min` from the boundary, where
/// `l_min` is the finest side: every such point lies in an `E` cube. Closer
/// to the boundary the truncated decomposition has no cubes and the field
/// is an artificial zero.
pub fn covered_margin(dec: &WhitneyDecomposition) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * dec.grid.side(dec.max_level)
}

pub const PROBE_CAP: usize = 1024;

/// Cubes of the covered part of the domain, plus probe cubes around every
/// active bump.
pub struct AdversarialRegion<'a> {
    pub d: &'a dyn DomainOracle,
    pub field: &'a AdversarialField<'a>,
    pub margin: f64,
}

impl<'a> AdversarialRegion<'a> {
    pub fn new(d: &'a dyn DomainOracle, field: &'a AdversarialField<'a>) -> Self {
        Self { d, field, margin: covered_margin(field.dec) }
    }
}

impl OscillationRegion for AdversarialRegion<'_> {
    fn bounding_box(&self) -> Box {
        self.d.bounding_box()
    }

    fn admits(&self, q: &Box) -> bool {
        contains_cube(self.d, q) && self.d.boundary_gap(q) >= self.margin
    }

    fn feature_gap(&self, q: &Box) -> f64 {
        match self.d.boundary_gap(q) {
            g if g > 0.0 => (g - self.margin).abs(),
            _ => 0.0,
        }
    }

    /// Probes around at most [`PROBE_CAP`] active bumps, evenly strided.
    fn extra_cubes(&self, min_scale: f64) -> Vec<Box> {
        let active: Vec<usize> = (0..self.field.lambdas.len()).filter(|&i| self.field.lambdas[i] != 0.0).collect();
        let stride = active.len().div_ceil(PROBE_CAP).max(1);
        let mut picked: Vec<usize> = active.iter().copied().step_by(stride).collect();
        picked.extend([self.field.s1, self.field.s2]);
        picked.into_iter().flat_map(|i| probe_cubes(&self.field.bump(i), min_scale)).collect()
    }
}

/// Lighter sampler for per-pair norms: many fields are estimated per run.
pub fn pair_sampler(seed: u64, m: usize) -> SamplerConfig {
    SamplerConfig { m, grid_cap: 256, band_cap: 256, jitter: 16, seed, ..SamplerConfig::default() }
}

pub fn adversarial_bmo(d: &dyn DomainOracle, field: &AdversarialField<'_>, cfg: &SamplerConfig) -> Result<f64> {
    bmo_norm(field, &AdversarialRegion::new(d, field), cfg)
}

/// The straight segment between the centres leaves the domain. Decided by
/// stepping along it by the distance to the boundary.
pub fn straddles(d: &dyn DomainOracle, a: &Point, b: &Point) -> bool {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if !d.contains(a) || !d.contains(b) {
        return true;
    }
    let mut s = 0.0;
    while s < len {
        let p = [a[0] + (b[0] - a[0]) * s / len, a[1] + (b[1] - a[1]) * s / len];
        let r = d.dist_to_boundary(&p).lo;
        if !d.contains(&p) || r < 1e-12 * len.max(1.0) {
            return true;
        }
        s += r;
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairNorm {
    pub s1: usize,
    pub s2: usize,
    pub d1: u32,
    pub separation: f64,
    pub bmo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBmoReport {
    pub pairs: Vec<PairNorm>,
    pub max_norm: f64,
    pub min_norm: f64,
    /// Rank correlation of `d1` with the norm; `<= 0` means the norm does
    /// not grow with the chain distance.
    pub spearman: f64,
}

/// Seeded random pairs of distinct `E` cubes.
pub fn random_pairs(dec: &WhitneyDecomposition, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = dec.cubes_e.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count && n > 1 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j {
            out.push((i, j));
        }
    }
    out
}

pub fn uniform_bmo_check(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    pairs: &[(usize, usize)],
    cfg: &SamplerConfig,
) -> Result<UniformBmoReport> {
    let rows: Vec<PairNorm> = pairs
        .par_iter()
        .map(|&(s1, s2)| {
            let field = build_adversarial(dec, s1, s2)?;
            Ok(PairNorm {
                s1,
                s2,
                d1: field.d1(),
                separation: field.separation(cfg.m)?,
                bmo: adversarial_bmo(d, &field, cfg)?,
            })
        })
        .collect::<Result<_>>()?;
    let max_norm = rows.iter().map(|r| r.bmo).fold(0.0, f64::max);
    let min_norm = rows.iter().map(|r| r.bmo).fold(f64::INFINITY, f64::min);
    let d1s: Vec<f64> = rows.iter().map(|r| r.d1 as f64).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.bmo).collect();
    Ok(UniformBmoReport { spearman: spearman(&d1s, &norms), pairs: rows, max_norm, min_norm })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            r[i] = avg;
        }
        k = e + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `0` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// The pair maximising `d1 / d2` among the sampled pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s1: usize,
    pub s2: usize,
    pub d1: u32,
    pub d2: f64,
    pub straddles: bool,
}

pub fn witness_pair(d: &dyn DomainOracle, dec: &WhitneyDecomposition, sampler: KappaSampler) -> Result<Witness> {
    let k = estimate_kappa(dec, sampler)?;
    let (a, b) = (dec.box_e(k.argmax.i).center(), dec.box_e(k.argmax.j).center());
    Ok(Witness { s1: k.argmax.i, s2: k.argmax.j, d1: k.argmax.d1, d2: k.argmax.d2, straddles: straddles(d, &a, &b) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::builtin;
    use crate::whitney::decompose;

    #[test]
    fn delta_values() {
        assert_eq!(cutoff_delta(0.5), 0.0);
        assert_eq!(cutoff_delta(0.2), 0.0);
        assert_eq!(cutoff_delta(1.0), 1.0);
        assert_eq!(cutoff_delta(3.0), 1.0);
        assert_eq!(cutoff_delta(0.75), 0.5);
        let h = 1e-6;
        let slope = (cutoff_delta(0.75 + h) - cutoff_delta(0.75 - h)) / (2.0 * h);
        assert!((slope - DELTA_PRIME_SUP).abs() < 1e-6);
    }

    #[test]
    fn lambdas_and_separation() {
        let d = builtin("disk").unwrap();
        let dec = decompose(d.as_ref(), 5).unwrap();
        let n = dec.cubes_e.len();
        let field = build_adversarial(&dec, 0, n - 1).unwrap();
        let a = field.d1();
        assert_eq!(field.lambdas[0], 0.0);
        assert_eq!(field.lambdas[n - 1], a as f64);
        for i in 0..n {
            if 1 + field.chain_dist[i] >= 2 * (1 + a) {
                assert_eq!(field.lambdas[i], 0.0);
            }
        }
        assert!((field.separation(16).unwrap() - a as f64).abs() < 1e-9);
        let j = dec.adjacency_e.neighbors(0)[0];
        let near = build_adversarial(&dec, 0, j).unwrap();
        assert!((near.separation(16).unwrap() - 1.0).abs() < 1e-9);
        assert!(field.conditions().holds);
    }

    #[test]
    fn coincident_pair_is_zero() {
        let d = builtin("disk").unwrap();
        let dec = decompose(d.as_ref(), 4).unwrap();
        let field = build_adversarial(&dec, 3, 3).unwrap();
        assert!(field.lambdas.iter().all(|&l| l == 0.0));
        let cfg = SamplerConfig { grid_cap: 64, band_cap: 64, jitter: 4, ..SamplerConfig::default() };
        assert_eq!(adversarial_bmo(d.as_ref(), &field, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn straddle_detection() {
        let d = builtin("slit-disk").unwrap();
        assert!(straddles(d.as_ref(), &[0.5, 0.1], &[0.5, -0.1]));
        assert!(!straddles(d.as_ref(), &[-0.5, 0.1], &[-0.5, -0.1]));
    }

    #[test]
    fn rank_correlation() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 5.0, 9.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 1.0], &[2.0, 3.0]), 0.0);
    }
}
