//! Whitney-chain distance `d1` and estimates of the Jones constant.
//!
//! `d1(S1, S2)` is the number of steps in a shortest chain of pairwise
//! touching interior Whitney cubes from `S1` to `S2`, computed by breadth-first
//! search on the `E` adjacency graph. The Jones constant is the smallest
//! `kappa` with `d1 <= kappa d2` over all pairs; we only ever see a lower
//! bound `kappa_hat` from the pairs we sample.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{self, concentric_subcube, Box, Metric};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::oscillation::{cube_average, ModulusCurve};
use crate::whitney::{Adjacency, WhitneyDecomposition};

pub const UNREACHED: u32 = u32::MAX;

/// Hop counts from `source`; unreachable cubes get [`UNREACHED`].
/// Neighbours are visited in index order, so parents are deterministic.
pub fn bfs(adj: &Adjacency, source: usize) -> (Vec<u32>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![UNREACHED; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(i) = queue.pop_front() {
        for &j in adj.neighbors(i) {
            if dist[j] == UNREACHED {
                dist[j] = dist[i] + 1;
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    (dist, parent)
}

/// `d1(S_source, S_j)` for every `j`.
pub fn d1_from(dec: &WhitneyDecomposition, source: usize) -> Result<Vec<u32>> {
    check_index(dec, source)?;
    let (dist, _) = bfs(&dec.adjacency_e, source);
    if dist.contains(&UNREACHED) {
        return Err(Error::Internal(format!("E adjacency of {} is disconnected", dec.domain_name)));
    }
    Ok(dist)
}

fn check_index(dec: &WhitneyDecomposition, i: usize) -> Result<()> {
    if i >= dec.cubes_e.len() {
        return Err(Error::Usage(format!("E index {i} out of range (have {})", dec.cubes_e.len())));
    }
    Ok(())
}

/// A shortest Whitney chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainResult {
    /// Number of steps; the chain has `length + 1` cubes.
    pub length: usize,
    pub chain: Vec<usize>,
    /// Largest cube on the chain (first along the chain on ties).
    pub largest_cube: usize,
}

pub fn d1(dec: &WhitneyDecomposition, i: usize, j: usize) -> Result<ChainResult> {
    check_index(dec, i)?;
    check_index(dec, j)?;
    let (dist, parent) = bfs(&dec.adjacency_e, i);
    if dist[j] == UNREACHED {
        return Err(Error::Internal(format!("E cubes {i} and {j} of {} are not connected", dec.domain_name)));
    }
    let mut chain = vec![j];
    while *chain.last().unwrap() != i {
        chain.push(parent[*chain.last().unwrap()]);
    }
    chain.reverse();
    let mut largest_cube = chain[0];
    for &c in &chain {
        if dec.cubes_e[c].level < dec.cubes_e[largest_cube].level {
            largest_cube = c;
        }
    }
    Ok(ChainResult { length: dist[j] as usize, chain, largest_cube })
}

pub fn d2_e(dec: &WhitneyDecomposition, i: usize, j: usize) -> f64 {
    dyadic::d2(&dec.box_e(i), &dec.box_e(j))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KappaSampler {
    /// Every unordered pair.
    Exhaustive,
    /// Half the pairs stratified by level difference, half between nearby
    /// cubes (gap at most `4 (l1 + l2)`) around sources drawn level by level;
    /// long chains across thin obstacles show up in the latter.
    Stratified { pairs: usize, seed: u64 },
}

impl Default for KappaSampler {
    fn default() -> Self {
        KappaSampler::Stratified { pairs: 4096, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub d1: u32,
    pub d2: f64,
}

impl PairRecord {
    pub fn ratio(&self) -> f64 {
        self.d1 as f64 / self.d2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    /// Lower bound for the Jones constant.
    pub kappa_hat: f64,
    pub argmax: PairRecord,
    pub pairs_evaluated: usize,
}

/// Sampled pairs grouped by source cube, sources ascending.
fn sample_pairs(dec: &WhitneyDecomposition, pairs: usize, seed: u64) -> BTreeMap<usize, Vec<usize>> {
    let n = dec.cubes_e.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_level: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, q) in dec.cubes_e.iter().enumerate() {
        by_level.entry(q.level).or_default().push(i);
    }
    let lo = *by_level.keys().next().unwrap();
    let hi = *by_level.keys().last().unwrap();
    let strata = (hi - lo + 1) as usize;
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();

    let stratified = pairs / 2;
    for r in 0..strata {
        let quota = stratified / strata + usize::from(r < stratified % strata);
        let mut got = 0;
        let mut tries = 0;
        while got < quota && tries < 20 * quota {
            tries += 1;
            let i = rng.gen_range(0..n);
            let lv = dec.cubes_e[i].level;
            let target = if rng.gen::<bool>() { lv + r as i32 } else { lv - r as i32 };
            let Some(pool) = by_level.get(&target) else { continue };
            let j = pool[rng.gen_range(0..pool.len())];
            if i != j {
                out.entry(i).or_default().push(j);
                got += 1;
            }
        }
    }

    let boxes: Vec<Box> = (0..n).map(|i| dec.box_e(i)).collect();
    let mut local = pairs - stratified;
    let levels: Vec<&Vec<usize>> = by_level.values().collect();
    while local > 0 {
        let pool = levels[rng.gen_range(0..levels.len())];
        let i = pool[rng.gen_range(0..pool.len())];
        let near: Vec<usize> = (0..n)
            .filter(|&j| {
                j != i && dyadic::dist(&boxes[i], &boxes[j], Metric::L2) <= 4.0 * (boxes[i].side + boxes[j].side)
            })
            .collect();
        if near.is_empty() {
            local -= 1;
            continue;
        }
        let take = near.len().min(local).min(4);
        let entry = out.entry(i).or_default();
        for _ in 0..take {
            entry.push(near[rng.gen_range(0..near.len())]);
        }
        local -= take;
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    out
}

fn better(a: PairRecord, b: PairRecord) -> PairRecord {
    match a.ratio().total_cmp(&b.ratio()) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if (a.i, a.j) <= (b.i, b.j) {
                a
            } else {
                b
            }
        }
    }
}

/// `kappa_hat = max d1 / d2` over sampled pairs, with the maximising pair.
pub fn estimate_kappa(dec: &WhitneyDecomposition, sampler: KappaSampler) -> Result<KappaEstimate> {
    let n = dec.cubes_e.len();
    if n < 2 {
        return Err(Error::Usage("need at least two E cubes to estimate kappa".into()));
    }
    let groups: Vec<(usize, Vec<usize>)> = match sampler {
        KappaSampler::Exhaustive => (0..n - 1).map(|i| (i, ((i + 1)..n).collect())).collect(),
        KappaSampler::Stratified { pairs, seed } => sample_pairs(dec, pairs.max(1), seed).into_iter().collect(),
    };
    let per_source: Vec<Result<(usize, Option<PairRecord>)>> = groups
        .par_iter()
        .map(|(i, targets)| {
            let dist = d1_from(dec, *i)?;
            let bi = dec.box_e(*i);
            let best = targets
                .iter()
                .map(|&j| {
                    let (a, b) = if *i < j { (*i, j) } else { (j, *i) };
                    PairRecord { i: a, j: b, d1: dist[j], d2: dyadic::d2(&bi, &dec.box_e(j)) }
                })
                .reduce(better);
            Ok((targets.len(), best))
        })
        .collect();
    let mut count = 0;
    let mut best: Option<PairRecord> = None;
    for r in per_source {
        let (c, b) = r?;
        count += c;
        if let Some(b) = b {
            best = Some(best.map_or(b, |a| better(a, b)));
        }
    }
    let argmax = best.ok_or_else(|| Error::Internal("no pairs sampled".into()))?;
    Ok(KappaEstimate { kappa_hat: argmax.ratio(), argmax, pairs_evaluated: count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainBoundRow {
    pub i: usize,
    pub j: usize,
    pub d1: usize,
    pub difference: f64,
    /// `omega(f, .)` at the scale entering the bound.
    pub omega: f64,
    /// Smallest constant for which the bound holds on this row; `None` when
    /// the right side vanishes but the left does not.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainBoundReport {
    /// `|f_Q1 - f_Q2| <= C d1 omega(f, 2 l(largest))` per pair.
    pub chain_rows: Vec<ChainBoundRow>,
    /// `|f_Q - f_J| <= C log2(2 + l(Q)/l(J)) omega(f, 2 l(Q))` with `J` the
    /// concentric quarter cube of each first cube.
    pub nested_rows: Vec<ChainBoundRow>,
    pub max_chain_constant: Option<f64>,
    pub max_nested_constant: Option<f64>,
}

fn ratio(diff: f64, rhs: f64) -> Option<f64> {
    if rhs > 0.0 {
        Some(diff / rhs)
    } else if diff <= 1e-12 {
        Some(0.0)
    } else {
        None
    }
}

fn max_constant(rows: &[ChainBoundRow]) -> Option<f64> {
    rows.iter().try_fold(0.0f64, |m, r| r.constant.map(|c| m.max(c)))
}

/// Empirical constants in the chain and nested-cube average bounds, with
/// `curve` the sampled modulus of `f` on the domain.
pub fn check_chain_average_bound(
    dec: &WhitneyDecomposition,
    f: &dyn Field,
    curve: &ModulusCurve,
    pairs: &[(usize, usize)],
    m: usize,
) -> Result<ChainBoundReport> {
    let omega = |t: f64| curve.value_at(t).unwrap_or(0.0);
    let mut chain_rows = Vec::with_capacity(pairs.len());
    let mut nested_rows = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let c = d1(dec, i, j)?;
        let (qi, qj) = (dec.box_e(i), dec.box_e(j));
        let diff = (cube_average(f, &qi, m)? - cube_average(f, &qj, m)?).abs();
        let w = omega(2.0 * dec.side_e(c.largest_cube));
        chain_rows.push(ChainBoundRow {
            i,
            j,
            d1: c.length,
            difference: diff,
            omega: w,
            constant: ratio(diff, c.length as f64 * w),
        });

        let inner = concentric_subcube(&qi, 0.25)?;
        let diff = (cube_average(f, &qi, m)? - cube_average(f, &inner, m)?).abs();
        let w = omega(2.0 * qi.side);
        let log = (2.0 + qi.side / inner.side).log2();
        nested_rows.push(ChainBoundRow { i, j: i, d1: 0, difference: diff, omega: w, constant: ratio(diff, log * w) });
    }
    Ok(ChainBoundReport {
        max_chain_constant: max_constant(&chain_rows),
        max_nested_constant: max_constant(&nested_rows),
        chain_rows,
        nested_rows,
    })
}
