//! Whitney decompositions of a domain and of the exterior of its closure.
//!
//! Cubes are produced by quadtree refinement of the bounding box. A cube is
//! accepted when `sqrt(n) l(S) <= dist(S, complement)`; since refinement is
//! top-down its parent failed the same test, which pins
//! `l(S) <= dist(S, complement) <= 4 sqrt(n) l(S)`. Cubes that would need a
//! level beyond `max_level` are dropped and show up in `residual_measure`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BoxClass, DomainOracle, Interval};
use crate::dyadic::{self, touches, Box, DyadicCube, Grid, Metric, Point, DIM};
use crate::error::{Error, Result};

const SQRT_N: f64 = std::f64::consts::SQRT_2;

/// Compressed undirected adjacency; neighbour lists are sorted.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Each undirected edge once, `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.len()
    }
}

/// Adjacency of a family of dyadic cubes with pairwise disjoint interiors.
/// Candidates are enumerated level by level on the integer grid and
/// confirmed with the exact closed-cube test.
pub fn build_adjacency(cubes: &[DyadicCube]) -> Adjacency {
    let index: HashMap<DyadicCube, usize> = cubes.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let levels: BTreeSet<i32> = cubes.iter().map(|q| q.level).collect();
    let lists: Vec<Vec<usize>> = cubes
        .par_iter()
        .map(|q| {
            let mut out = Vec::new();
            for &lv in &levels {
                for cand in touching_cells(q, lv) {
                    if let Some(&j) = index.get(&cand) {
                        if touches(q, &cand) {
                            out.push(j);
                        }
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    let mut offsets = Vec::with_capacity(cubes.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for l in lists {
        targets.extend(l);
        offsets.push(targets.len());
    }
    Adjacency { offsets, targets }
}

/// Cells of `level` whose closure meets the closure of `q`, excluding cells
/// strictly inside `q`.
fn touching_cells(q: &DyadicCube, level: i32) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    if level <= q.level {
        let d = (q.level - level) as u32;
        let mut range = [(0i64, 0i64); DIM];
        for k in 0..DIM {
            let c = q.coords[k];
            let lo = c.div_euclid(1 << d) - if c.rem_euclid(1 << d) == 0 { 1 } else { 0 };
            let hi = (c + 1).div_euclid(1 << d);
            range[k] = (lo, hi);
        }
        for x in range[0].0..=range[0].1 {
            for y in range[1].0..=range[1].1 {
                out.push(DyadicCube::new(level, [x, y]));
            }
        }
    } else {
        let span = q.span_at(level);
        let (x0, x1) = (span[0].0 - 1, span[0].1);
        let (y0, y1) = (span[1].0 - 1, span[1].1);
        for x in x0..=x1 {
            out.push(DyadicCube::new(level, [x, y0]));
            out.push(DyadicCube::new(level, [x, y1]));
        }
        for y in (y0 + 1)..y1 {
            out.push(DyadicCube::new(level, [x0, y]));
            out.push(DyadicCube::new(level, [x1, y]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubeKind {
    #[serde(rename = "E")]
    Interior,
    #[serde(rename = "E'")]
    Exterior,
}

/// The families `E`, `E'` and everything derived from them.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    pub domain_name: String,
    pub grid: Grid,
    pub root_level: i32,
    pub max_level: i32,
    /// Bounding box, standing in for the enclosing ball.
    pub bbox: Box,
    /// Interior Whitney cubes sorted by `(level, coords)`.
    pub cubes_e: Vec<DyadicCube>,
    /// `dist(S, Omega^c)` per `E` cube.
    pub dist_e: Vec<Interval>,
    /// Exterior Whitney cubes with `l <= L`, sorted.
    pub cubes_eprime: Vec<DyadicCube>,
    /// `dist(S', closure(Omega))` per `E'` cube.
    pub dist_eprime: Vec<Interval>,
    /// Exterior Whitney cubes with `l > L`; outside `Omega'` but needed to
    /// locate the boundary of `Omega~`.
    pub eprime_large: Vec<DyadicCube>,
    pub adjacency_e: Adjacency,
    pub adjacency_eprime: Adjacency,
    /// Largest interior sidelength.
    pub big_l: f64,
    /// `matching[i]` is the `E` index matched to `E'` cube `i`.
    pub matching: Vec<usize>,
    /// Second nearest admissible `E` cube, if any.
    pub matching_alt: Vec<Option<usize>>,
    /// `E'` cubes that meet the boundary of `Omega~`.
    pub boundary_flags: Vec<bool>,
    /// Area of `Omega` not covered by `E`.
    pub residual_measure: f64,
    index_e: HashMap<DyadicCube, usize>,
    index_eprime: HashMap<DyadicCube, usize>,
    levels_e: Vec<i32>,
    levels_eprime: Vec<i32>,
}

struct Refined {
    inside: Vec<(DyadicCube, Interval)>,
    outside: Vec<(DyadicCube, Interval)>,
}

fn refine(d: &dyn DomainOracle, grid: &Grid, q: DyadicCube, max_level: i32) -> Refined {
    let b = grid.to_box(&q);
    let test = SQRT_N * b.side;
    let split = |q: DyadicCube| -> Refined {
        let parts: Vec<Refined> = if q.level < 3 {
            q.children().into_par_iter().map(|c| refine(d, grid, c, max_level)).collect()
        } else {
            q.children().into_iter().map(|c| refine(d, grid, c, max_level)).collect()
        };
        let mut out = Refined { inside: Vec::new(), outside: Vec::new() };
        for p in parts {
            out.inside.extend(p.inside);
            out.outside.extend(p.outside);
        }
        out
    };
    let empty = || Refined { inside: Vec::new(), outside: Vec::new() };
    match d.classify_box(&b) {
        BoxClass::Inside(iv) if test <= iv.lo => Refined { inside: vec![(q, iv)], outside: Vec::new() },
        BoxClass::Outside(iv) if test <= iv.lo => Refined { inside: Vec::new(), outside: vec![(q, iv)] },
        _ if q.level < max_level => split(q),
        _ => empty(),
    }
}

/// Whitney decomposition of `d` with cubes no finer than `max_level`
/// (sidelength `2^-max_level` on the unit-based grid).
pub fn decompose(d: &dyn DomainOracle, max_level: i32) -> Result<WhitneyDecomposition> {
    let grid = d.grid();
    let bbox = d.bounding_box();
    let root_level = d.root_level();
    let root = DyadicCube::new(root_level, [0, 0]);
    if grid.to_box(&root) != bbox {
        return Err(Error::Usage(format!("bounding box of {} is not a dyadic cube of its grid", d.name())));
    }
    if !matches!(d.classify_box(&bbox), BoxClass::Straddles) {
        return Err(Error::Usage(format!("domain {} is not strictly inside its bounding box", d.name())));
    }
    if max_level <= root_level {
        return Err(Error::Usage(format!("max_level {max_level} must exceed the root level {root_level}")));
    }
    let mut refined = refine(d, &grid, root, max_level);
    if refined.inside.is_empty() {
        return Err(Error::Resolution(format!(
            "no Whitney cube of {} accepted down to level {max_level} (smallest side {})",
            d.name(),
            grid.side(max_level)
        )));
    }
    refined.inside.sort_by_key(|a| a.0);
    refined.outside.sort_by_key(|a| a.0);

    let (cubes_e, dist_e): (Vec<_>, Vec<_>) = refined.inside.into_iter().unzip();
    let big_l = cubes_e.iter().map(|q| grid.side(q.level)).fold(0.0, f64::max);
    let l_level = cubes_e.iter().map(|q| q.level).min().unwrap();

    let mut cubes_eprime = Vec::new();
    let mut dist_eprime = Vec::new();
    let mut eprime_large = Vec::new();
    for (q, iv) in refined.outside {
        if q.level >= l_level {
            cubes_eprime.push(q);
            dist_eprime.push(iv);
        } else {
            eprime_large.push(q);
        }
    }

    let covered: f64 = cubes_e.iter().map(|q| grid.to_box(q).volume()).sum();
    let residual_measure = (d.area() - covered).max(0.0);

    let adjacency_e = build_adjacency(&cubes_e);
    let adjacency_eprime = build_adjacency(&cubes_eprime);

    let boxes_e: Vec<Box> = cubes_e.iter().map(|q| grid.to_box(q)).collect();
    let (matching, matching_alt): (Vec<usize>, Vec<Option<usize>>) = cubes_eprime
        .par_iter()
        .map(|q| nearest_two(&boxes_e, &grid.to_box(q)))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Internal("an E' cube with l <= L has no E cube of at least its size".into()))?
        .into_iter()
        .unzip();

    let large_set: Vec<DyadicCube> = eprime_large.clone();
    let large_index: HashMap<DyadicCube, usize> = large_set.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let large_levels: BTreeSet<i32> = large_set.iter().map(|q| q.level).collect();
    let boundary_flags = cubes_eprime
        .iter()
        .map(|q| {
            large_levels
                .iter()
                .any(|&lv| touching_cells(q, lv).iter().any(|c| large_index.contains_key(c) && touches(q, c)))
        })
        .collect();

    let index_e = cubes_e.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let index_eprime = cubes_eprime.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let levels_e = cubes_e.iter().map(|q| q.level).collect::<BTreeSet<_>>().into_iter().collect();
    let levels_eprime = cubes_eprime.iter().map(|q| q.level).collect::<BTreeSet<_>>().into_iter().collect();

    Ok(WhitneyDecomposition {
        domain_name: d.name().to_string(),
        grid,
        root_level,
        max_level,
        bbox,
        cubes_e,
        dist_e,
        cubes_eprime,
        dist_eprime,
        eprime_large,
        adjacency_e,
        adjacency_eprime,
        big_l,
        matching,
        matching_alt,
        boundary_flags,
        residual_measure,
        index_e,
        index_eprime,
        levels_e,
        levels_eprime,
    })
}

/// Nearest and second-nearest `E` cubes with side at least `target.side`;
/// ties go to the smaller index, i.e. the smaller `(level, coords)`.
fn nearest_two(boxes_e: &[Box], target: &Box) -> Option<(usize, Option<usize>)> {
    let mut best: Option<(f64, usize)> = None;
    let mut second: Option<(f64, usize)> = None;
    for (i, b) in boxes_e.iter().enumerate() {
        if b.side < target.side {
            continue;
        }
        let dd = dyadic::dist(b, target, Metric::L2);
        match best {
            Some((bd, _)) if dd >= bd => {
                if second.is_none_or(|(sd, _)| dd < sd) {
                    second = Some((dd, i));
                }
            }
            _ => {
                second = best;
                best = Some((dd, i));
            }
        }
    }
    best.map(|(_, i)| (i, second.map(|(_, j)| j)))
}

/// Result of checking the Whitney invariants on a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WhitneyAudit {
    pub e_count: usize,
    pub eprime_count: usize,
    pub e_distance_failures: usize,
    pub eprime_distance_failures: usize,
    pub adjacent_pairs: usize,
    pub adjacency_failures: usize,
    pub matching_failures: usize,
    pub boundary_flagged: usize,
    pub boundary_failures: usize,
    pub connected: bool,
    pub residual_fraction: f64,
}

impl WhitneyAudit {
    pub fn is_clean(&self) -> bool {
        self.e_distance_failures == 0
            && self.eprime_distance_failures == 0
            && self.adjacency_failures == 0
            && self.matching_failures == 0
            && self.boundary_failures == 0
            && self.connected
    }
}

fn whitney_distance_ok(side: f64, d: &Interval) -> bool {
    side <= d.lo && d.hi <= 4.0 * SQRT_N * side
}

impl WhitneyDecomposition {
    pub fn side_e(&self, i: usize) -> f64 {
        self.grid.side(self.cubes_e[i].level)
    }

    pub fn side_eprime(&self, i: usize) -> f64 {
        self.grid.side(self.cubes_eprime[i].level)
    }

    pub fn box_e(&self, i: usize) -> Box {
        self.grid.to_box(&self.cubes_e[i])
    }

    pub fn box_eprime(&self, i: usize) -> Box {
        self.grid.to_box(&self.cubes_eprime[i])
    }

    pub fn index_of_e(&self, q: &DyadicCube) -> Option<usize> {
        self.index_e.get(q).copied()
    }

    /// Matching cube of an `E'` cube.
    pub fn matching_cube(&self, s_prime: usize) -> Result<usize> {
        self.matching
            .get(s_prime)
            .copied()
            .ok_or_else(|| Error::Usage(format!("E' index {s_prime} out of range ({})", self.matching.len())))
    }

    /// `E` cube whose closed cell contains `x`, if any.
    pub fn locate_e(&self, x: &Point) -> Option<usize> {
        locate(&self.grid, &self.levels_e, &self.index_e, x)
    }

    /// `E'` cube (with `l <= L`) whose closed cell contains `x`, if any.
    pub fn locate_eprime(&self, x: &Point) -> Option<usize> {
        locate(&self.grid, &self.levels_eprime, &self.index_eprime, x)
    }

    /// Membership in `Omega~`, the interior of `closure(Omega)` union `Omega'`.
    pub fn omega_tilde_contains(&self, d: &dyn DomainOracle, x: &Point) -> bool {
        d.contains(x) || d.dist_to_boundary(x).hi == 0.0 || self.locate_eprime(x).is_some()
    }

    /// Indices of `E'` cubes flagged as meeting the boundary of `Omega~`.
    pub fn omega_tilde_boundary(&self) -> Vec<usize> {
        (0..self.cubes_eprime.len()).filter(|&i| self.boundary_flags[i]).collect()
    }

    pub fn audit(&self, d: &dyn DomainOracle) -> WhitneyAudit {
        let e_distance_failures =
            (0..self.cubes_e.len()).filter(|&i| !whitney_distance_ok(self.side_e(i), &self.dist_e[i])).count();
        let eprime_distance_failures = (0..self.cubes_eprime.len())
            .filter(|&i| !whitney_distance_ok(self.side_eprime(i), &self.dist_eprime[i]))
            .count();
        let mut adjacent_pairs = 0;
        let mut adjacency_failures = 0;
        let sides_e: Vec<f64> = (0..self.cubes_e.len()).map(|i| self.side_e(i)).collect();
        let sides_ep: Vec<f64> = (0..self.cubes_eprime.len()).map(|i| self.side_eprime(i)).collect();
        for (adj, side) in [(&self.adjacency_e, &sides_e), (&self.adjacency_eprime, &sides_ep)] {
            for (i, j) in adj.edges() {
                adjacent_pairs += 1;
                let r = side[j] / side[i];
                if !(0.25..=4.0).contains(&r) {
                    adjacency_failures += 1;
                }
            }
        }
        let matching_failures = (0..self.cubes_eprime.len())
            .filter(|&i| {
                let (sp, s) = (self.side_eprime(i), self.side_e(self.matching[i]));
                !(sp <= s && s <= 2.0 * sp)
            })
            .count();
        let flagged = self.omega_tilde_boundary();
        let boundary_failures = flagged
            .iter()
            .filter(|&&i| {
                let s = self.side_eprime(i);
                !(self.big_l / 2.0 <= s && s <= self.big_l)
            })
            .count();
        WhitneyAudit {
            e_count: self.cubes_e.len(),
            eprime_count: self.cubes_eprime.len(),
            e_distance_failures,
            eprime_distance_failures,
            adjacent_pairs,
            adjacency_failures,
            matching_failures,
            boundary_flagged: flagged.len(),
            boundary_failures,
            connected: self.adjacency_e.is_connected(),
            residual_fraction: self.residual_measure / d.area(),
        }
    }

    /// JSON dump `{domain, max_level, L, cubes, residual_measure}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut cubes = Vec::with_capacity(self.cubes_e.len() + self.cubes_eprime.len());
        for q in &self.cubes_e {
            cubes.push(serde_json::json!({"kind": CubeKind::Interior, "level": q.level, "coords": q.coords}));
        }
        for (i, q) in self.cubes_eprime.iter().enumerate() {
            cubes.push(serde_json::json!({
                "kind": CubeKind::Exterior,
                "level": q.level,
                "coords": q.coords,
                "matching": self.matching[i],
            }));
        }
        serde_json::json!({
            "domain": self.domain_name,
            "max_level": self.max_level,
            "L": self.big_l,
            "grid": {"origin": self.grid.origin, "base_side": self.grid.base_side},
            "cubes": cubes,
            "residual_measure": self.residual_measure,
        })
    }

    /// Standalone SVG 1.1 map: `E` in blue, `E'` in orange, cubes on the
    /// boundary of `Omega~` outlined in red.
    pub fn to_svg(&self, pixels: u32) -> String {
        let scale = pixels as f64 / self.bbox.side;
        let px = |x: f64, k: usize| (x - self.bbox.lower[k]) * scale;
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{pixels}" height="{pixels}" viewBox="0 0 {pixels} {pixels}">"#
        );
        let _ = writeln!(s, r#"<g transform="matrix(1 0 0 -1 0 {pixels})" stroke-width="0.5">"#);
        let mut rect = |b: &Box, fill: &str, stroke: &str| {
            let _ = writeln!(
                s,
                r#"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="{fill}" stroke="{stroke}"/>"#,
                px(b.lower[0], 0),
                px(b.lower[1], 1),
                b.side * scale,
                b.side * scale
            );
        };
        for i in 0..self.cubes_e.len() {
            rect(&self.box_e(i), "#9ecae1", "#3182bd");
        }
        for i in 0..self.cubes_eprime.len() {
            let stroke = if self.boundary_flags[i] { "#de2d26" } else { "#e6550d" };
            rect(&self.box_eprime(i), "#fdd0a2", stroke);
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}

fn locate(grid: &Grid, levels: &[i32], index: &HashMap<DyadicCube, usize>, x: &Point) -> Option<usize> {
    for &lv in levels {
        let q = grid.locate(x, lv);
        if let Some(&i) = index.get(&q) {
            return Some(i);
        }
        // points on a lower/left face also belong to the neighbouring closed cell
        let b = grid.to_box(&q);
        for k in 0..DIM {
            if x[k] == b.lower[k] {
                let mut c = q.coords;
                c[k] -= 1;
                if let Some(&i) = index.get(&DyadicCube::new(lv, c)) {
                    return Some(i);
                }
            }
        }
    }
    None
}
