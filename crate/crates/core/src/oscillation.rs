//! Cube averages, mean oscillation and the modulus of mean oscillation.
//!
//! Averages use the midpoint rule on an `m x m` subgrid of the cube. The
//! modulus `omega(f, t)` is a supremum over all cubes of side `< t` inside a
//! region; we estimate it from below by a seeded family per dyadic scale:
//! grid cubes, a band of cubes near the region's features, jittered cubes of
//! random position and size, and any cubes the region asks for explicitly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{contains_cube, DomainOracle};
use crate::dyadic::{concentric_subcube, Box, Point, DIM};
use crate::error::{Error, Result};
use crate::field::Field;

pub const DEFAULT_M: usize = 16;

/// Values of `f` at the `m^2` midpoint nodes of `q`.
pub fn samples(f: &dyn Field, q: &Box, m: usize) -> Result<Vec<f64>> {
    let h = q.side / m as f64;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        let x = q.lower[0] + (i as f64 + 0.5) * h;
        for j in 0..m {
            let p = [x, q.lower[1] + (j as f64 + 0.5) * h];
            let v = f.eval(&p);
            if !v.is_finite() {
                return Err(Error::Evaluation { at: p, msg: format!("non-finite value {v}") });
            }
            out.push(v);
        }
    }
    Ok(out)
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Usage("quadrature order m must be at least 1".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn cube_average(f: &dyn Field, q: &Box, m: usize) -> Result<f64> {
    check_m(m)?;
    if let Some(a) = f.exact_average(q) {
        return Ok(a);
    }
    Ok(mean(&samples(f, q, m)?))
}

/// `avg_Q |f - f_Q|`.
pub fn mean_oscillation(f: &dyn Field, q: &Box, m: usize) -> Result<f64> {
    check_m(m)?;
    let v = samples(f, q, m)?;
    let avg = f.exact_average(q).unwrap_or_else(|| mean(&v));
    Ok(v.iter().map(|x| (x - avg).abs()).sum::<f64>() / v.len() as f64)
}

/// `avg_Q avg_Q |f(x) - f(y)|`, in `O(N log N)` from sorted samples.
pub fn double_oscillation(f: &dyn Field, q: &Box, m: usize) -> Result<f64> {
    check_m(m)?;
    let mut v = samples(f, q, m)?;
    Ok(pairwise_mean_abs_diff(&mut v))
}

fn pairwise_mean_abs_diff(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let s: f64 = v.iter().enumerate().map(|(i, x)| (2.0 * i as f64 - n + 1.0) * x).sum();
    2.0 * s / (n * n)
}

/// Which cube family the supremum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `Q` inside the region, mean oscillation.
    Subcube,
    /// `2Q` inside the region, double-integral oscillation.
    Interior,
}

/// A set over which oscillations are taken.
pub trait OscillationRegion: Sync {
    /// Cube containing the region; its dyadic subdivisions give the scales.
    fn bounding_box(&self) -> Box;
    /// `q` lies in the region.
    fn admits(&self, q: &Box) -> bool;
    /// Lower bound on the distance from `q` to where the sampled function
    /// varies fastest. Drives the band refinement.
    fn feature_gap(&self, q: &Box) -> f64;
    /// The sampled function is known to vanish identically on `q`.
    fn is_trivial(&self, _q: &Box) -> bool {
        false
    }
    /// Additional cubes of side at least `min_scale` to evaluate.
    fn extra_cubes(&self, _min_scale: f64) -> Vec<Box> {
        Vec::new()
    }
}

/// Cubes inside a domain; features are on its boundary.
pub struct DomainRegion<'a>(pub &'a dyn DomainOracle);

impl OscillationRegion for DomainRegion<'_> {
    fn bounding_box(&self) -> Box {
        self.0.bounding_box()
    }

    fn admits(&self, q: &Box) -> bool {
        contains_cube(self.0, q)
    }

    fn feature_gap(&self, q: &Box) -> f64 {
        self.0.boundary_gap(q)
    }
}

/// Subcubes of a single closed cube; features on its boundary.
pub struct CubeRegion(pub Box);

impl OscillationRegion for CubeRegion {
    fn bounding_box(&self) -> Box {
        self.0
    }

    fn admits(&self, q: &Box) -> bool {
        self.0.contains_box(q)
    }

    fn feature_gap(&self, q: &Box) -> f64 {
        square_contour_gap(&self.0, q)
    }
}

/// Subcubes of a cube, with features on the boundaries of the concentric
/// cubes at the given depths below its boundary.
pub struct LayeredCubeRegion {
    pub cube: Box,
    pub depths: Vec<f64>,
}

impl OscillationRegion for LayeredCubeRegion {
    fn bounding_box(&self) -> Box {
        self.cube
    }

    fn admits(&self, q: &Box) -> bool {
        self.cube.contains_box(q)
    }

    fn feature_gap(&self, q: &Box) -> f64 {
        self.depths
            .iter()
            .filter(|&&d| 2.0 * d < self.cube.side)
            .map(|&d| {
                let inner = Box::centered(self.cube.center(), self.cube.side - 2.0 * d);
                square_contour_gap(&inner, q)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance between the cube `q` and the boundary of the cube `s`.
pub fn square_contour_gap(s: &Box, q: &Box) -> f64 {
    if s.contains_box(q) {
        (0..DIM)
            .map(|k| (q.lower[k] - s.lower[k]).min(s.lower[k] + s.side - q.lower[k] - q.side))
            .fold(f64::INFINITY, f64::min)
    } else if !s.intersects(q) {
        let mut gaps = [0.0; DIM];
        for k in 0..DIM {
            gaps[k] = (s.lower[k] - q.lower[k] - q.side).max(q.lower[k] - s.lower[k] - s.side).max(0.0);
        }
        crate::dyadic::Metric::L2.norm(&gaps)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Quadrature nodes per axis.
    pub m: usize,
    /// Jittered cubes per scale.
    pub jitter: usize,
    /// Grid cubes per scale and lattice before random subsampling kicks in.
    pub grid_cap: usize,
    /// Band cubes per scale before random subsampling kicks in.
    pub band_cap: usize,
    /// Band half-width in units of the scale.
    pub band_width: f64,
    /// Finest scale; `0` means `bounding side * 2^-10`.
    pub min_scale: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { m: DEFAULT_M, jitter: 64, grid_cap: 2048, band_cap: 2048, band_width: 2.0, min_scale: 0.0, seed: 0 }
    }
}

impl SamplerConfig {
    /// Dyadic scales `side 2^-k`, coarse to fine, down to `min_scale`.
    pub fn scales(&self, bbox: &Box) -> Vec<f64> {
        let floor = if self.min_scale > 0.0 { self.min_scale } else { bbox.side * 2f64.powi(-10) };
        let mut out = vec![bbox.side];
        while out.last().unwrap() / 2.0 >= floor * (1.0 - 1e-12) {
            out.push(out.last().unwrap() / 2.0);
        }
        out
    }

    /// Default breakpoints: twice each dyadic scale, ascending.
    pub fn default_t_grid(&self, bbox: &Box) -> Vec<f64> {
        let mut t: Vec<f64> = self.scales(bbox).iter().map(|s| 2.0 * s).collect();
        t.reverse();
        t
    }
}

/// One sampled cube and its oscillations.
#[derive(Debug, Clone, Copy)]
pub struct CubeSample {
    pub cube: Box,
    pub subcube: f64,
    /// `None` when `2Q` is not in the region.
    pub interior: Option<f64>,
}

/// The seeded cube family for a region.
pub fn candidate_cubes(region: &dyn OscillationRegion, cfg: &SamplerConfig) -> Vec<Box> {
    let bbox = region.bounding_box();
    let scales = cfg.scales(&bbox);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();

    // grid cubes, on the dyadic lattice and on the lattice shifted by half
    // a cell, so that cubes straddling dyadic lines are represented
    for (k, &s) in scales.iter().enumerate() {
        for shift in [0.0, 0.5] {
            let n = (1i64 << k) - if shift > 0.0 { 1 } else { 0 };
            let cell = |i: i64, j: i64| Box {
                lower: [bbox.lower[0] + (i as f64 + shift) * s, bbox.lower[1] + (j as f64 + shift) * s],
                side: s,
            };
            if (n * n) as usize <= cfg.grid_cap {
                for i in 0..n {
                    for j in 0..n {
                        out.push(cell(i, j));
                    }
                }
            } else {
                for _ in 0..cfg.grid_cap {
                    out.push(cell(rng.gen_range(0..n), rng.gen_range(0..n)));
                }
            }
        }
    }

    // band: quadtree descent towards features, subsampled per level
    let mut level = vec![bbox];
    for &s in scales.iter().skip(1) {
        let mut next: Vec<Box> =
            level.iter().flat_map(children).filter(|c| region.feature_gap(c) <= cfg.band_width * s).collect();
        if next.len() > cfg.band_cap {
            next.shuffle(&mut rng);
            next.truncate(cfg.band_cap);
            next.sort_by(|a, b| a.lower.partial_cmp(&b.lower).unwrap());
        }
        out.extend(next.iter().copied());
        // offset copies reach boundaries that run along dyadic lines
        for b in &next {
            let off = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
            out.push(b.translated(&[off[0] * s, off[1] * s]));
        }
        level = next;
    }

    // jitter
    for &s in &scales {
        for _ in 0..cfg.jitter {
            let side = s * (0.5 + 0.5 * rng.gen::<f64>());
            let room = bbox.side - side;
            let lower = [bbox.lower[0] + rng.gen::<f64>() * room, bbox.lower[1] + rng.gen::<f64>() * room];
            out.push(Box { lower, side });
        }
    }

    let floor = *scales.last().unwrap();
    out.extend(region.extra_cubes(floor));
    out
}

fn children(b: &Box) -> [Box; 4] {
    let h = b.side / 2.0;
    let [x, y] = b.lower;
    [
        Box { lower: [x, y], side: h },
        Box { lower: [x + h, y], side: h },
        Box { lower: [x, y + h], side: h },
        Box { lower: [x + h, y + h], side: h },
    ]
}

/// Oscillations of `f` on every admissible candidate cube.
pub fn sample_oscillations(
    f: &dyn Field,
    region: &dyn OscillationRegion,
    cfg: &SamplerConfig,
) -> Result<Vec<CubeSample>> {
    check_m(cfg.m)?;
    let cubes = candidate_cubes(region, cfg);
    let results: Vec<Result<Option<CubeSample>>> = cubes
        .par_iter()
        .map(|q| {
            if !region.admits(q) {
                return Ok(None);
            }
            let interior_ok = concentric_subcube(q, 2.0).map(|q2| region.admits(&q2)).unwrap_or(false);
            if region.is_trivial(q) {
                return Ok(Some(CubeSample { cube: *q, subcube: 0.0, interior: interior_ok.then_some(0.0) }));
            }
            let wrap = |e: Error| Error::Quadrature {
                cube: format!("{:?} side {}", q.lower, q.side),
                source: std::boxed::Box::new(e),
            };
            let mut v = samples(f, q, cfg.m).map_err(wrap)?;
            let avg = f.exact_average(q).unwrap_or_else(|| mean(&v));
            let sub = v.iter().map(|x| (x - avg).abs()).sum::<f64>() / v.len() as f64;
            let int = interior_ok.then(|| pairwise_mean_abs_diff(&mut v));
            Ok(Some(CubeSample { cube: *q, subcube: sub, interior: int }))
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        if let Some(s) = r? {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    /// `None` when no admissible cube of side `< t` was sampled.
    pub value: Option<f64>,
    /// Cube attaining the value.
    pub witness: Option<Box>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub cubes_sampled: usize,
    pub seed: u64,
    pub m: usize,
}

/// Sampled modulus of mean oscillation; nondecreasing in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub mode: Mode,
    pub points: Vec<CurvePoint>,
    pub meta: CurveMeta,
}

impl ModulusCurve {
    /// Build from cube samples with cummax over ascending `t`.
    pub fn from_samples(samples: &[CubeSample], t_grid: &[f64], mode: Mode, cfg: &SamplerConfig) -> Result<Self> {
        if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("t grid must be positive and strictly ascending".into()));
        }
        let mut best: Vec<Option<(f64, Box)>> = vec![None; t_grid.len()];
        for s in samples {
            let v = match mode {
                Mode::Subcube => Some(s.subcube),
                Mode::Interior => s.interior,
            };
            let Some(v) = v else { continue };
            let first = t_grid.partition_point(|&t| t <= s.cube.side);
            if first < t_grid.len() {
                let slot = &mut best[first];
                if slot.is_none_or(|(b, _)| v > b) {
                    *slot = Some((v, s.cube));
                }
            }
        }
        let mut run: Option<(f64, Box)> = None;
        let mut points = Vec::with_capacity(t_grid.len());
        for (t, b) in t_grid.iter().zip(best) {
            if let Some((v, q)) = b {
                if run.is_none_or(|(r, _)| v > r) {
                    run = Some((v, q));
                }
            }
            points.push(CurvePoint { t: *t, value: run.map(|r| r.0), witness: run.map(|r| r.1) });
        }
        Ok(Self { mode, points, meta: CurveMeta { cubes_sampled: samples.len(), seed: cfg.seed, m: cfg.m } })
    }

    /// Value at the largest breakpoint `<= t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let i = self.points.partition_point(|p| p.t <= t);
        if i == 0 {
            None
        } else {
            self.points[i - 1].value
        }
    }

    pub fn sup(&self) -> f64 {
        self.points.iter().filter_map(|p| p.value).fold(0.0, f64::max)
    }

    /// Present `(t, value)` pairs.
    pub fn present(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter_map(|p| p.value.map(|v| (p.t, v))).collect()
    }
}

/// `omega(f, t)` over a region. `t_grid = None` uses the sampler's default.
pub fn modulus(
    f: &dyn Field,
    region: &dyn OscillationRegion,
    t_grid: Option<&[f64]>,
    cfg: &SamplerConfig,
    mode: Mode,
) -> Result<ModulusCurve> {
    let s = sample_oscillations(f, region, cfg)?;
    let default;
    let grid = match t_grid {
        Some(g) => g,
        None => {
            default = cfg.default_t_grid(&region.bounding_box());
            &default
        }
    };
    ModulusCurve::from_samples(&s, grid, mode, cfg)
}

/// Subcube and interior curves from one shared cube family.
pub fn modulus_pair(
    f: &dyn Field,
    region: &dyn OscillationRegion,
    t_grid: Option<&[f64]>,
    cfg: &SamplerConfig,
) -> Result<(ModulusCurve, ModulusCurve)> {
    let s = sample_oscillations(f, region, cfg)?;
    let default;
    let grid = match t_grid {
        Some(g) => g,
        None => {
            default = cfg.default_t_grid(&region.bounding_box());
            &default
        }
    };
    Ok((
        ModulusCurve::from_samples(&s, grid, Mode::Subcube, cfg)?,
        ModulusCurve::from_samples(&s, grid, Mode::Interior, cfg)?,
    ))
}

/// `||f||_BMO` over a region: the subcube modulus at the bounding diameter.
pub fn bmo_norm(f: &dyn Field, region: &dyn OscillationRegion, cfg: &SamplerConfig) -> Result<f64> {
    let s = sample_oscillations(f, region, cfg)?;
    Ok(s.iter().map(|c| c.subcube).fold(0.0, f64::max))
}

/// Pointwise clamp to `[lo, hi]`.
pub struct Truncated<F> {
    pub inner: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Field> Field for Truncated<F> {
    fn eval(&self, x: &Point) -> f64 {
        self.inner.eval(x).clamp(self.lo, self.hi)
    }
}

pub fn truncate<F: Field>(f: F, lo: f64, hi: f64) -> Result<Truncated<F>> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Usage(format!("truncation bounds must satisfy lo <= hi, got [{lo}, {hi}]")));
    }
    Ok(Truncated { inner: f, lo, hi })
}

/// Piecewise-linear concave function, constant after its last vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcaveMajorant {
    pub vertices: Vec<(f64, f64)>,
}

impl ConcaveMajorant {
    pub fn value(&self, t: f64) -> f64 {
        let v = &self.vertices;
        if t <= v[0].0 {
            return v[0].1;
        }
        for w in v.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if t == x1 {
                return y1;
            }
            if t < x1 {
                return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
            }
        }
        v.last().unwrap().1
    }

    pub fn sup(&self) -> f64 {
        self.vertices.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

/// Upper concave envelope of `{(0,0)} ∪ points`, flat after its maximum.
pub fn least_concave_majorant(points: &[(f64, f64)]) -> ConcaveMajorant {
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    pts.extend(points.iter().copied().filter(|p| p.0 > 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let top = hull.iter().enumerate().fold(0, |best, (i, p)| if p.1 > hull[best].1 { i } else { best });
    hull.truncate(top + 1);
    ConcaveMajorant { vertices: hull }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmoVerdict {
    pub vanishing: bool,
    pub value_at_t_small: Option<f64>,
    pub epsilon: f64,
    pub t_small: f64,
    pub note: String,
}

/// Numerical proxy for `omega(f, t) -> 0`: the curve is below `epsilon` at
/// `t_small`.
pub fn is_vmo(curve: &ModulusCurve, epsilon: f64, t_small: f64) -> VmoVerdict {
    let v = curve.value_at(t_small);
    VmoVerdict {
        vanishing: v.is_some_and(|v| v < epsilon),
        value_at_t_small: v,
        epsilon,
        t_small,
        note: "numerical proxy: compares one sampled breakpoint with epsilon, not the limit t -> 0".into(),
    }
}
