//! The extension operator for VMO functions on a uniform domain.
//!
//! With `S_L` a largest interior Whitney cube and `S_i` the matching cube of
//! each exterior cube `S'_i` with `l(S'_i) <= L`:
//!
//! ```text
//! F(x) = f(x) - f_{S_L}                  x in Omega
//!      = lambda_i psi^{mu_i}_{S'_i}(x)    x in S'_i
//!      = 0                               elsewhere
//! lambda_i = f_{S_i} - f_{S_L},   mu_i = 1 + log2(L / l(S'_i))
//! ```
//!
//! The BMO norm on the whole plane is approximated on a finite box around
//! the support, with an analytic bound for larger cubes.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{probe_cubes, BumpSpec};
use crate::domain::DomainOracle;
use crate::dyadic::{self, concentric_subcube, Box, Metric, Point};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::metrics::d1;
use crate::oscillation::{
    cube_average, modulus, sample_oscillations, DomainRegion, Mode, ModulusCurve, OscillationRegion, SamplerConfig,
};
use crate::whitney::WhitneyDecomposition;

/// Which matching cube feeds `lambda_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingChoice {
    #[default]
    Nearest,
    /// Second nearest admissible cube, falling back to the nearest.
    SecondNearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuildOptions {
    pub matching: MatchingChoice,
    /// Override for the normalising cube; must have side `L`.
    pub s_l: Option<usize>,
    /// Quadrature nodes per axis; `0` means the default.
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOperator {
    pub s_l: usize,
    pub base_constant: f64,
    /// `E` index feeding each `E'` cube.
    pub matching: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub mus: Vec<u32>,
    pub m: usize,
}

/// `mu = max(1, round(1 + log2(L / l)))`.
pub fn mu_for(big_l: f64, side: f64) -> u32 {
    (1.0 + (big_l / side).log2()).round().max(1.0) as u32
}

/// Lexicographically first cube of side `L`.
pub fn largest_cube(dec: &WhitneyDecomposition) -> usize {
    (0..dec.cubes_e.len()).find(|&i| dec.side_e(i) == dec.big_l).expect("nonempty decomposition")
}

pub fn build(f: &dyn Field, dec: &WhitneyDecomposition) -> Result<ExtensionOperator> {
    build_with(f, dec, BuildOptions::default())
}

pub fn build_with(f: &dyn Field, dec: &WhitneyDecomposition, opts: BuildOptions) -> Result<ExtensionOperator> {
    let m = if opts.m == 0 { crate::oscillation::DEFAULT_M } else { opts.m };
    let s_l = match opts.s_l {
        None => largest_cube(dec),
        Some(i) if i < dec.cubes_e.len() && dec.side_e(i) == dec.big_l => i,
        Some(i) => return Err(Error::Usage(format!("E cube {i} does not have the largest sidelength"))),
    };
    let matching: Vec<usize> = match opts.matching {
        MatchingChoice::Nearest => dec.matching.clone(),
        MatchingChoice::SecondNearest => {
            dec.matching.iter().zip(&dec.matching_alt).map(|(&p, a)| a.unwrap_or(p)).collect()
        }
    };
    let mut needed: Vec<usize> = matching.clone();
    needed.push(s_l);
    needed.sort_unstable();
    needed.dedup();
    let averages: HashMap<usize, f64> = needed
        .par_iter()
        .map(|&i| {
            let q = dec.box_e(i);
            cube_average(f, &q, m).map(|a| (i, a)).map_err(|e| Error::Quadrature {
                cube: format!("E[{i}] at {:?} side {}", q.lower, q.side),
                source: std::boxed::Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let base_constant = averages[&s_l];
    let lambdas = matching.iter().map(|i| averages[i] - base_constant).collect();
    let mus = (0..dec.cubes_eprime.len()).map(|i| mu_for(dec.big_l, dec.side_eprime(i))).collect();
    Ok(ExtensionOperator { s_l, base_constant, matching, lambdas, mus, m })
}

impl ExtensionOperator {
    pub fn bump(&self, dec: &WhitneyDecomposition, i: usize) -> BumpSpec {
        BumpSpec { cube: dec.box_eprime(i), mu: self.mus[i] }
    }

    /// `F(x)`; on the boundary of `Omega` the exterior value is used.
    pub fn evaluate(&self, d: &dyn DomainOracle, dec: &WhitneyDecomposition, f: &dyn Field, x: &Point) -> f64 {
        if d.contains(x) {
            f.eval(x) - self.base_constant
        } else if let Some(i) = dec.locate_eprime(x) {
            self.lambdas[i] * self.bump(dec, i).value(x)
        } else {
            0.0
        }
    }

    /// `F + f_{S_L}`: equal to `f` on `Omega`.
    pub fn evaluate_shifted(&self, d: &dyn DomainOracle, dec: &WhitneyDecomposition, f: &dyn Field, x: &Point) -> f64 {
        self.evaluate(d, dec, f, x) + self.base_constant
    }

    pub fn field<'a>(
        &'a self,
        d: &'a dyn DomainOracle,
        dec: &'a WhitneyDecomposition,
        f: &'a dyn Field,
    ) -> ExtendedField<'a> {
        ExtendedField { op: self, d, dec, f, shifted: false }
    }

    /// Smallest distance from the support of a bump on a cube meeting the
    /// boundary of `Omega~` to that boundary: `min 2^(-mu-2) l(S')`.
    pub fn support_margin(&self, dec: &WhitneyDecomposition) -> Option<f64> {
        dec.omega_tilde_boundary()
            .into_iter()
            .map(|i| 2f64.powi(-(self.mus[i] as i32) - 2) * dec.side_eprime(i))
            .reduce(f64::min)
    }
}

/// `F` as a [`Field`].
pub struct ExtendedField<'a> {
    pub op: &'a ExtensionOperator,
    pub d: &'a dyn DomainOracle,
    pub dec: &'a WhitneyDecomposition,
    pub f: &'a dyn Field,
    pub shifted: bool,
}

impl Field for ExtendedField<'_> {
    fn eval(&self, x: &Point) -> f64 {
        let v = self.op.evaluate(self.d, self.dec, self.f, x);
        if self.shifted {
            v + self.op.base_constant
        } else {
            v
        }
    }
}

/// Centred box of side `4 diam(B~)` standing in for the plane.
pub fn eval_box(dec: &WhitneyDecomposition) -> Box {
    Box::centered(dec.bbox.center(), 4.0 * dec.bbox.diam())
}

/// Cubes of the evaluation box. `F` vanishes off the bounding box, and its
/// sharpest features sit on the boundary of `Omega` and on the edges of the
/// bump supports, which are fed in as extra cubes.
pub struct ExtensionRegion<'a> {
    pub d: &'a dyn DomainOracle,
    pub dec: &'a WhitneyDecomposition,
    pub op: &'a ExtensionOperator,
    pub eval_box: Box,
    /// Cap on `E'` cubes used for extra cubes.
    pub extra_cap: usize,
}

impl<'a> ExtensionRegion<'a> {
    pub fn new(d: &'a dyn DomainOracle, dec: &'a WhitneyDecomposition, op: &'a ExtensionOperator) -> Self {
        Self { d, dec, op, eval_box: eval_box(dec), extra_cap: 1024 }
    }
}

impl OscillationRegion for ExtensionRegion<'_> {
    fn bounding_box(&self) -> Box {
        self.eval_box
    }

    fn admits(&self, q: &Box) -> bool {
        self.eval_box.contains_box(q)
    }

    fn feature_gap(&self, q: &Box) -> f64 {
        if q.intersects(&self.dec.bbox) {
            self.d.boundary_gap(q)
        } else {
            dyadic::dist(q, &self.dec.bbox, Metric::L2)
        }
    }

    fn is_trivial(&self, q: &Box) -> bool {
        !q.intersects(&self.dec.bbox)
    }

    fn extra_cubes(&self, min_scale: f64) -> Vec<Box> {
        let n = self.dec.cubes_eprime.len();
        let stride = n.div_ceil(self.extra_cap.max(1)).max(1);
        let mut out = Vec::new();
        for i in (0..n).step_by(stride) {
            if self.op.lambdas[i] == 0.0 {
                continue;
            }
            out.extend(probe_cubes(&self.op.bump(self.dec, i), min_scale));
        }
        out
    }
}

/// `||F||_BMO` on the evaluation box, the subcube modulus there, and the
/// tail bound `2 ||F||_1 / |Q|` for cubes larger than the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxNorm {
    pub bmo: f64,
    pub tail_bound: f64,
    pub curve: ModulusCurve,
}

pub fn box_modulus(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    op: &ExtensionOperator,
    f: &dyn Field,
    cfg: &SamplerConfig,
    t_grid: Option<&[f64]>,
) -> Result<BoxNorm> {
    let region = ExtensionRegion::new(d, dec, op);
    let field = op.field(d, dec, f);
    let curve = modulus(&field, &region, t_grid, cfg, Mode::Subcube)?;
    let bmo = curve.sup();
    // ||F||_1 over the bounding box, F vanishing outside it
    let abs = crate::field::FnField(|x: &Point| field.eval(x).abs());
    let l1 = cube_average(&abs, &dec.bbox, 256)? * dec.bbox.volume();
    let tail_bound = 2.0 * l1 / region.eval_box.volume();
    Ok(BoxNorm { bmo, tail_bound, curve })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub function: String,
    pub norm_f: f64,
    pub norm_extension: f64,
    pub tail_bound: f64,
    /// `None` when `||f||` vanishes (constants are exempt).
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub rows: Vec<BatteryRow>,
    /// Largest ratio over the battery: the empirical operator norm.
    pub max_ratio: Option<f64>,
}

pub fn boundedness_report(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    battery: &[(String, &dyn Field)],
    cfg: &SamplerConfig,
) -> Result<BoundednessReport> {
    let mut rows = Vec::new();
    for (name, f) in battery {
        let op = build_with(*f, dec, BuildOptions { m: cfg.m, ..Default::default() })?;
        let norm_f = crate::oscillation::bmo_norm(*f, &DomainRegion(d), cfg)?;
        let bn = box_modulus(d, dec, &op, *f, cfg, None)?;
        let ratio = (norm_f > 1e-12).then(|| bn.bmo / norm_f);
        rows.push(BatteryRow {
            function: name.clone(),
            norm_f,
            norm_extension: bn.bmo,
            tail_bound: bn.tail_bound,
            ratio,
        });
    }
    let max_ratio = rows.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok(BoundednessReport { rows, max_ratio })
}

/// Maximum of a quantity per `E'` sidelength bucket, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTrend {
    pub sides: Vec<f64>,
    pub values: Vec<f64>,
    /// Each bucket is at most `1 + slack` times the next larger one.
    pub nonincreasing: bool,
}

/// Relative slack allowed between consecutive buckets in trend checks.
pub const TREND_SLACK: f64 = 0.1;

fn bucket_trend(entries: impl IntoIterator<Item = (f64, f64)>) -> BucketTrend {
    let mut buckets: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (side, v) in entries {
        let key = -(side.log2().round() as i64);
        let e = buckets.entry(key).or_insert((side, 0.0));
        e.1 = e.1.max(v);
    }
    let (sides, values): (Vec<f64>, Vec<f64>) = buckets.into_values().unzip();
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_SLACK) + 1e-12);
    BucketTrend { sides, values, nonincreasing }
}

/// Hypotheses of the gluing estimate, checked on a built operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `mu_i >= log2(L / l_i) + 1` for every `E'` cube.
    pub mu_lower_bound: bool,
    /// `|mu_i - mu_j| <= 2` for adjacent `E'` cubes.
    pub mu_adjacent: bool,
    pub max_adjacent_mu_gap: u32,
    /// `|lambda_i| / mu_i` by bucket.
    pub lambda_over_mu: BucketTrend,
    /// `|lambda_i - lambda_j|` over adjacent pairs by the smaller side.
    pub lambda_adjacent: BucketTrend,
    /// `|f_{S_i} - F_{S'_i}|` by bucket.
    pub matching_gap: BucketTrend,
}

pub fn hypothesis_report(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    op: &ExtensionOperator,
    f: &dyn Field,
) -> Result<HypothesisReport> {
    let n = dec.cubes_eprime.len();
    let mu_lower_bound = (0..n).all(|i| op.mus[i] as f64 >= (dec.big_l / dec.side_eprime(i)).log2() + 1.0 - 1e-12);
    let max_adjacent_mu_gap =
        dec.adjacency_eprime.edges().map(|(i, j)| op.mus[i].abs_diff(op.mus[j])).max().unwrap_or(0);
    let lambda_over_mu = bucket_trend((0..n).map(|i| (dec.side_eprime(i), op.lambdas[i].abs() / op.mus[i] as f64)));
    let lambda_adjacent = bucket_trend(
        dec.adjacency_eprime
            .edges()
            .map(|(i, j)| (dec.side_eprime(i).min(dec.side_eprime(j)), (op.lambdas[i] - op.lambdas[j]).abs())),
    );
    let field = op.field(d, dec, f);
    let gaps: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let f_s = cube_average(f, &dec.box_e(op.matching[i]), op.m)? - op.base_constant;
            let f_sp = cube_average(&field, &dec.box_eprime(i), op.m)?;
            Ok((dec.side_eprime(i), (f_s - f_sp).abs()))
        })
        .collect::<Result<_>>()?;
    Ok(HypothesisReport {
        mu_lower_bound,
        mu_adjacent: max_adjacent_mu_gap <= 2,
        max_adjacent_mu_gap,
        lambda_over_mu,
        lambda_adjacent,
        matching_gap: bucket_trend(gaps),
    })
}

/// Sensitivity of `||F||` to the choices made while building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub norm: f64,
    pub norm_second_matching: f64,
    /// `omega_Omega(f, 2 L_match)`, `L_match` the largest matching side.
    pub omega_matching: f64,
    /// `|change| / omega_matching`.
    pub matching_constant: Option<f64>,
    /// Second cube of side `L`, if there is one.
    pub alternate_s_l: Option<usize>,
    pub norm_alternate_s_l: Option<f64>,
    /// `d1(S_L, S_L') omega_Omega(f, 2 L)`.
    pub chain_bound: Option<f64>,
    pub s_l_constant: Option<f64>,
}

pub fn robustness_report(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    f: &dyn Field,
    f_curve: &ModulusCurve,
    cfg: &SamplerConfig,
) -> Result<RobustnessReport> {
    let opts = BuildOptions { m: cfg.m, ..Default::default() };
    let op = build_with(f, dec, opts)?;
    let norm = box_modulus(d, dec, &op, f, cfg, None)?.bmo;
    let alt = build_with(f, dec, BuildOptions { matching: MatchingChoice::SecondNearest, ..opts })?;
    let norm_second_matching = box_modulus(d, dec, &alt, f, cfg, None)?.bmo;
    let l_match = alt.matching.iter().chain(&op.matching).map(|&i| dec.side_e(i)).fold(0.0, f64::max);
    let omega_matching = f_curve.value_at(2.0 * l_match).unwrap_or(0.0);
    let per = |diff: f64, w: f64| if w > 0.0 { Some(diff / w) } else { (diff < 1e-12).then_some(0.0) };
    let matching_constant = per((norm - norm_second_matching).abs(), omega_matching);

    let alternate_s_l = (0..dec.cubes_e.len()).find(|&i| i != op.s_l && dec.side_e(i) == dec.big_l);
    let (mut norm_alternate_s_l, mut chain_bound, mut s_l_constant) = (None, None, None);
    if let Some(j) = alternate_s_l {
        let op2 = build_with(f, dec, BuildOptions { s_l: Some(j), ..opts })?;
        let n2 = box_modulus(d, dec, &op2, f, cfg, None)?.bmo;
        let chain = d1(dec, op.s_l, j)?;
        let bound = chain.length as f64 * f_curve.value_at(2.0 * dec.big_l).unwrap_or(0.0);
        norm_alternate_s_l = Some(n2);
        chain_bound = Some(bound);
        s_l_constant = per((norm - n2).abs(), bound);
    }
    Ok(RobustnessReport {
        norm,
        norm_second_matching,
        omega_matching,
        matching_constant,
        alternate_s_l,
        norm_alternate_s_l,
        chain_bound,
        s_l_constant,
    })
}

/// Row-major samples of `F` on a `grid x grid` lattice of cell centres of
/// `region`.
pub fn sample_grid(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    op: &ExtensionOperator,
    f: &dyn Field,
    region: &Box,
    grid: usize,
) -> Vec<(Point, f64)> {
    let h = region.side / grid as f64;
    (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let (r, c) = (k / grid, k % grid);
            let x = [region.lower[0] + (c as f64 + 0.5) * h, region.lower[1] + (grid - 1 - r) as f64 * h + 0.5 * h];
            (x, op.evaluate(d, dec, f, &x))
        })
        .collect()
}

/// Plateau cube of an `E'` cube: the bump equals one there.
pub fn plateau(dec: &WhitneyDecomposition, i: usize) -> Box {
    concentric_subcube(&dec.box_eprime(i), 0.25).expect("positive factor")
}

/// Convenience: the sampled modulus of `F` over the evaluation box together
/// with the sampled oscillations of `f` inside `Omega`.
pub fn domain_and_box_curves(
    d: &dyn DomainOracle,
    dec: &WhitneyDecomposition,
    op: &ExtensionOperator,
    f: &dyn Field,
    cfg: &SamplerConfig,
) -> Result<(ModulusCurve, ModulusCurve)> {
    let inside = sample_oscillations(f, &DomainRegion(d), cfg)?;
    let t = cfg.default_t_grid(&eval_box(dec));
    let dom = ModulusCurve::from_samples(&inside, &t, Mode::Subcube, cfg)?;
    let bx = box_modulus(d, dec, op, f, cfg, Some(&t))?.curve;
    Ok((dom, bx))
}
