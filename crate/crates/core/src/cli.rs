//! The `vmoext` command line: argument definitions and dispatch.

use std::io::Write;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::adversarial::{
    adversarial_bmo, build_adversarial, pair_sampler, random_pairs, spearman, straddles, witness_pair,
};
use crate::domain::{builtin, AnalyticDomain, DomainOracle, BUILTIN_NAMES};
use crate::dyadic::d2;
use crate::error::{Error, Result};
use crate::extension::{box_modulus, build_with, eval_box, hypothesis_report, sample_grid, BuildOptions};
use crate::field::{Field, TestFunction};
use crate::metrics::{estimate_kappa, KappaSampler};
use crate::oscillation::{bmo_norm, least_concave_majorant, modulus_pair, DomainRegion, SamplerConfig};
use crate::whitney::{decompose, WhitneyDecomposition};

/// JSON schemas of each subcommand's JSON output, by subcommand name.
pub const SCHEMAS: [(&str, &str); 5] = [
    ("whitney", include_str!("../schemas/whitney.schema.json")),
    ("kappa", include_str!("../schemas/kappa.schema.json")),
    ("modulus", include_str!("../schemas/modulus.schema.json")),
    ("extend", include_str!("../schemas/extend.schema.json")),
    ("adversarial", include_str!("../schemas/adversarial.schema.json")),
];

pub fn schema(subcommand: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(n, _)| *n == subcommand).map(|(_, s)| *s)
}

#[derive(Debug, Parser)]
#[command(
    name = "vmoext",
    version,
    about = "Whitney decompositions, Jones constants, oscillation moduli and VMO extension on planar domains"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, env = "VMOEXT_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Whitney decomposition of a domain and of its complement
    Whitney(WhitneyArgs),
    /// Sampled Jones constant d1/d2 at one or more resolutions
    Kappa(KappaArgs),
    /// Modulus of mean oscillation of a test function
    Modulus(ModulusArgs),
    /// Extend a test function to a neighbourhood and measure the extension
    Extend(ExtendArgs),
    /// Functions separating Whitney cubes with bounded norm
    Adversarial(AdversarialArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DomainArgs {
    /// square, disk, l-shape, annulus-sector, slit-disk or comb
    #[arg(long, default_value = "disk")]
    pub domain: String,
    /// Radius of the disk or slit disk
    #[arg(long)]
    pub radius: Option<f64>,
    /// Side of the square
    #[arg(long)]
    pub side: Option<f64>,
    /// Inner radius of the annulus sector
    #[arg(long)]
    pub inner: Option<f64>,
    /// Outer radius of the annulus sector
    #[arg(long)]
    pub outer: Option<f64>,
    /// Opening angle of the annulus sector, radians
    #[arg(long)]
    pub angle: Option<f64>,
    /// Number of rooms of the comb
    #[arg(long)]
    pub rooms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WhitneyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Finest refinement level
    #[arg(long, default_value_t = 8)]
    pub max_level: i32,
    /// JSON dump of both cube families ('-' for stdout)
    #[arg(long)]
    pub json: Option<String>,
    /// CSV cube list ('-' for stdout)
    #[arg(long)]
    pub csv: Option<String>,
    /// SVG cube map
    #[arg(long)]
    pub svg: Option<String>,
    /// Width of the SVG in pixels
    #[arg(long, default_value_t = 800)]
    pub pixels: u32,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Comma-separated refinement levels
    #[arg(long, value_delimiter = ',', default_value = "6,8")]
    pub max_level: Vec<i32>,
    /// Number of sampled pairs, or 'all' for every pair
    #[arg(long, default_value = "4096")]
    pub pairs: String,
    /// Seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV rows (level, kappa_hat, witness) ('-' for stdout)
    #[arg(long)]
    pub csv: Option<String>,
    /// JSON output ('-' for stdout)
    #[arg(long)]
    pub json: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModulusArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// const, coord1, halfstep, logdist, sqrtlogdist or bump:mu=K
    #[arg(long = "fn", default_value = "sqrtlogdist")]
    pub function: String,
    /// Smallest breakpoint; defaults to 2^-9 of the bounding side
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Quadrature nodes per axis
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV rows (t, omega_subcube, omega_interior) ('-' for stdout)
    #[arg(long)]
    pub csv: Option<String>,
    /// JSON output ('-' for stdout)
    #[arg(long)]
    pub json: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// const, coord1, halfstep, logdist, sqrtlogdist or bump:mu=K
    #[arg(long = "fn", default_value = "sqrtlogdist")]
    pub function: String,
    /// Finest refinement level
    #[arg(long, default_value_t = 8)]
    pub max_level: i32,
    /// Samples per axis of F over the evaluation box
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Quadrature nodes per axis
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row-major CSV of F on the grid
    #[arg(long)]
    pub out: Option<String>,
    /// JSON report: norms, ratio, support margin, hypothesis checks
    #[arg(long, visible_alias = "json")]
    pub report: Option<String>,
}

#[derive(Debug, Args)]
pub struct AdversarialArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Comma-separated refinement levels
    #[arg(long, value_delimiter = ',', default_value = "6,8")]
    pub max_level: Vec<i32>,
    /// 'auto' for the worst sampled d1/d2 pair, or a number of random pairs
    #[arg(long, default_value = "auto")]
    pub pairs: String,
    /// Quadrature nodes per axis
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report ('-' for stdout)
    #[arg(long, visible_alias = "json")]
    pub report: Option<String>,
    /// CSV, one row per pair and level
    #[arg(long)]
    pub csv: Option<String>,
}

/// Parse, run with the requested thread count, and map errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vmoext: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Whitney(a) => run_whitney(a),
        Command::Kappa(a) => run_kappa(a),
        Command::Modulus(a) => run_modulus(a),
        Command::Extend(a) => run_extend(a),
        Command::Adversarial(a) => run_adversarial(a),
    })
}

impl DomainArgs {
    pub fn build(&self) -> Result<Arc<dyn DomainOracle>> {
        let name = self.domain.replace('_', "-").to_ascii_lowercase();
        let allowed: &[&str] = match name.as_str() {
            "square" => &["side"],
            "disk" | "slit-disk" => &["radius"],
            "annulus-sector" => &["inner", "outer", "angle"],
            "comb" => &["rooms"],
            "l-shape" => &[],
            _ => {
                return Err(Error::Usage(format!(
                    "unknown domain '{}'; available: {}",
                    self.domain,
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
        let given = [
            ("radius", self.radius.is_some()),
            ("side", self.side.is_some()),
            ("inner", self.inner.is_some()),
            ("outer", self.outer.is_some()),
            ("angle", self.angle.is_some()),
            ("rooms", self.rooms.is_some()),
        ];
        for (flag, set) in given {
            if set && !allowed.contains(&flag) {
                return Err(Error::Usage(format!("--{flag} does not apply to {name}")));
            }
        }
        let positive = |flag: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Usage(format!("--{flag} must be positive, got {x}"))),
            _ => Ok(()),
        };
        for (flag, v) in [
            ("radius", self.radius),
            ("side", self.side),
            ("inner", self.inner),
            ("outer", self.outer),
            ("angle", self.angle),
        ] {
            positive(flag, v)?;
        }
        if !given.iter().any(|g| g.1) {
            return builtin(&name);
        }
        let d = match name.as_str() {
            "square" => AnalyticDomain::square(self.side.unwrap_or(1.0)),
            "disk" => AnalyticDomain::disk(self.radius.unwrap_or(1.0)),
            "slit-disk" => AnalyticDomain::slit_disk(self.radius.unwrap_or(1.0)),
            "annulus-sector" => {
                let (inner, outer) = (self.inner.unwrap_or(0.5), self.outer.unwrap_or(1.0));
                let angle = self.angle.unwrap_or(1.5 * std::f64::consts::PI);
                if inner >= outer {
                    return Err(Error::Usage(format!("--inner {inner} must be below --outer {outer}")));
                }
                if angle >= 2.0 * std::f64::consts::PI {
                    return Err(Error::Usage(format!("--angle {angle} must be below 2 pi")));
                }
                AnalyticDomain::annulus_sector(inner, outer, angle)
            }
            _ => {
                let rooms = self.rooms.unwrap_or(4);
                if rooms == 0 {
                    return Err(Error::Usage("--rooms must be at least 1".into()));
                }
                AnalyticDomain::comb(rooms)
            }
        };
        Ok(Arc::new(d))
    }
}

fn emit(path: &str, bytes: &[u8]) -> Result<()> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
    } else {
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > 256 {
        return Err(Error::Usage(format!("--m must be in 1..=256, got {m}")));
    }
    Ok(())
}

fn check_levels(levels: &[i32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Usage("--max-level needs at least one level".into()));
    }
    for &l in levels {
        if !(0..=14).contains(&l) {
            return Err(Error::Usage(format!("--max-level {l} outside 0..=14")));
        }
    }
    Ok(())
}

fn parse_fn(name: &str, d: &Arc<dyn DomainOracle>) -> Result<(TestFunction, Arc<dyn Field>)> {
    let t = TestFunction::parse(name)?;
    let f = t.instantiate(d.clone());
    Ok((t, f))
}

fn run_whitney(a: &WhitneyArgs) -> Result<()> {
    check_levels(&[a.max_level])?;
    let d = a.domain.build()?;
    let dec = decompose(d.as_ref(), a.max_level)?;
    let mut doc = dec.to_json();
    doc["audit"] = serde_json::to_value(dec.audit(d.as_ref()))?;
    if let Some(p) = &a.json {
        emit(p, &json_bytes(&doc)?)?;
    }
    if let Some(p) = &a.csv {
        emit(p, &csv_bytes(&["kind", "level", "x", "y", "side", "matching"], cube_rows(&dec))?)?;
    }
    if let Some(p) = &a.svg {
        emit(p, dec.to_svg(a.pixels).as_bytes())?;
    }
    if a.json.is_none() && a.csv.is_none() && a.svg.is_none() {
        emit("-", &json_bytes(&doc)?)?;
    }
    Ok(())
}

fn cube_rows(dec: &WhitneyDecomposition) -> Vec<(&'static str, i32, f64, f64, f64, Option<usize>)> {
    let e = (0..dec.cubes_e.len()).map(|i| {
        let b = dec.box_e(i);
        ("E", dec.cubes_e[i].level, b.lower[0], b.lower[1], b.side, None)
    });
    let ep = (0..dec.cubes_eprime.len()).map(|i| {
        let b = dec.box_eprime(i);
        ("E'", dec.cubes_eprime[i].level, b.lower[0], b.lower[1], b.side, Some(dec.matching[i]))
    });
    e.chain(ep).collect()
}

#[derive(Debug, Serialize)]
struct KappaRow {
    level: i32,
    kappa_hat: f64,
    pairs_evaluated: u64,
    i: usize,
    j: usize,
    d1: u32,
    d2: f64,
    x_i: f64,
    y_i: f64,
    x_j: f64,
    y_j: f64,
    straddles: bool,
}

fn kappa_sampler(pairs: &str, seed: u64) -> Result<KappaSampler> {
    if pairs == "all" {
        return Ok(KappaSampler::Exhaustive);
    }
    match pairs.parse::<usize>() {
        Ok(n) if n > 0 => Ok(KappaSampler::Stratified { pairs: n, seed }),
        _ => Err(Error::Usage(format!("--pairs must be a positive integer or 'all', got '{pairs}'"))),
    }
}

fn run_kappa(a: &KappaArgs) -> Result<()> {
    check_levels(&a.max_level)?;
    let sampler = kappa_sampler(&a.pairs, a.seed)?;
    let d = a.domain.build()?;
    let mut rows = Vec::new();
    for &lv in &a.max_level {
        let dec = decompose(d.as_ref(), lv)?;
        let k = estimate_kappa(&dec, sampler)?;
        let (ci, cj) = (dec.box_e(k.argmax.i).center(), dec.box_e(k.argmax.j).center());
        rows.push(KappaRow {
            level: lv,
            kappa_hat: k.kappa_hat,
            pairs_evaluated: k.pairs_evaluated as u64,
            i: k.argmax.i,
            j: k.argmax.j,
            d1: k.argmax.d1,
            d2: k.argmax.d2,
            x_i: ci[0],
            y_i: ci[1],
            x_j: cj[0],
            y_j: cj[1],
            straddles: straddles(d.as_ref(), &ci, &cj),
        });
    }
    let header =
        ["level", "kappa_hat", "pairs_evaluated", "i", "j", "d1", "d2", "x_i", "y_i", "x_j", "y_j", "straddles"];
    if let Some(p) = &a.json {
        let doc = json!({"domain": d.name(), "sampler": sampler, "runs": rows});
        emit(p, &json_bytes(&doc)?)?;
    }
    if let Some(p) = &a.csv {
        emit(p, &csv_bytes(&header, &rows)?)?;
    }
    if a.json.is_none() && a.csv.is_none() {
        emit("-", &csv_bytes(&header, &rows)?)?;
    }
    Ok(())
}

fn run_modulus(a: &ModulusArgs) -> Result<()> {
    check_m(a.m)?;
    let d = a.domain.build()?;
    let (t, f) = parse_fn(&a.function, &d)?;
    let mut cfg = SamplerConfig { m: a.m, seed: a.seed, ..SamplerConfig::default() };
    if let Some(t_min) = a.t_min {
        if !(t_min > 0.0 && t_min < 2.0 * d.bounding_box().side) {
            return Err(Error::Usage(format!("--t-min must lie in (0, {}), got {t_min}", 2.0 * d.bounding_box().side)));
        }
        cfg.min_scale = t_min / 2.0;
    }
    let (sub, int) = modulus_pair(f.as_ref(), &DomainRegion(d.as_ref()), None, &cfg)?;
    let rows: Vec<(f64, Option<f64>, Option<f64>)> =
        sub.points.iter().zip(&int.points).map(|(p, q)| (p.t, p.value, q.value)).collect();
    if let Some(p) = &a.json {
        let majorant = least_concave_majorant(&sub.present());
        let points: Vec<_> =
            rows.iter().map(|(t, s, i)| json!({"t": t, "omega_subcube": s, "omega_interior": i})).collect();
        let doc = json!({
            "domain": d.name(),
            "function": t.to_string(),
            "m": a.m,
            "seed": a.seed,
            "cubes_sampled": sub.meta.cubes_sampled,
            "bmo": sub.sup(),
            "points": points,
            "majorant": majorant.vertices,
        });
        emit(p, &json_bytes(&doc)?)?;
    }
    let header = ["t", "omega_subcube", "omega_interior"];
    if let Some(p) = &a.csv {
        emit(p, &csv_bytes(&header, &rows)?)?;
    }
    if a.json.is_none() && a.csv.is_none() {
        emit("-", &csv_bytes(&header, &rows)?)?;
    }
    Ok(())
}

fn run_extend(a: &ExtendArgs) -> Result<()> {
    check_m(a.m)?;
    check_levels(&[a.max_level])?;
    if a.grid == 0 || a.grid > 4096 {
        return Err(Error::Usage(format!("--grid must be in 1..=4096, got {}", a.grid)));
    }
    let d = a.domain.build()?;
    let (t, f) = parse_fn(&a.function, &d)?;
    let dec = decompose(d.as_ref(), a.max_level)?;
    let op = build_with(f.as_ref(), &dec, BuildOptions { m: a.m, ..Default::default() })?;
    let bx = eval_box(&dec);
    if let Some(p) = &a.out {
        let samples = sample_grid(d.as_ref(), &dec, &op, f.as_ref(), &bx, a.grid);
        let rows = samples.iter().enumerate().map(|(k, (x, v))| (k / a.grid, k % a.grid, x[0], x[1], *v));
        emit(p, &csv_bytes(&["row", "col", "x", "y", "F"], rows)?)?;
    }
    if a.report.is_some() || a.out.is_none() {
        let cfg = SamplerConfig { m: a.m, seed: a.seed, ..SamplerConfig::default() };
        let norm_f = bmo_norm(f.as_ref(), &DomainRegion(d.as_ref()), &cfg)?;
        let norm = box_modulus(d.as_ref(), &dec, &op, f.as_ref(), &cfg, None)?;
        let hyp = hypothesis_report(d.as_ref(), &dec, &op, f.as_ref())?;
        let curve: Vec<_> = norm.curve.points.iter().map(|p| json!({"t": p.t, "omega": p.value})).collect();
        let doc = json!({
            "domain": d.name(),
            "function": t.to_string(),
            "max_level": a.max_level,
            "L": dec.big_l,
            "s_l": op.s_l,
            "base_constant": op.base_constant,
            "eval_box": {"lower": bx.lower, "side": bx.side},
            "eprime_cubes": dec.cubes_eprime.len(),
            "norm_f": norm_f,
            "norm_extension": norm.bmo,
            "ratio": (norm_f > 1e-12).then(|| norm.bmo / norm_f),
            "tail_bound": norm.tail_bound,
            "support_margin": op.support_margin(&dec),
            "hypotheses": hyp,
            "curve": curve,
        });
        emit(a.report.as_deref().unwrap_or("-"), &json_bytes(&doc)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AdversarialRow {
    level: i32,
    s1: usize,
    s2: usize,
    d1: u32,
    d2_plateaus: f64,
    separation: f64,
    ratio: f64,
    norm: f64,
    straddles: bool,
    conditions_hold: bool,
}

const ADVERSARIAL_CHAIN: &str =
    "Each function below has a BMO norm bounded independently of the pair, yet its plateau averages \
on S1 and S2 differ by d1(S1, S2). A bounded extension operator would bound that difference by a constant times d2, so \
ratios separation/d2 that keep growing under refinement, with bounded norms, rule out such an operator.";

fn run_adversarial(a: &AdversarialArgs) -> Result<()> {
    check_m(a.m)?;
    check_levels(&a.max_level)?;
    let count = match a.pairs.as_str() {
        "auto" => None,
        s => match s.parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(Error::Usage(format!("--pairs must be 'auto' or a positive integer, got '{s}'"))),
        },
    };
    let d = a.domain.build()?;
    let cfg = pair_sampler(a.seed, a.m);
    let mut runs = Vec::new();
    let mut all_rows = Vec::new();
    for &lv in &a.max_level {
        let dec = decompose(d.as_ref(), lv)?;
        let pairs = match count {
            None => {
                let w = witness_pair(d.as_ref(), &dec, KappaSampler::Exhaustive)?;
                vec![(w.s1, w.s2)]
            }
            Some(n) => random_pairs(&dec, n, a.seed),
        };
        let rows: Vec<AdversarialRow> = pairs
            .par_iter()
            .map(|&(s1, s2)| {
                let field = build_adversarial(&dec, s1, s2)?;
                let (b1, b2) = (field.bump(s1), field.bump(s2));
                let separation = field.separation(a.m)?;
                let d2_plateaus = d2(&b1.plateau(), &b2.plateau());
                Ok(AdversarialRow {
                    level: lv,
                    s1,
                    s2,
                    d1: field.d1(),
                    d2_plateaus,
                    separation,
                    ratio: separation / d2_plateaus,
                    norm: adversarial_bmo(d.as_ref(), &field, &cfg)?,
                    straddles: straddles(d.as_ref(), &b1.cube.center(), &b2.cube.center()),
                    conditions_hold: field.conditions().holds,
                })
            })
            .collect::<Result<_>>()?;
        let max_norm = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let d1s: Vec<f64> = rows.iter().map(|r| r.d1 as f64).collect();
        let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
        let rho = (rows.len() >= 3).then(|| spearman(&d1s, &norms));
        runs.push(
            json!({"level": lv, "max_norm": max_norm, "max_ratio": max_ratio, "spearman_d1_norm": rho, "pairs": rows}),
        );
        all_rows.extend(rows);
    }
    let growth: Vec<f64> = runs
        .windows(2)
        .map(|w| w[1]["max_ratio"].as_f64().unwrap_or(0.0) / w[0]["max_ratio"].as_f64().unwrap_or(f64::NAN))
        .collect();
    if let Some(p) = &a.csv {
        let header =
            ["level", "s1", "s2", "d1", "d2_plateaus", "separation", "ratio", "norm", "straddles", "conditions_hold"];
        emit(p, &csv_bytes(&header, &all_rows)?)?;
    }
    if a.report.is_some() || a.csv.is_none() {
        let doc = json!({
            "domain": d.name(),
            "pairs": a.pairs,
            "seed": a.seed,
            "runs": runs,
            "ratio_growth": growth,
            "reasoning": ADVERSARIAL_CHAIN,
        });
        emit(a.report.as_deref().unwrap_or("-"), &json_bytes(&doc)?)?;
    }
    Ok(())
}
