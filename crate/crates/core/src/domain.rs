//! Bounded planar domains given by membership and distance oracles.
//!
//! The built-ins carry their boundary as a list of segments and circular
//! arcs, which makes every cube-to-boundary distance a closed-form minimum
//! over finitely many candidates. A membership-only domain is supported with
//! sampled, bracketed distances.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dyadic::{Box, Grid, Metric, Point};
use crate::error::{Error, Result};

/// Closed interval bracketing a distance. Equal ends for exact oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self { lo: self.lo * f, hi: self.hi * f }
    }
}

/// Position of a closed cube relative to `Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxClass {
    /// Inside `Omega`; carries `dist(box, Omega^c)`.
    Inside(Interval),
    /// Disjoint from the closure; carries `dist(box, closure(Omega))`.
    Outside(Interval),
    /// Meets the boundary, or undecidable at the oracle's resolution.
    Straddles,
}

pub trait DomainOracle: Send + Sync {
    fn name(&self) -> &str;
    fn contains(&self, x: &Point) -> bool;
    /// Distance from `x` to the boundary.
    fn dist_to_boundary(&self, x: &Point) -> Interval;
    fn classify_box(&self, b: &Box) -> BoxClass;
    /// Dyadic cube with the closure of `Omega` strictly inside.
    fn bounding_box(&self) -> Box;
    fn area(&self) -> f64;
    fn diam(&self) -> f64;

    /// Distance from `x` to the complement; zero outside.
    fn dist_to_complement(&self, x: &Point) -> Interval {
        if self.contains(x) {
            self.dist_to_boundary(x)
        } else {
            Interval::zero()
        }
    }

    /// Lower bound on `dist(box, boundary)`; used to steer sampling.
    fn boundary_gap(&self, b: &Box) -> f64 {
        match self.classify_box(b) {
            BoxClass::Inside(d) | BoxClass::Outside(d) => d.lo,
            BoxClass::Straddles => 0.0,
        }
    }

    /// Grid whose level-0 cubes have unit side and whose origin is the
    /// bounding box corner, so the bounding box is itself a dyadic cube.
    fn grid(&self) -> Grid {
        let bb = self.bounding_box();
        Grid { origin: bb.lower, base_side: 1.0 }
    }

    /// Level of the bounding box in [`DomainOracle::grid`].
    fn root_level(&self) -> i32 {
        let g = self.grid();
        -(self.bounding_box().side / g.base_side).log2().round() as i32
    }
}

/// `dist(S, Omega^c)` for a cube inside the bounding box.
pub fn dist_cube_to_complement(d: &dyn DomainOracle, s: &Box) -> Result<Interval> {
    if !d.bounding_box().contains_box(s) {
        return Err(Error::Usage(format!(
            "cube at {:?} with side {} lies outside the bounding box of {}",
            s.lower,
            s.side,
            d.name()
        )));
    }
    Ok(match d.classify_box(s) {
        BoxClass::Inside(iv) => iv,
        _ => Interval::zero(),
    })
}

/// `S` is contained in `Omega` (decided exactly for analytic domains).
pub fn contains_cube(d: &dyn DomainOracle, s: &Box) -> bool {
    matches!(d.classify_box(s), BoxClass::Inside(_))
}

// ---------------------------------------------------------------------------
// boundary geometry

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(v: &Point) -> f64 {
    v[0].hypot(v[1])
}

fn point_segment_dist(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) };
    norm(&[ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

/// Liang-Barsky clip: does the closed segment meet the closed box?
fn segment_meets_box(a: &Point, b: &Point, bx: &Box) -> bool {
    let d = sub(b, a);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let lo = bx.lower[k];
        let hi = bx.lower[k] + bx.side;
        if d[k] == 0.0 {
            if a[k] < lo || a[k] > hi {
                return false;
            }
        } else {
            let (mut u, mut v) = ((lo - a[k]) / d[k], (hi - a[k]) / d[k]);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            t0 = t0.max(u);
            t1 = t1.min(v);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Counterclockwise circular arc `center + r e^{i theta}`, theta in
/// `[start, start + sweep]`. `sweep = 2 pi` is a full circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPiece {
    pub center: Point,
    pub radius: f64,
    pub start: f64,
    pub sweep: f64,
}

impl ArcPiece {
    fn full(&self) -> bool {
        self.sweep >= TAU
    }

    fn covers_angle(&self, theta: f64) -> bool {
        self.full() || (theta - self.start).rem_euclid(TAU) <= self.sweep
    }

    fn at(&self, theta: f64) -> Point {
        [self.center[0] + self.radius * theta.cos(), self.center[1] + self.radius * theta.sin()]
    }

    fn endpoints(&self) -> Option<[Point; 2]> {
        if self.full() {
            None
        } else {
            Some([self.at(self.start), self.at(self.start + self.sweep)])
        }
    }

    fn dist_point(&self, p: &Point) -> f64 {
        let v = sub(p, &self.center);
        let r = norm(&v);
        let radial = (r - self.radius).abs();
        if r == 0.0 {
            return self.radius;
        }
        if self.covers_angle(v[1].atan2(v[0])) {
            return radial;
        }
        let [e0, e1] = self.endpoints().expect("partial arc");
        norm(&sub(p, &e0)).min(norm(&sub(p, &e1)))
    }

    fn meets_box(&self, bx: &Box) -> bool {
        // quick reject on the full circle
        let near = bx.dist_point(&self.center, Metric::L2);
        let far = bx.max_dist_point(&self.center);
        if self.radius < near || self.radius > far {
            return false;
        }
        if let Some(ends) = self.endpoints() {
            if ends.iter().any(|e| bx.contains_point(e)) {
                return true;
            }
        } else if near < self.radius && self.radius < far {
            return true;
        }
        let c = bx.corners();
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            for q in circle_segment_hits(&self.center, self.radius, &a, &b) {
                let v = sub(&q, &self.center);
                if self.covers_angle(v[1].atan2(v[0])) {
                    return true;
                }
            }
        }
        false
    }

    fn dist_box(&self, bx: &Box) -> f64 {
        if self.meets_box(bx) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for q in bx.corners() {
            best = best.min(self.dist_point(&q));
        }
        if let Some(ends) = self.endpoints() {
            for e in ends {
                best = best.min(bx.dist_point(&e, Metric::L2));
            }
        }
        for k in 0..4 {
            let theta = k as f64 * PI / 2.0;
            if self.covers_angle(theta) {
                best = best.min(bx.dist_point(&self.at(theta), Metric::L2));
            }
        }
        best
    }
}

fn circle_segment_hits(c: &Point, r: f64, a: &Point, b: &Point) -> Vec<Point> {
    let d = sub(b, a);
    let f = sub(a, c);
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let qc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)]
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| [a[0] + t * d[0], a[1] + t * d[1]])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Segment(Point, Point),
    Arc(ArcPiece),
}

impl Piece {
    pub fn dist_point(&self, p: &Point) -> f64 {
        match self {
            Piece::Segment(a, b) => point_segment_dist(p, a, b),
            Piece::Arc(arc) => arc.dist_point(p),
        }
    }

    pub fn dist_box(&self, bx: &Box) -> f64 {
        match self {
            Piece::Segment(a, b) => {
                if segment_meets_box(a, b, bx) {
                    return 0.0;
                }
                // disjoint convex sets: the gap is realised at a vertex of one of them
                let mut best = bx.dist_point(a, Metric::L2).min(bx.dist_point(b, Metric::L2));
                for q in bx.corners() {
                    best = best.min(point_segment_dist(&q, a, b));
                }
                best
            }
            Piece::Arc(arc) => arc.dist_box(bx),
        }
    }
}

// ---------------------------------------------------------------------------
// analytic built-ins

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Simple polygon, vertices counterclockwise.
    Polygon(Vec<Point>),
    Disk {
        radius: f64,
    },
    /// Unit-style disk minus the closed segment `[0, radius] x {0}`.
    SlitDisk {
        radius: f64,
    },
    /// `{ r e^{i theta} : inner < r < outer, 0 < theta < angle }`.
    AnnulusSector {
        inner: f64,
        outer: f64,
        angle: f64,
    },
}

#[derive(Debug, Clone)]
pub struct AnalyticDomain {
    name: String,
    shape: Shape,
    boundary: Vec<Piece>,
    bbox: Box,
    area: f64,
    diam: f64,
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["square", "disk", "l-shape", "annulus-sector", "slit-disk", "comb"];

/// Look up a built-in domain by its CLI name (underscores accepted).
pub fn builtin(name: &str) -> Result<Arc<dyn DomainOracle>> {
    let d = match name.replace('_', "-").to_ascii_lowercase().as_str() {
        "square" => AnalyticDomain::square(1.0),
        "disk" => AnalyticDomain::disk(1.0),
        "l-shape" => AnalyticDomain::l_shape(),
        "annulus-sector" => AnalyticDomain::annulus_sector(0.5, 1.0, 1.5 * PI),
        "slit-disk" => AnalyticDomain::slit_disk(1.0),
        "comb" => AnalyticDomain::comb(4),
        _ => return Err(Error::Usage(format!("unknown domain '{name}'; available: {}", BUILTIN_NAMES.join(", ")))),
    };
    Ok(Arc::new(d))
}

fn polygon_boundary(v: &[Point]) -> Vec<Piece> {
    (0..v.len()).map(|k| Piece::Segment(v[k], v[(k + 1) % v.len()])).collect()
}

fn polygon_area(v: &[Point]) -> f64 {
    let mut a = 0.0;
    for k in 0..v.len() {
        let (p, q) = (v[k], v[(k + 1) % v.len()]);
        a += p[0] * q[1] - q[0] * p[1];
    }
    a.abs() / 2.0
}

fn polygon_diam(v: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for p in v {
        for q in v {
            d = d.max(norm(&sub(p, q)));
        }
    }
    d
}

/// Even-odd crossing test; boundary points are resolved by the caller.
fn polygon_parity(v: &[Point], p: &Point) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Bounding box: power-of-two side at least twice the diameter, centered on
/// the snapped centroid.
fn snapped_box(centroid: Point, diam: f64) -> Box {
    let side = 2f64.powi((2.0 * diam).log2().ceil() as i32);
    let c = [(centroid[0] * 4.0).round() / 4.0, (centroid[1] * 4.0).round() / 4.0];
    Box::centered(c, side)
}

impl AnalyticDomain {
    fn from_polygon(name: &str, v: Vec<Point>) -> Self {
        let n = v.len() as f64;
        let centroid = [v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n];
        let diam = polygon_diam(&v);
        Self {
            name: name.into(),
            boundary: polygon_boundary(&v),
            area: polygon_area(&v),
            bbox: snapped_box(centroid, diam),
            diam,
            shape: Shape::Polygon(v),
        }
    }

    /// Open square of the given side centered at the origin.
    pub fn square(side: f64) -> Self {
        let h = side / 2.0;
        Self::from_polygon("square", vec![[-h, -h], [h, -h], [h, h], [-h, h]])
    }

    /// `(-1,1)^2` minus the closed upper-right quadrant.
    pub fn l_shape() -> Self {
        Self::from_polygon("l-shape", vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]])
    }

    /// Square rooms of side 1/2 in a row, joined by corridors whose width
    /// halves from one room to the next.
    pub fn comb(rooms: usize) -> Self {
        assert!(rooms >= 2);
        let x = |k: usize| -1.0 + 0.75 * k as f64;
        let h = |k: usize| 2f64.powi(-(k as i32) - 4);
        let mut v = Vec::new();
        for k in 0..rooms {
            v.push([x(k), -0.25]);
            v.push([x(k) + 0.5, -0.25]);
            if k + 1 < rooms {
                v.push([x(k) + 0.5, -h(k)]);
                v.push([x(k + 1), -h(k)]);
            }
        }
        for k in (0..rooms).rev() {
            v.push([x(k) + 0.5, 0.25]);
            v.push([x(k), 0.25]);
            if k > 0 {
                v.push([x(k), h(k - 1)]);
                v.push([x(k - 1) + 0.5, h(k - 1)]);
            }
        }
        Self::from_polygon("comb", v)
    }

    pub fn disk(radius: f64) -> Self {
        Self {
            name: "disk".into(),
            shape: Shape::Disk { radius },
            boundary: vec![Piece::Arc(ArcPiece { center: [0.0, 0.0], radius, start: 0.0, sweep: TAU })],
            bbox: snapped_box([0.0, 0.0], 2.0 * radius),
            area: PI * radius * radius,
            diam: 2.0 * radius,
        }
    }

    pub fn slit_disk(radius: f64) -> Self {
        Self {
            name: "slit-disk".into(),
            shape: Shape::SlitDisk { radius },
            boundary: vec![
                Piece::Arc(ArcPiece { center: [0.0, 0.0], radius, start: 0.0, sweep: TAU }),
                Piece::Segment([0.0, 0.0], [radius, 0.0]),
            ],
            bbox: snapped_box([0.0, 0.0], 2.0 * radius),
            area: PI * radius * radius,
            diam: 2.0 * radius,
        }
    }

    pub fn annulus_sector(inner: f64, outer: f64, angle: f64) -> Self {
        assert!(0.0 < inner && inner < outer && 0.0 < angle && angle < TAU);
        let c = [0.0, 0.0];
        let ray = |r: f64, t: f64| [r * t.cos(), r * t.sin()];
        Self {
            name: "annulus-sector".into(),
            shape: Shape::AnnulusSector { inner, outer, angle },
            boundary: vec![
                Piece::Arc(ArcPiece { center: c, radius: outer, start: 0.0, sweep: angle }),
                Piece::Arc(ArcPiece { center: c, radius: inner, start: 0.0, sweep: angle }),
                Piece::Segment(ray(inner, 0.0), ray(outer, 0.0)),
                Piece::Segment(ray(inner, angle), ray(outer, angle)),
            ],
            bbox: snapped_box(c, 2.0 * outer),
            area: 0.5 * angle * (outer * outer - inner * inner),
            diam: 2.0 * outer,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn boundary(&self) -> &[Piece] {
        &self.boundary
    }

    fn boundary_dist_point(&self, x: &Point) -> f64 {
        self.boundary.iter().map(|p| p.dist_point(x)).fold(f64::INFINITY, f64::min)
    }

    fn boundary_dist_box(&self, b: &Box) -> f64 {
        let mut best = f64::INFINITY;
        for p in &self.boundary {
            best = best.min(p.dist_box(b));
            if best == 0.0 {
                break;
            }
        }
        best
    }

    fn raw_contains(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Polygon(v) => polygon_parity(v, x),
            Shape::Disk { radius } => norm(x) < *radius,
            Shape::SlitDisk { radius } => norm(x) < *radius && !(x[1] == 0.0 && x[0] >= 0.0),
            Shape::AnnulusSector { inner, outer, angle } => {
                let r = norm(x);
                let t = x[1].atan2(x[0]).rem_euclid(TAU);
                *inner < r && r < *outer && 0.0 < t && t < *angle
            }
        }
    }
}

impl DomainOracle for AnalyticDomain {
    fn name(&self) -> &str {
        &self.name
    }

    fn contains(&self, x: &Point) -> bool {
        self.raw_contains(x) && self.boundary_dist_point(x) > 0.0
    }

    fn dist_to_boundary(&self, x: &Point) -> Interval {
        Interval::exact(self.boundary_dist_point(x))
    }

    fn classify_box(&self, b: &Box) -> BoxClass {
        let d = self.boundary_dist_box(b);
        if d == 0.0 {
            BoxClass::Straddles
        } else if self.raw_contains(&b.center()) {
            BoxClass::Inside(Interval::exact(d))
        } else {
            BoxClass::Outside(Interval::exact(d))
        }
    }

    fn bounding_box(&self) -> Box {
        self.bbox
    }

    fn area(&self) -> f64 {
        self.area
    }

    fn diam(&self) -> f64 {
        self.diam
    }

    fn boundary_gap(&self, b: &Box) -> f64 {
        self.boundary_dist_box(b)
    }
}

// ---------------------------------------------------------------------------
// dilations and translations

/// Image of a domain under `x -> scale * x + shift`. With `scale` a power of
/// two and `shift` on the grid, dyadic families map onto dyadic families.
pub struct AffineDomain {
    inner: Arc<dyn DomainOracle>,
    scale: f64,
    shift: Point,
    name: String,
}

impl AffineDomain {
    pub fn new(inner: Arc<dyn DomainOracle>, scale: f64, shift: Point) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Usage(format!("scale must be positive, got {scale}")));
        }
        let name = format!("{}@{}x+{:?}", inner.name(), scale, shift);
        Ok(Self { inner, scale, shift, name })
    }

    fn pull(&self, x: &Point) -> Point {
        [(x[0] - self.shift[0]) / self.scale, (x[1] - self.shift[1]) / self.scale]
    }

    fn pull_box(&self, b: &Box) -> Box {
        Box { lower: self.pull(&b.lower), side: b.side / self.scale }
    }
}

impl DomainOracle for AffineDomain {
    fn name(&self) -> &str {
        &self.name
    }

    fn contains(&self, x: &Point) -> bool {
        self.inner.contains(&self.pull(x))
    }

    fn dist_to_boundary(&self, x: &Point) -> Interval {
        self.inner.dist_to_boundary(&self.pull(x)).scaled(self.scale)
    }

    fn classify_box(&self, b: &Box) -> BoxClass {
        match self.inner.classify_box(&self.pull_box(b)) {
            BoxClass::Inside(d) => BoxClass::Inside(d.scaled(self.scale)),
            BoxClass::Outside(d) => BoxClass::Outside(d.scaled(self.scale)),
            BoxClass::Straddles => BoxClass::Straddles,
        }
    }

    fn bounding_box(&self) -> Box {
        self.inner.bounding_box().scaled(self.scale).translated(&self.shift)
    }

    fn area(&self) -> f64 {
        self.inner.area() * self.scale * self.scale
    }

    fn diam(&self) -> f64 {
        self.inner.diam() * self.scale
    }

    fn boundary_gap(&self, b: &Box) -> f64 {
        self.inner.boundary_gap(&self.pull_box(b)) * self.scale
    }

    fn grid(&self) -> Grid {
        let g = self.inner.grid();
        Grid { origin: self.bounding_box().lower, base_side: g.base_side * self.scale }
    }
}

// ---------------------------------------------------------------------------
// membership-only domains

/// Domain known only through a membership predicate. The boundary is
/// sampled by bisection on the edges of a uniform lattice of spacing `h`;
/// distances are bracketed by `[d - h, d + h]` around the nearest sample.
pub struct MembershipDomain<F> {
    name: String,
    member: F,
    bbox: Box,
    h: f64,
    samples: Vec<Point>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    area: f64,
    diam: f64,
}

impl<F: Fn(&Point) -> bool + Send + Sync> MembershipDomain<F> {
    /// `bbox` must be a dyadic-sided box with the closure strictly inside.
    pub fn new(name: &str, member: F, bbox: Box, cells: usize) -> Result<Self> {
        if cells < 4 {
            return Err(Error::Usage("membership domain needs at least 4 lattice cells".into()));
        }
        let h = bbox.side / cells as f64;
        let at = |i: usize, j: usize| [bbox.lower[0] + i as f64 * h, bbox.lower[1] + j as f64 * h];
        let mut samples = Vec::new();
        let mut inside = 0usize;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..=cells {
            for j in 0..=cells {
                let p = at(i, j);
                let m = member(&p);
                if m {
                    if i < cells && j < cells {
                        inside += 1;
                    }
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                for q in [
                    if i < cells { Some(at(i + 1, j)) } else { None },
                    if j < cells { Some(at(i, j + 1)) } else { None },
                ]
                .into_iter()
                .flatten()
                {
                    if member(&q) != m {
                        samples.push(bisect(&member, p, q, m));
                    }
                }
            }
        }
        if samples.is_empty() || inside == 0 {
            return Err(Error::Usage(format!("membership domain '{name}' has no resolvable boundary")));
        }
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, p) in samples.iter().enumerate() {
            buckets.entry(bucket_key(&bbox, h, p)).or_default().push(k);
        }
        let diam = norm(&sub(&hi, &lo)) + 2.0 * h;
        Ok(Self { name: name.into(), member, bbox, h, samples, buckets, area: inside as f64 * h * h, diam })
    }

    fn nearest_sample(&self, x: &Point) -> f64 {
        let (ci, cj) = bucket_key(&self.bbox, self.h, x);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            for di in -ring..=ring {
                for dj in -ring..=ring {
                    if di.abs() != ring && dj.abs() != ring {
                        continue;
                    }
                    if let Some(ids) = self.buckets.get(&(ci + di, cj + dj)) {
                        for &k in ids {
                            best = best.min(norm(&sub(x, &self.samples[k])));
                        }
                    }
                }
            }
            // every unvisited bucket is at least ring * h away
            if best <= ring as f64 * self.h || ring as f64 * self.h > 2.0 * self.bbox.side {
                return best;
            }
            ring += 1;
        }
    }
}

fn bucket_key(bbox: &Box, h: f64, p: &Point) -> (i64, i64) {
    (((p[0] - bbox.lower[0]) / h).floor() as i64, ((p[1] - bbox.lower[1]) / h).floor() as i64)
}

fn bisect<F: Fn(&Point) -> bool>(member: &F, mut a: Point, mut b: Point, a_in: bool) -> Point {
    for _ in 0..40 {
        let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        if member(&m) == a_in {
            a = m;
        } else {
            b = m;
        }
    }
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

impl<F: Fn(&Point) -> bool + Send + Sync> DomainOracle for MembershipDomain<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn contains(&self, x: &Point) -> bool {
        (self.member)(x)
    }

    fn dist_to_boundary(&self, x: &Point) -> Interval {
        let d = self.nearest_sample(x);
        Interval { lo: (d - self.h).max(0.0), hi: d + self.h }
    }

    fn classify_box(&self, b: &Box) -> BoxClass {
        let c = b.center();
        let iv = self.dist_to_boundary(&c);
        let r = b.diam() / 2.0;
        if iv.lo > r {
            let d = Interval { lo: iv.lo - r, hi: iv.hi };
            if self.contains(&c) {
                BoxClass::Inside(d)
            } else {
                BoxClass::Outside(d)
            }
        } else {
            BoxClass::Straddles
        }
    }

    fn bounding_box(&self) -> Box {
        self.bbox
    }

    fn area(&self) -> f64 {
        self.area
    }

    fn diam(&self) -> f64 {
        self.diam
    }
}
