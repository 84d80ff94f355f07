//! Dyadic cubes on a fixed ambient grid.
//!
//! Adjacency and containment are decided on integer `(level, coords)` pairs.
//! Floating point only appears when a cube is turned into a [`Box`] for
//! distance or quadrature work; with a power-of-two `base_side` and a grid
//! aligned origin every corner is an exact binary float.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient dimension. The data model is written against `DIM`; only the
/// planar case is exercised.
pub const DIM: usize = 2;

pub type Point = [f64; DIM];

/// Axis-aligned cube, not necessarily dyadic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box {
    pub lower: Point,
    pub side: f64,
}

impl Box {
    pub fn new(lower: Point, side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::Usage(format!("box sidelength must be positive, got {side}")));
        }
        Ok(Self { lower, side })
    }

    pub fn centered(center: Point, side: f64) -> Self {
        let mut lower = center;
        for c in lower.iter_mut() {
            *c -= side / 2.0;
        }
        Self { lower, side }
    }

    pub fn upper(&self) -> Point {
        let mut u = self.lower;
        for c in u.iter_mut() {
            *c += self.side;
        }
        u
    }

    pub fn center(&self) -> Point {
        let mut c = self.lower;
        for x in c.iter_mut() {
            *x += self.side / 2.0;
        }
        c
    }

    pub fn diam(&self) -> f64 {
        self.side * (DIM as f64).sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(DIM as i32)
    }

    /// Closed-cube point membership.
    pub fn contains_point(&self, x: &Point) -> bool {
        (0..DIM).all(|k| x[k] >= self.lower[k] && x[k] <= self.lower[k] + self.side)
    }

    /// `other` lies inside the closed cube `self`.
    pub fn contains_box(&self, other: &Box) -> bool {
        (0..DIM).all(|k| other.lower[k] >= self.lower[k] && other.lower[k] + other.side <= self.lower[k] + self.side)
    }

    pub fn intersects(&self, other: &Box) -> bool {
        (0..DIM).all(|k| self.lower[k] <= other.lower[k] + other.side && other.lower[k] <= self.lower[k] + self.side)
    }

    pub fn corners(&self) -> [Point; 4] {
        let [x0, y0] = self.lower;
        let s = self.side;
        [[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]]
    }

    /// Distance from a point to the closed cube (0 inside).
    pub fn dist_point(&self, x: &Point, metric: Metric) -> f64 {
        let mut gaps = [0.0; DIM];
        for k in 0..DIM {
            gaps[k] = (self.lower[k] - x[k]).max(x[k] - self.lower[k] - self.side).max(0.0);
        }
        metric.norm(&gaps)
    }

    /// Distance from an interior point to the cube boundary. Identical in
    /// the L2 and Linf metrics.
    pub fn dist_to_boundary(&self, x: &Point) -> f64 {
        (0..DIM)
            .map(|k| (x[k] - self.lower[k]).min(self.lower[k] + self.side - x[k]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Largest distance from `p` to a point of the cube.
    pub fn max_dist_point(&self, p: &Point) -> f64 {
        let mut far = [0.0; DIM];
        for k in 0..DIM {
            far[k] = (p[k] - self.lower[k]).abs().max((self.lower[k] + self.side - p[k]).abs());
        }
        Metric::L2.norm(&far)
    }

    pub fn scaled(&self, factor: f64) -> Box {
        let mut lower = self.lower;
        for c in lower.iter_mut() {
            *c *= factor;
        }
        Box { lower, side: self.side * factor }
    }

    pub fn translated(&self, shift: &Point) -> Box {
        let mut lower = self.lower;
        for k in 0..DIM {
            lower[k] += shift[k];
        }
        Box { lower, side: self.side }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    L2,
    Linf,
}

impl Metric {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            Metric::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Metric::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

/// Set distance between two closed cubes; zero iff they meet.
pub fn dist(a: &Box, b: &Box, metric: Metric) -> f64 {
    let mut gaps = [0.0; DIM];
    for k in 0..DIM {
        gaps[k] = (a.lower[k] - b.lower[k] - b.side).max(b.lower[k] - a.lower[k] - a.side).max(0.0);
    }
    metric.norm(&gaps)
}

/// Logarithmic cube distance `|log(la/lb)| + log(2 + d/(la+lb))`, base 2,
/// Euclidean `d`.
pub fn d2(a: &Box, b: &Box) -> f64 {
    let ratio = (a.side / b.side).log2().abs();
    ratio + (2.0 + dist(a, b, Metric::L2) / (a.side + b.side)).log2()
}

/// Cube with the same center and `factor` times the sidelength. `factor`
/// 1/4 gives the plateau cube `J(S)`, 2 gives `2Q`.
pub fn concentric_subcube(s: &Box, factor: f64) -> Result<Box> {
    if !(factor > 0.0) {
        return Err(Error::Usage(format!("concentric factor must be positive, got {factor}")));
    }
    Ok(Box::centered(s.center(), s.side * factor))
}

/// The ambient dyadic grid: level 0 cubes have side `base_side` and a corner
/// at `origin`. Levels may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Point,
    pub base_side: f64,
}

impl Grid {
    pub fn new(origin: Point, base_side: f64) -> Result<Self> {
        if !(base_side > 0.0) || base_side.log2().fract() != 0.0 {
            return Err(Error::Usage(format!("base_side must be a power of two, got {base_side}")));
        }
        Ok(Self { origin, base_side })
    }

    pub fn side(&self, level: i32) -> f64 {
        self.base_side * 2f64.powi(-level)
    }

    pub fn to_box(&self, q: &DyadicCube) -> Box {
        let s = self.side(q.level);
        let mut lower = self.origin;
        for k in 0..DIM {
            lower[k] += q.coords[k] as f64 * s;
        }
        Box { lower, side: s }
    }

    /// Cube of the given level whose half-open cell contains `x`.
    pub fn locate(&self, x: &Point, level: i32) -> DyadicCube {
        let s = self.side(level);
        let mut coords = [0i64; DIM];
        for k in 0..DIM {
            coords[k] = ((x[k] - self.origin[k]) / s).floor() as i64;
        }
        DyadicCube { level, coords }
    }
}

/// Dyadic cube identified by refinement level and integer lower-corner
/// coordinates. Ordered by `(level, coords)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub coords: [i64; DIM],
}

impl DyadicCube {
    pub fn new(level: i32, coords: [i64; DIM]) -> Self {
        Self { level, coords }
    }

    pub fn parent(&self) -> DyadicCube {
        let mut coords = self.coords;
        for c in coords.iter_mut() {
            *c = c.div_euclid(2);
        }
        DyadicCube { level: self.level - 1, coords }
    }

    pub fn children(&self) -> [DyadicCube; 1 << DIM] {
        let base = [self.coords[0] * 2, self.coords[1] * 2];
        let l = self.level + 1;
        [
            DyadicCube::new(l, [base[0], base[1]]),
            DyadicCube::new(l, [base[0] + 1, base[1]]),
            DyadicCube::new(l, [base[0], base[1] + 1]),
            DyadicCube::new(l, [base[0] + 1, base[1] + 1]),
        ]
    }

    /// Closed integer interval occupied on each axis, in units of `level`.
    /// `level` must be at least `self.level`.
    pub fn span_at(&self, level: i32) -> [(i64, i64); DIM] {
        debug_assert!(level >= self.level);
        let shift = (level - self.level) as u32;
        let mut out = [(0, 0); DIM];
        for k in 0..DIM {
            out[k] = (self.coords[k] << shift, (self.coords[k] + 1) << shift);
        }
        out
    }

    /// Closed cubes intersect (including overlap).
    pub fn meets(&self, other: &DyadicCube) -> bool {
        let level = self.level.max(other.level);
        let a = self.span_at(level);
        let b = other.span_at(level);
        (0..DIM).all(|k| a[k].0.max(b[k].0) <= a[k].1.min(b[k].1))
    }

    /// `self` contains `other` as a (not necessarily proper) dyadic descendant.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.level < self.level {
            return false;
        }
        let shift = (other.level - self.level) as u32;
        (0..DIM).all(|k| other.coords[k] >> shift == self.coords[k])
    }
}

/// Adjacency in the Whitney sense: distinct cubes whose closures meet.
pub fn touches(a: &DyadicCube, b: &DyadicCube) -> bool {
    a != b && a.meets(b)
}
