//! Logarithmic bump functions on cubes.
//!
//! On the model cube `S0 = [-2, 2]^2`, with `d = dist(x, boundary)`,
//!
//! ```text
//! psi(x) = (1 + log2(d) / mu)_+   if d < 1
//!        = 1                      otherwise
//! ```
//!
//! and on a cube `S` we set `psi_S(x) = psi(4 (x - c_S) / l(S))`. It is `1` on
//! the concentric cube of side `l/4` and vanishes within `2^-mu l / 4` of
//! the boundary. Its mean oscillation is `O(1/mu)`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{concentric_subcube, Box, Point, DIM};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::oscillation::{modulus, LayeredCubeRegion, Mode, ModulusCurve, SamplerConfig};

/// The model cube `[-2, 2]^2`.
pub fn model_cube() -> Box {
    Box { lower: [-2.0; DIM], side: 4.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub cube: Box,
    pub mu: u32,
}

impl BumpSpec {
    pub fn new(cube: Box, mu: u32) -> Result<Self> {
        if mu == 0 {
            return Err(Error::Usage("bump order mu must be at least 1".into()));
        }
        Ok(Self { cube, mu })
    }

    /// Point of the model cube corresponding to `x`.
    pub fn to_model(&self, x: &Point) -> Point {
        let c = self.cube.center();
        let mut y = [0.0; DIM];
        for k in 0..DIM {
            y[k] = 4.0 * (x[k] - c[k]) / self.cube.side;
        }
        y
    }

    pub fn value(&self, x: &Point) -> f64 {
        model_value(self.mu, &self.to_model(x))
    }

    /// `S` with features at the boundary, the zero set and the plateau edge.
    pub fn region(&self) -> LayeredCubeRegion {
        let l = self.cube.side;
        LayeredCubeRegion { cube: self.cube, depths: vec![0.0, 2f64.powi(-(self.mu as i32)) * l / 4.0, l / 4.0] }
    }

    /// `J(S)`: concentric, side `l/4`; the bump is `1` there.
    pub fn plateau(&self) -> Box {
        concentric_subcube(&self.cube, 0.25).expect("positive factor")
    }

    /// `K(S)`: concentric, at distance `2^(-mu-2) l` from the boundary; the
    /// bump vanishes outside.
    pub fn support(&self) -> Box {
        let factor = 1.0 - 2f64.powi(-(self.mu as i32) - 1);
        concentric_subcube(&self.cube, factor).expect("positive factor")
    }
}

/// Cubes where the oscillation of `psi_S` concentrates: `S` itself and
/// cubes centred on an edge of `K(S)`, halving down to the width of the
/// logarithmic layer or `min_scale`.
pub fn probe_cubes(spec: &BumpSpec, min_scale: f64) -> Vec<Box> {
    let k = spec.support();
    let c = [k.lower[0], k.center()[1]];
    let mut out = vec![spec.cube];
    let mut s = spec.cube.side / 2.0;
    while s >= min_scale && s >= spec.cube.side * 2f64.powi(-(spec.mu as i32) - 3) {
        out.push(Box::centered(c, s));
        s /= 2.0;
    }
    out
}

/// The bump on the model cube; zero outside it.
pub fn model_value(mu: u32, y: &Point) -> f64 {
    let d = y.iter().map(|c| 2.0 - c.abs()).fold(f64::INFINITY, f64::min);
    if d <= 0.0 {
        0.0
    } else if d >= 1.0 {
        1.0
    } else {
        (1.0 + d.log2() / mu as f64).max(0.0)
    }
}

pub fn bump_value(spec: &BumpSpec, x: &Point) -> f64 {
    spec.value(x)
}

impl Field for BumpSpec {
    fn eval(&self, x: &Point) -> f64 {
        self.value(x)
    }
}

/// `(c0 / mu) min(1/2, 2^(mu+3) t / l(S))`.
pub fn bump_modulus_bound(spec: &BumpSpec, t: f64, c0: f64) -> f64 {
    let mu = spec.mu as f64;
    let ramp = 2f64.powi(spec.mu as i32 + 3) * t.max(0.0) / spec.cube.side;
    c0 / mu * ramp.min(0.5)
}

/// Sampler settings that reach the finest scale where the bound is still
/// linear, `l 2^(-mu-6)`.
pub fn bump_sampler(spec: &BumpSpec, seed: u64) -> SamplerConfig {
    SamplerConfig { min_scale: spec.cube.side * 2f64.powi(-(spec.mu as i32) - 6), seed, ..SamplerConfig::default() }
}

/// Modulus `omega_S(psi_S, t)`, breakpoints at the sampler's dyadic scales.
pub fn bump_modulus(spec: &BumpSpec, cfg: &SamplerConfig, mode: Mode) -> Result<ModulusCurve> {
    modulus(spec, &spec.region(), None, cfg, mode)
}

/// Smallest `c0` for which the bound dominates `curve`.
pub fn calibrate_c0(spec: &BumpSpec, curve: &ModulusCurve) -> f64 {
    curve
        .points
        .iter()
        .filter_map(|p| p.value.map(|v| (p.t, v)))
        .map(|(t, v)| {
            let unit = bump_modulus_bound(spec, t, 1.0);
            if unit > 0.0 {
                v / unit
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}
