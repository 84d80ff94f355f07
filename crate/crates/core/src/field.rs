//! Real-valued function oracles and the named test-function registry.

use std::fmt;
use std::sync::Arc;

use crate::bump::BumpSpec;
use crate::domain::DomainOracle;
use crate::dyadic::{concentric_subcube, Box, Point};
use crate::error::{Error, Result};

/// A pointwise-evaluable function. Implementations must be pure.
pub trait Field: Send + Sync {
    fn eval(&self, x: &Point) -> f64;

    /// Closed-form cube average, when one is known.
    fn exact_average(&self, _q: &Box) -> Option<f64> {
        None
    }
}

impl<T: Field + ?Sized> Field for Arc<T> {
    fn eval(&self, x: &Point) -> f64 {
        (**self).eval(x)
    }

    fn exact_average(&self, q: &Box) -> Option<f64> {
        (**self).exact_average(q)
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn eval(&self, x: &Point) -> f64 {
        (**self).eval(x)
    }

    fn exact_average(&self, q: &Box) -> Option<f64> {
        (**self).exact_average(q)
    }
}

/// Wraps a closure.
pub struct FnField<F>(pub F);

impl<F: Fn(&Point) -> f64 + Send + Sync> Field for FnField<F> {
    fn eval(&self, x: &Point) -> f64 {
        (self.0)(x)
    }
}

pub struct Constant(pub f64);

impl Field for Constant {
    fn eval(&self, _x: &Point) -> f64 {
        self.0
    }

    fn exact_average(&self, _q: &Box) -> Option<f64> {
        Some(self.0)
    }
}

/// `x -> a + b * x_axis`.
pub struct Affine1 {
    pub axis: usize,
    pub offset: f64,
    pub slope: f64,
}

impl Field for Affine1 {
    fn eval(&self, x: &Point) -> f64 {
        self.offset + self.slope * x[self.axis]
    }

    fn exact_average(&self, q: &Box) -> Option<f64> {
        Some(self.offset + self.slope * q.center()[self.axis])
    }
}

/// Linear combination `a f + b g`; no exact hook, so quadrature nodes are
/// shared with the parts.
pub struct Combination<F, G> {
    pub a: f64,
    pub f: F,
    pub b: f64,
    pub g: G,
}

impl<F: Field, G: Field> Field for Combination<F, G> {
    fn eval(&self, x: &Point) -> f64 {
        self.a * self.f.eval(x) + self.b * self.g.eval(x)
    }
}

/// `f(x / scale - shift / scale)`: the pushforward of a field under the same
/// affine map as [`crate::domain::AffineDomain`].
pub struct AffineField<F> {
    pub inner: F,
    pub scale: f64,
    pub shift: Point,
}

impl<F: Field> Field for AffineField<F> {
    fn eval(&self, x: &Point) -> f64 {
        self.inner.eval(&[(x[0] - self.shift[0]) / self.scale, (x[1] - self.shift[1]) / self.scale])
    }
}

/// Named test functions, instantiated against a domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Const(f64),
    /// First coordinate.
    Coord1,
    /// Indicator of the half plane left of the bounding-box center.
    HalfStep,
    /// `log2 dist(x, boundary)`: in BMO, not in VMO.
    LogDist,
    /// `sqrt(log2(2 diam / dist(x, boundary)))`: unbounded but VMO.
    SqrtLogDist,
    /// Bump of order `mu` on the cube concentric with the bounding box and
    /// a quarter of its side.
    Bump {
        mu: u32,
    },
}

pub const TEST_FUNCTION_NAMES: [&str; 6] = ["const", "coord1", "halfstep", "logdist", "sqrtlogdist", "bump:mu=K"];

impl TestFunction {
    /// Accepts `const`, `const1`, `const:c=2.5`, `coord1`, `halfstep`,
    /// `logdist`, `sqrtlogdist` (or `sqrtlog`) and `bump:mu=K`.
    pub fn parse(name: &str) -> Result<Self> {
        let unknown =
            || Error::Usage(format!("unknown function '{name}'; available: {}", TEST_FUNCTION_NAMES.join(", ")));
        let lower = name.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "const" | "const1" => TestFunction::Const(1.0),
            "const0" => TestFunction::Const(0.0),
            "coord1" => TestFunction::Coord1,
            "halfstep" => TestFunction::HalfStep,
            "logdist" => TestFunction::LogDist,
            "sqrtlogdist" | "sqrtlog" => TestFunction::SqrtLogDist,
            other => {
                if let Some(c) = other.strip_prefix("const:c=") {
                    TestFunction::Const(c.parse().map_err(|_| unknown())?)
                } else if let Some(mu) = other.strip_prefix("bump:mu=") {
                    let mu: u32 = mu.parse().map_err(|_| unknown())?;
                    if mu == 0 {
                        return Err(Error::Usage("bump order mu must be at least 1".into()));
                    }
                    TestFunction::Bump { mu }
                } else {
                    return Err(unknown());
                }
            }
        })
    }

    pub fn instantiate(&self, domain: Arc<dyn DomainOracle>) -> Arc<dyn Field> {
        match *self {
            TestFunction::Const(c) => Arc::new(Constant(c)),
            TestFunction::Coord1 => Arc::new(Affine1 { axis: 0, offset: 0.0, slope: 1.0 }),
            TestFunction::HalfStep => {
                let cut = domain.bounding_box().center()[0];
                Arc::new(FnField(move |x: &Point| if x[0] < cut { 1.0 } else { 0.0 }))
            }
            TestFunction::LogDist => Arc::new(FnField(move |x: &Point| domain.dist_to_boundary(x).lo.log2())),
            TestFunction::SqrtLogDist => {
                let scale = 2.0 * domain.diam();
                Arc::new(FnField(move |x: &Point| (scale / domain.dist_to_boundary(x).lo).log2().sqrt()))
            }
            TestFunction::Bump { mu } => {
                let cube = concentric_subcube(&domain.bounding_box(), 0.25).expect("positive factor");
                Arc::new(BumpSpec::new(cube, mu).expect("mu >= 1"))
            }
        }
    }

    /// Membership in VMO of the domain (for a bounded uniform domain).
    pub fn is_vmo(&self) -> bool {
        !matches!(self, TestFunction::HalfStep | TestFunction::LogDist)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Const(c) if *c == 1.0 => write!(f, "const"),
            TestFunction::Const(c) => write!(f, "const:c={c}"),
            TestFunction::Coord1 => write!(f, "coord1"),
            TestFunction::HalfStep => write!(f, "halfstep"),
            TestFunction::LogDist => write!(f, "logdist"),
            TestFunction::SqrtLogDist => write!(f, "sqrtlogdist"),
            TestFunction::Bump { mu } => write!(f, "bump:mu={mu}"),
        }
    }
}
