//! Whitney decompositions, bounded and vanishing mean oscillation, and a
//! linear extension operator for VMO functions on uniform planar domains.
//!
//! The crate is organised bottom-up:
//!
//! - [`dyadic`]: exact integer geometry of dyadic cubes, cube distances.
//! - [`domain`]: membership/distance oracles and the built-in domains.
//! - [`whitney`]: Whitney families `E` (inside) and `E'` (outside), adjacency,
//!   matching cubes and the enlarged region `Omega~`.
//! - [`metrics`]: Whitney-chain distance `d1` and Jones-constant estimates.
//! - [`field`] and [`oscillation`]: function oracles, cube averages, the
//!   modulus of mean oscillation, BMO norms, least concave majorants.
//! - [`bump`]: logarithmic bump functions and their modulus bound.
//! - [`extension`]: the VMO extension operator and its diagnostics.
//! - [`adversarial`]: the test functions that witness non-extendability on
//!   non-uniform domains.
//! - [`cli`]: the `vmoext` command line front end.

pub mod adversarial;
pub mod bump;
pub mod cli;
pub mod domain;
pub mod dyadic;
pub mod error;
pub mod extension;
pub mod field;
pub mod metrics;
pub mod oscillation;
pub mod whitney;

pub use error::{Error, Result};
