//! Pseudorandom generator fooling degree-2 polynomial threshold functions
//! under the Gaussian distribution, plus a statistical harness to verify it.
//!
//! The generator ([`generator`]) sums `ℓ` geometrically weighted families of
//! approximate Gaussians ([`approx_gaussian`]); each family draws its bits
//! from a Nisan generator for read-once branching programs ([`nisan`]).
//! [`quadratic`] provides the polynomial algebra and [`harness`] the
//! Monte-Carlo experiments.

pub mod approx_gaussian;
pub mod bits;
pub mod error;
pub mod generator;
pub mod harness;
pub mod nisan;
pub mod quadratic;
pub mod rng;

pub use approx_gaussian::ApproxGaussianSpec;
pub use error::{Error, Result};
pub use generator::{seed_table, GeneratorConfig, Mode, SeedRow};
pub use nisan::{NisanParams, Robp};
pub use quadratic::Quadratic;
