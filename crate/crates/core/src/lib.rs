//! Power, compression and backhaul optimization for multi-layer hybrid
//! relaying over out-of-band relays with finite-capacity backhaul.
//!
//! The solvers are generic over the scalar type ([`Scalar`], i.e. `f32` or
//! `f64`); the aliases below fix it to `f64`, which is what the tolerances
//! are tuned for.

pub mod error;
pub mod gp;
pub mod homotopy;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod schemes;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Config = model::NetworkConfig<f64>;
pub type Alloc = model::Allocation<f64>;
pub type Point = model::CumulativePoint<f64>;
pub type Report = model::FeasibilityReport<f64>;
pub type Gp = gp::GpProblem<f64>;
pub type Trace = homotopy::HomotopyTrace<f64>;
pub type SchemeSolution = schemes::Solution<f64>;
