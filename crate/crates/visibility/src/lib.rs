//! Rigorous lower bounds for the visibility index of bodies of fixed volume
//! inside the unit ball.
//!
//! The pipeline discretizes a reduced optimal-mass-transfer problem into a
//! balanced transportation program, solves it exactly for a family of
//! multipliers, and turns the family into a volume-indexed lower-bound curve
//! by a Legendre transform. Closed-form theorem bounds and a Monte-Carlo
//! billiard simulator cross-validate the curve on concrete 2D scenes.

pub mod billiard;
pub mod bounds;
pub mod cli;
pub mod dim;
pub mod error;
pub mod geom;
pub mod kernel;
pub mod marginal;
pub mod output;
pub mod rng;
pub mod scene;
pub mod transport;
pub mod verify;

pub use dim::DimensionContext;
pub use error::{Error, Result};
