//! Staged simulations of randomness and genericity constructions on Cantor space.

pub mod bits;
pub mod coding;
pub mod cylinder;
pub mod demuth;
pub mod dyadic;
pub mod error;
pub mod fireworks;
pub mod gen;
pub mod minpair;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod staged;

pub use bits::BitString;
pub use cylinder::CylinderSet;
pub use dyadic::Dyadic;
pub use error::{Error, Result};
