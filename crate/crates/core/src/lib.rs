//! Rate-limited LQG control over prefix-free binary codes.
//!
//! The pipeline runs plant model → Riccati certainty-equivalence quantities
//! ([`lqr`]) → minimum directed-information rate `DI(γ)` ([`di`]) → Gaussian
//! sensor realization and Kalman gains ([`sensor`]) → dithered quantizer
//! ([`quantizer`]) and Shannon–Fano coding ([`codec`]) → closed-loop Monte
//! Carlo ([`sim`]). [`validation`] holds the reference quantities that the
//! achieved rate is checked against.

pub mod error;
pub mod matrix;
pub mod lqr;
pub mod di;
pub mod sensor;
pub mod validation;
pub mod rng;
pub mod quantizer;
pub mod codec;
pub mod sim;
pub mod model_file;
pub mod cli;

pub use error::{Error, Result};
