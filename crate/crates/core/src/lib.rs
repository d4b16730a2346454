//! Exact arithmetic for Picard modular groups PU(2,1; O_d) acting on the
//! Heisenberg boundary, with tools to certify horoball coverings and derive
//! presentations via Macbeath's theorem.

pub mod covering;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod heisenberg;
pub mod hermitian;
pub mod pipeline;
pub mod points;
pub mod presentation;
pub mod ring;

pub use error::{Error, Result};
