//! Quantum states paired with mirrored shadow registers in a modeled vacuum.
//!
//! Every state in this crate carries two amplitude stores, the particle
//! register and its shadow, and every operation (creation, evolution,
//! measurement, collapse) updates both in one step.

pub mod cli;
pub mod erratum;
pub mod error;
pub mod fock;
pub mod gates;
pub mod measurement;
pub mod protocols;
pub mod register;
pub mod report;
pub mod rng;
pub mod stats;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
