//! Spin-dependent Bohmian trajectories and arrival times for Gaussian
//! packets in a uniform field and at a rectangular barrier.
//!
//! Units throughout: lengths in A, times in fs, energies in eV.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod barrier;
pub mod cli;
pub mod error;
pub mod guidance;
pub mod packets;
pub mod phys;
pub mod quadrature;
pub mod scenario;
pub mod trajectory;
pub mod vec3;

pub use error::{Error, Result};
pub use phys::PhysicalConstants;
pub use scenario::{Scenario, ScenarioSpec};
pub use vec3::Vec3;
