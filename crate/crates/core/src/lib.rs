//! Accelerated first-order methods for inequality-constrained convex problems.
//!
//! The constraints are folded into a log-barrier with an enlarged feasible set,
//! and the resulting smooth objective is minimized either by integrating a
//! Bregman-Lagrangian flow or by one of three discretizations of it.

pub mod algorithms;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod oracle;
pub mod problem;
pub mod rates;
pub mod trajectory;
mod vecops;

pub use error::{Error, Result};
