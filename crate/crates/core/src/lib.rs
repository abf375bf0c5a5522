#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod decay_lab;
pub mod error;
pub mod exact_evolution;
pub mod exterior_basis;
pub mod polylib;
pub mod radial_solver;
pub mod radiation3;
pub mod sphere3;

pub use error::{Error, Result};
