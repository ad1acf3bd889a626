//! Point sets for kernel interpolation obtained from relaxed D-optimal designs.
//!
//! The pipeline truncates a kernel's Mercer expansion, maximises the determinant of
//! the information matrix over relaxed candidate weights by solving a second-order
//! cone program, and keeps the weights that are local maxima on the candidate grid.

pub mod error;
pub mod design;
pub mod geometry;
pub mod kernels;
pub mod socp;
pub mod interpolation;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};
