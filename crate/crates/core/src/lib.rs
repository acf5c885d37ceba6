//! Finite element solver for the coupled evolutionary Stokes/Darcy problem:
//! free flow (velocity/pressure) over a saturated porous layer (hydraulic
//! head), coupled across a horizontal interface by mass conservation, a
//! normal force balance, and Beavers-Joseph-Saffman slip.
//!
//! Discretization: Taylor-Hood Q2/Q1 (optionally Q2/Q1+Q0) on a conforming
//! structured quadrilateral mesh, zero-mean pressure enforced by a scalar
//! Lagrange multiplier, and a three-level time scheme equivalent to BDF2,
//! started by a second-order Taylor predictor.
//!
//! Everything is deterministic and single-threaded: identical configuration
//! produces byte-identical output files.

// Indexed loops mirror the parallel-array layout of the assembly kernels;
// negated comparisons are deliberate NaN guards in validation paths.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod analysis;
pub mod checks;
pub mod cli;
pub mod docs;
pub mod fem;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod oracle;
pub mod timestep;

pub use error::{Error, Result};
