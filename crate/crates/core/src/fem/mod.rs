//! Reference elements, Gauss quadrature, the bilinear geometry map, and
//! continuous-Lagrange dof numbering on one subdomain.

mod dofmap;
mod geometry_map;
mod quadrature;
mod reference;

pub use dofmap::{build_dofmap, DofMap};
pub use geometry_map::CellMap;
pub use quadrature::{gauss_1d, gauss_2d, QuadRule1d, QuadRule2d};
pub use reference::{shape_gradients, shape_values, ElemKind};
