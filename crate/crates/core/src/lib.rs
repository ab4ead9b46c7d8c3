//! Numerical toolkit for free and weakly interacting scalar fields on
//! two-dimensional de Sitter space.
//!
//! The crate covers the Lorentz group `SO0(1,2)` and its decompositions, the
//! causal geometry of the hyperboloid, special functions, the principal and
//! complementary series on the circle, the one-particle structure of the free
//! field and the Euclidean field on the sphere.

pub mod checks;
pub mod ds_geometry;
pub mod euclid_field;
pub mod one_particle;
pub mod so12_group;
pub mod special_functions;
pub mod uir_circle;

pub mod quad;

mod error;

pub use error::{Error, Result};
