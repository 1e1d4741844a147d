//! Numerical toolkit for Zygmund-type smoothness on planar Lipschitz domains:
//! Whitney coverings, growth functions, near-best polynomial approximation
//! and Campanato seminorms, the Whitney extension operator, truncated
//! singular integrals with even homogeneous kernels, and experiments that
//! test when such operators preserve the smoothness class.

pub mod czoperator;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod geometry;
pub mod growth;
pub mod polyapprox;

pub use error::{Error, Result};
