//! Polynomials, grid functions, near-best polynomial approximation on cubes,
//! Campanato seminorms and the Calderón-Zygmund decomposition.
//!
//! The near-best polynomial `p_Q f` is the least-squares fit of the grid
//! samples in `Q` over the tensor Legendre basis of `Q`, which is the
//! `L^2(Q)` projection for the midpoint rule and commutes with shifts and
//! dilations of the cube.

mod checks;
mod cz;
mod grid;
mod poly;
mod project;
mod seminorm;

pub use checks::{mean_abs, neighbor_poly_gap, poly_norm_equivalence_check, NormEquivalence};
pub use cz::{cz_decompose, CzFamily};
pub use grid::{CellRange, Grid, GridFunction};
pub use poly::{multi_indices, MultiIndex, Polynomial};
pub use project::{fit_grid, legendre_coeffs, oscillation, project, project_fn, Fit, Norm};
pub(crate) use seminorm::ActiveTable;
pub use seminorm::{
    campanato_seminorm, random_cube_check, weighted_seminorm, LevelMax, SeminormOptions, SeminormReport,
};
