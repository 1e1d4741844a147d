//! Dyadic cubes, planar polygon domains and half-spaces, Whitney coverings
//! and reflected cubes.

pub mod bvh;
mod cube;
mod domain;
mod whitney;

pub use cube::{dyadic_side, Cube, DyadicCube};
pub use domain::{clip_to_box, signed_area, Domain, HalfSpace, PolygonDomain, Window};
pub use whitney::{
    build_whitney, build_whitney_with, overlap_bound, reflect_all, vertical_bound, InvariantReport, ReflectionMap,
    Side, TruncationReport, WhitneyCovering, WhitneyOptions,
};

/// Distance from `x` to the boundary of `domain`.
pub fn dist_to_boundary(domain: &dyn Domain, x: &[f64]) -> f64 {
    domain.dist_to_boundary(x)
}
