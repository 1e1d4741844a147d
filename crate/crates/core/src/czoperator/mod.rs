//! Even homogeneous singular kernels on the plane, the truncated operator
//! `T_D f = T(chi_D f) chi_D` as a principal-value quadrature, and Taylor
//! expansions of the kernel away from the origin.

mod kernel;
mod operator;
mod taylor;

pub use kernel::{beurling_derivative, Kernel, KernelCheck};
pub use operator::{
    apply_direct, apply_truncated, beurling_polygon_integral, l2_norm_estimate, Scheme, TruncatedOperator,
};
pub use taylor::{kernel_taylor, kernel_taylor_exact, numerical_derivative, polynomial_tail};
