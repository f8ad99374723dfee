//! Cahn-Hoffman frontiers, Wulff shapes and anisotropic-curvature surfaces
//! for non-convex energy densities on S^1 and S^2.
//!
//! The crate is organised bottom-up:
//!
//! * [`integrand`]: densities, their Cahn-Hoffman map and the operator `A`;
//! * [`frontier`]: sampling the frontier, its singular set, self-crossings
//!   and the Wulff shape;
//! * [`curves`]: closed piecewise-smooth curves built from frontier arcs,
//!   their anisotropic curvature and the enumeration of closed curves of
//!   constant anisotropic mean curvature;
//! * [`surfaces`]: rotational lifts of those curves to S^2 densities;
//! * [`flow`]: self-similar shrinking families under anisotropic mean
//!   curvature flow;
//! * [`export`]: JSON, CSV, SVG and OBJ writers.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod error;
pub mod export;
pub mod flow;
pub mod frontier;
pub mod integrand;
pub mod poly;
pub mod surfaces;

pub use error::{Error, ErrorCategory, Result};
pub use integrand::{
    rotational_lift, ConvexityReport, DerivativeMode, Direction, Integrand, IntegrandSpec, Kind,
    SphereOperatorA,
};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order is always index order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
