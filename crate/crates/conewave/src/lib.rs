//! Numerical toolkit for wave equations whose spatial geometry has a conic
//! singularity along a timelike curve.

// Range checks are written `!(x > a)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod specfun;
pub mod tfun;
pub mod normal_ops;
pub mod phase_flow;
pub mod radial_solver;
pub mod norms;
pub mod cli;
