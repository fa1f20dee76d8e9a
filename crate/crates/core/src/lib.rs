//! Junction geometry, complementing-condition checks, hodograph transforms,
//! a curve-network curvature flow simulator and exact combinatorial checks
//! for multi-sheet free-boundary problems.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod complementing;
pub mod gevrey;
pub mod hodograph;
pub mod interp;
pub mod junction_config;
pub mod mcf_sim;
