//! Nonlinear heat equation with nonlocal boundary flux and time-dependent
//! absorption on an interval: regime prediction, simulation and certificates.

// `!(x > 0.0)` guards reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod discretization;
pub mod harness;
pub mod monitors;
pub mod problem;
pub mod quad;
pub mod timestepper;
