#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod estimates;
pub mod propagator;
pub mod quadrature;
pub mod selftest;
pub mod specfun;
pub mod spectral;
