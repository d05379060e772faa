//! Analytic engine for downlink coverage in heterogeneous cellular networks
//! whose small cells sit on roads drawn from a Poisson line process.
//!
//! The crate is `no_std` with `alloc`; all math goes through `libm`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coverage;
pub mod geometry;
pub mod model;
pub mod numerics;
