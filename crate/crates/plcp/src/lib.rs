//! Monte Carlo simulator, experiment driver and file formats for
//! road-deployed multi-RAT small-cell networks. The analytic engine lives in
//! `plcp-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod estimate;
pub mod experiment;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod table;
