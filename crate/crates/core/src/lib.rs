//! Google-matrix analysis of the multiproduct world trade network.
//!
//! The pipeline runs from bilateral trade volumes to network-aware rankings
//! and their derived quantities:
//!
//! * [`tensor`] - the per-year money tensor over (product, exporter,
//!   importer) cells, built with the max-of-reports rule;
//! * [`google`] - the column-stochastic transition matrix, dangling-node
//!   handling, the volume-weighted personalization vector, and the damped
//!   Google matrices for direct and inverted flows;
//! * [`ranks`] - PageRank / CheiRank by power iteration, ImportRank /
//!   ExportRank from raw volumes, sorted indexes and the combined 2DRank;
//! * [`balance`] - country, product and (product, country) trade balances
//!   plus the finite-difference sensitivity to product price shifts;
//! * [`regomax`] - the reduced Google matrix over a node subset, folding all
//!   indirect pathways through the rest of the network;
//! * [`netreduce`] - top-k reduced trade networks and year-over-year link
//!   classification;
//! * [`metrics`] - Kendall tau distance between ranking lists.
//!
//! The crate is `no_std` (with `alloc`); everything here is pure computation
//! over immutable inputs. Parsing, file formats and the command-line front
//! end live in the companion `wtn-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod balance;
pub mod error;
pub mod google;
mod linalg;
pub mod metrics;
pub mod netreduce;
pub mod ranks;
pub mod regomax;
pub mod registry;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::Error;
pub use google::{Direction, GoogleMatrix, DEFAULT_ALPHA};
pub use ranks::{Level, PipelineParams, RankKind, RankSet, RankVector};
pub use registry::Registries;
pub use tensor::MoneyTensor;
