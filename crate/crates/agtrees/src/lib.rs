//! Random tree growth processes of `(α, γ)` type and their down-up Markov
//! chains on multifurcating leaf-labelled trees.
//!
//! The crate is organised in layers:
//!
//! * [`urn`] — Pólya urns, Dirichlet-multinomial laws, Chinese restaurants
//!   (unordered and ordered) and the decrement matrix;
//! * [`tree`] — non-planar labelled trees, part addresses and elementary
//!   operations; [`decorated`] — decorated and collapsed trees;
//! * [`semiplanar`] — semi-planar and planar trees, local search, order
//!   sampling and internal structures;
//! * [`growth`] — the growth processes and their weight tables;
//! * [`chains`] — the down-up chains (semi-planar, non-planar, decorated);
//! * [`exact`] — exact rational enumeration of laws and kernels, and the
//!   stationarity, lumpability, intertwining and independence checks;
//! * [`stats`] and [`harness`] — Monte Carlo driver, distribution
//!   comparisons and the Wright-Fisher scaling experiment; [`cli`] — the
//!   command-line front end.
//!
//! Every stochastic procedure is written once against
//! [`sampling::Chooser`], so the same code runs as a seeded simulation or is
//! exhausted exactly by the verifier.

#![warn(missing_docs)]

pub mod chains;
pub mod cli;
pub mod decorated;
pub mod error;
pub mod exact;
pub mod growth;
pub mod harness;
pub mod numeric;
pub mod sampling;
pub mod semiplanar;
pub mod stats;
pub mod tree;
pub mod urn;

pub use error::{Error, Result};
pub use numeric::{Params, Scalar, Q};
