//! Topological summaries of collections of Hi-C contact maps.
//!
//! The pipeline runs fragment pairs through binned and smoothed contact maps
//! ([`ingest`]) and then through stratum-adjusted correlation distances
//! ([`scc`]). Classical-MDS filters ([`spectral`]) feed a multivariate Mapper
//! with automatically selected parameters ([`mapper`]). The Mapper is then
//! summarised by extended persistence diagrams ([`persistence`]) and given
//! bootstrap confidence levels ([`bootstrap`]).
//!
//! The pairwise kernels, per-cover-element clustering and bootstrap
//! iterations run on rayon when the `parallel` feature is enabled (the
//! default). The [`Execution`] argument selects the sequential path at
//! runtime; both paths give bit-identical results.

pub mod bootstrap;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod io;
pub mod mapper;
pub mod persistence;
pub mod scc;
pub mod spectral;
pub mod union_find;

pub use error::{Error, Result};
pub use exec::Execution;
