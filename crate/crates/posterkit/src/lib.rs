//! Filesystem, network and command-line side of the poster layout toolkit.
//!
//! The computational core lives in [`posterkit_core`], re-exported here as
//! [`core`]. This crate adds dataset manifests and ingestion adapters
//! ([`data`]), image and embedding files ([`io`]), the model gateway
//! ([`gateway`]), asset loading ([`assets`]), evaluation glue ([`eval`]),
//! run configuration ([`config`]) and the `posterkit` binary ([`cli`]).

pub use posterkit_core as core;

pub mod assets;
pub mod cli;
pub mod config;
pub mod data;
pub mod eval;
pub mod gateway;
pub mod io;
