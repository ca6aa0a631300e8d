//! Files, reports and command-line driver around `ing-core`.
//!
//! Everything here is IO: reading masks, logits and attribution rasters
//! named by a manifest, fanning evaluation out over a worker pool, and
//! writing CSV/JSON/markdown tables.

pub mod cli;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod logits;
pub mod manifest;
pub mod mask;
pub mod otdd;
pub mod raster;
pub mod report;
pub mod synth;

pub use error::{ProtocolError, Result};
