//! File formats, experiment configs and the `peps` command-line tool.
//!
//! The numerical work lives in [`peps_core`]; this crate adds PNG/PPM
//! images, `SDFV` volumes, texture-set directories, checkpoint files,
//! plain-text experiment configs with presets, and the commands behind the
//! binary.

pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod presets;

pub use error::{Error, Result};
