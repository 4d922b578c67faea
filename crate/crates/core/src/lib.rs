//! Positional encoding projected sampling (PEPS) for implicit neural representations.
//!
//! A coordinate `x` is projected onto its absolute-positional-encoding curve,
//! giving the points of interest `(x, S_1..S_L, C_1..C_L)`. A learned encoder
//! (dense grid, hash grid, multi-resolution stack, ...) is sampled at every
//! point and the latents are aggregated, either by concatenation or by the
//! pink aggregator which allocates latent dimensions inversely to frequency.
//!
//! The crate is `no_std` with `alloc`. Enable the `std` feature for runtime
//! CPU feature detection in the matrix kernels and `std::error::Error`.
//!
//! Module map:
//! - [`numerics`]: parameter storage, reverse-mode tape, Adam, schedules.
//! - [`projection`]: points of interest, raw positional encoding, Lissajous curves.
//! - [`encoders`]: grids, hash grids, multi-resolution stacks, LPE, NTC and the PEPS wrapper.
//! - [`aggregators`]: concatenation, pink and sum aggregation of sampled latents.
//! - [`model`]: MLP head, losses, training loop and checkpoints.
//! - [`metrics`]: PSNR, SSIM, spectral distances, radial PSD, SDF IoU.
//! - [`signals`]: images, texture sets, SDF volumes and samplers.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_op_in_unsafe_fn)]
#![warn(missing_docs)]

extern crate alloc;

pub mod aggregators;
pub mod encoders;
mod error;
pub mod kv;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod projection;
pub mod signals;

pub use error::{Error, Result};
