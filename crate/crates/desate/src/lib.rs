//! Battery health prognostics with per-noise denoising branches.
//!
//! A capacity series is normalized by rated capacity, corrupted with one of
//! four noise families, denoised by either a denoising autoencoder or a
//! wavelet shrinkage branch, and regressed by a multi-head self-attention
//! transformer encoder. A minimization layer picks the branch with the lowest
//! relative error and the report carries RE/MAE/RMSE per branch.
//!
//! Start with the runnable examples (`cargo run --example full_pipeline`) or
//! the `desate` binary (`desate --help`).

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dae;
pub mod data;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod report;
pub mod numerics;
pub mod wavelet;

pub use error::{Error, Result};
