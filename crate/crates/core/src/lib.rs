//! Interference-aware resource management for dense femtocell networks.
//!
//! FAPs sharing a femtocell gateway are grouped into virtual clusters, each
//! operating on its own channel set, so that co-channel FAPs are as far apart
//! as possible. The crate provides the clustering algorithm (GVCF), an
//! uncoordinated baseline (NCS), the link budget used to score them, and a
//! Monte-Carlo scenario runner that compares the two.
//!
//! Modules, bottom-up:
//! - [`geometry`]: seeded placement of FAPs and mobiles, distance matrix
//! - [`radio`]: path loss, shadowing, noise, SINR, spectral efficiency
//! - [`spectrum`]: FFR femto pool, per-cluster channel sets, reserve list
//! - [`clustering`]: GVCF, NCS, structural metrics, adaptation rules
//! - [`simkernel`]: replicas, metrics, look-up tables, paired comparison

pub mod clustering;
pub mod error;
pub mod geometry;
pub mod radio;
pub mod rng;
pub mod simkernel;
pub mod spectrum;

pub use error::{Error, Result};

/// First line of every CSV file this crate writes.
pub const CSV_VERSION_LINE: &str = "# femtosim-csv v1";
