//! Opinion dynamics on friendship graphs: influence kernels, simulation,
//! a synthetic network generator, a subscription-based observer model and
//! the micro-level shift metrics computed between consecutive snapshots.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod generator;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod model;
pub mod observer;
pub mod rng;
pub mod table;

pub use error::{Error, ErrorCategory, Result};
pub use graph::SocialGraph;
pub use model::{IdeologicalGroup, NeighborhoodStats, Opinion, OpinionSnapshot};
