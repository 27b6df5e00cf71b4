pub mod analysis;
pub mod classes;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod overlap;
pub mod pipeline;
pub mod synthetic;
pub mod tree;

pub use error::{Error, Result};
