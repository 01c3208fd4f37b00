//! Swing option valuation on optimal quantization trees.

pub mod analytics;
pub mod contract;
pub mod error;
pub mod normal;
pub mod lsmc;
pub mod models;
pub mod pricer;
pub mod quantizer;
pub mod tree;

pub use error::{Error, Result};
