//! Widefield NV-diamond microwave field imaging: near-field synthesis from
//! wire models, Rabi image-cube simulation and pixel-wise field recovery.

pub mod acquisition;
pub mod analysis;
pub mod cli;
pub mod currents;
pub mod error;
pub mod fieldcore;
pub mod formats;
pub mod nearfield;

pub use error::{Error, Result};
