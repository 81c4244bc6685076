//! Surface-group words, Fuchsian and grafted Hitchin representations,
//! length censuses and thermodynamic estimators.

pub mod census;
pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fingerprint;
pub mod fuchsian;
pub mod grafting;
pub mod group;
pub mod lie;
pub mod optimize;
pub mod thermo;

pub use error::{Error, Result};
