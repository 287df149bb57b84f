//! Simulation of thermodynamically consistent quantum measurements.
//!
//! Measurements are realised by correlating the system with a thermal
//! pointer and reading the pointer out projectively. At finite pointer
//! temperature the correlation can either reproduce the system statistics on
//! the pointer (unbiased) or leave the system statistics untouched
//! (non-invasive), never both. Two metrology tasks are built on top:
//!
//! * [`wva`]: weak-value amplification with thermal system and pointer.
//! * [`seq`]: sequential phase estimation on one probe without resetting.

pub mod error;
pub mod measure;
pub mod quantum;
pub mod rng;
pub mod seq;
pub mod wva;

pub use error::{Error, Result};
