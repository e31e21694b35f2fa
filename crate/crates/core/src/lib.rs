//! Frequency- and time-resolved photon correlations radiated by a pair of
//! dipole-coupled, strongly driven two-level emitters, computed with weakly
//! coupled two-level sensors acting as frequency filters.

pub mod config;
pub mod dipole;
pub mod error;
mod linalg;
pub mod liouvillian;
pub mod nonclassicality;
pub mod observables;
pub mod operator;
pub mod output;
pub mod presets;
pub mod sweep;

pub use error::{Error, Result};
