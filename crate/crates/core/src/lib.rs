pub mod analytic;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod io;
pub mod montecarlo;
pub mod optics;

pub use error::{Error, Result};
