pub mod analysis;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod profiles;
pub mod quad;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
