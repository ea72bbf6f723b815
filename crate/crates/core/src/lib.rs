pub mod cli;
pub mod decomposition;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod forecast;
pub mod growth;
pub mod linalg;
pub mod longrun;
pub mod panel;
pub mod synthetic;

pub use error::{Error, Result};
