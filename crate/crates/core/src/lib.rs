pub mod error;
pub mod linalg;
pub mod algebra;
pub mod sampling;
pub mod vectorizer;
pub mod presets;
pub mod decoupler;
pub mod ode;
pub mod dynamics;
pub mod config;
pub mod cli;

pub use error::{Error, ErrorCategory, Result};
