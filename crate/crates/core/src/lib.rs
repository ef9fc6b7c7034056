pub mod adiabatic;
pub mod error;
pub mod experiments;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod propagate;

pub use error::{Error, Result};
