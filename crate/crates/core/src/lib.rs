pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod markdown;
pub mod market;
pub mod model;
pub mod policies;
pub mod reference;
pub mod scalar;
pub mod validate;

pub use error::{Error, Result};

pub type Real = f64;
pub type Exact = num_rational::Ratio<i128>;
