pub mod bounds;
pub mod configs;
pub mod continuous;
pub mod energies;
pub mod error;
pub mod gale;
pub mod linalg;
pub mod optimizer;

pub use error::{Error, Result};
