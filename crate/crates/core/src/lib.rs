pub mod ed;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod mpemba;
pub mod protocol;
pub mod quadrature;
pub mod quasiparticle;
pub mod run;
pub mod ssh;
pub mod xy;

pub use error::{Error, Result};
