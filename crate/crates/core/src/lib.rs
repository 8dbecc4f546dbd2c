pub mod airlink;
pub mod channel;
pub mod code;
pub mod error;
pub mod harness;
mod linalg;
pub mod protocol;
pub mod receiver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
