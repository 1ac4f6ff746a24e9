pub mod align;
pub mod cloud;
pub mod geometry;
pub mod mask;
pub mod synth;
pub mod traits;
pub mod error;

pub use error::{Error, Result};
