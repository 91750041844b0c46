//! Full-reference quality metric for fine-grained compressed images.

pub mod colorspace;
pub mod error;
mod fft;
pub mod gradient;
pub mod plane;
pub mod texture;

pub use error::{Error, Result};
pub use plane::{Plane, PooledStats};
