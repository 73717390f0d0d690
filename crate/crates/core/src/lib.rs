//! Rate-distortion guided multiple-trial decoding of Reed-Solomon codes.

#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod gf;
pub mod measures;
pub mod patterns;
pub mod pipeline;
pub mod rdengine;
pub mod rscodec;

pub use error::{Error, Result};
