mod binio;
pub mod dataio;
pub mod dsp;
pub mod error;
pub mod nn;
pub mod stats;
pub mod tensor;
pub mod training;

pub use error::{Error, ErrorClass, Result};
pub use tensor::Tensor;
