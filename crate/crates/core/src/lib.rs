//! Einstein-product tensor algebra, operator perspective means of positive
//! definite tensors, and empirical checkers for tail and Löwner-order bounds.

pub mod bounds;
pub mod connections;
pub mod error;
pub mod experiment;
pub mod random;
pub mod spectral;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{EinsteinTensor, Shape};
