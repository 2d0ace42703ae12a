//! Radiation structures on null hypersurfaces.

pub mod ambient;
pub mod automorphisms;
pub mod calculus;
pub mod connection;
pub mod error;
pub mod groups;
pub mod hypersurface;
pub mod linalg;
pub mod scenario;
pub mod selftest;
pub mod shapes;
pub mod tensor;

pub use error::{Error, Result};
