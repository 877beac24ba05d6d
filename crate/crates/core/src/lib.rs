//! Exact geometric linearization of completely integrable vector fields at
//! nondegenerate singular points, with a floating-point verifier.

pub mod error;
pub mod fixtures;
pub mod integrability;
pub mod invariants;
pub mod linalg;
pub mod normalform;
pub mod numverify;
pub mod poly;
pub mod scalar;
pub mod series;
pub mod spectrum;

pub use error::*;
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use series::{Exponent, PolyMap, TruncatedSeries, VectorFieldJet};
