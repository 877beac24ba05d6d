//! Truncated multivariate power series with exact Gaussian-rational coefficients,
//! polynomial maps and vector-field jets built on them.

mod compose;
mod exponent;
mod field;
mod jacobian;
mod map;
mod truncated;

pub use compose::{substitute, Composer};
pub use exponent::{monomials_of_degree, monomials_up_to, Exponent};
pub use field::{lie_derivative, pushforward, VectorFieldJet};
pub use jacobian::{jacobian_rank_series, JacobianRank};
pub use map::{apply_matrix, compose_series, invert_map, PolyMap};
pub use truncated::{mul_truncated, Term, TruncatedSeries};
