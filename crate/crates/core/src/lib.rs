//! Approximate quasi-interpolation of scattered data with polynomial-weighted
//! Gaussians.

pub mod conditions;
pub mod cubature;
pub mod error;
pub mod experiments;
pub mod gauss;
pub mod gridded;
pub mod linalg;
pub mod multiindex;
pub mod nodes;
pub mod partition;
pub mod polynomial;
pub mod quadrature;
pub mod scattered;
pub mod star;

pub use error::{Error, Result};
pub use multiindex::{enumerate_multiindices, MultiIndex};
pub use polynomial::{hermite, s_beta, Polynomial};
