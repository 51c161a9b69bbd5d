//! Spectral toolkit for weighted transfer operators of parameterized
//! expanding circle maps.
//!
//! The crate discretizes `𝓛_u f(y) = Σ_{T_u x = y} g(u, x) f(x)` by Fourier
//! collocation and provides:
//!
//! - [`dynamics`]: map and weight families, inverse branches, the vector
//!   field `X_u = (T_u')⁻¹ ∂_u T_u`.
//! - [`function_space`]: band-limited grid functions, trigonometric
//!   interpolation, spectral derivatives, discrete `C^r` norms.
//! - [`operator`]: collocation matrices of `𝓛_u` and `∂_u 𝓛_u`,
//!   Lasota–Yorke constants and checks, probe-based operator norms.
//! - [`spectral`]: eigenstructure, resolvents, contour-integral spectral
//!   projectors, cross-resolution spectrum checks, uniform resolvent bounds.
//! - [`response`]: parameter regularity of resolvents and projectors.
//!
//! ```
//! use circle_transfer::dynamics::{ConstantWeight, LinearMap, ParameterPoint};
//! use circle_transfer::operator::assemble_transfer;
//! use circle_transfer::spectral::eigendecompose;
//!
//! let l = assemble_transfer(
//!     &LinearMap::doubling(),
//!     &ConstantWeight(0.5),
//!     &ParameterPoint::scalar(0.0),
//!     32,
//!     1,
//! )
//! .unwrap();
//! let data = eigendecompose(&l).unwrap();
//! assert!((data.lead_value.re - 1.0).abs() < 1e-10);
//! ```

pub mod csv;
pub mod dynamics;
pub mod error;
pub mod function_space;
pub mod operator;
pub mod response;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for every discretized operator.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
