//! Linear viscoelastic wave propagation in one dimension.
//!
//! Material models combine a Newtonian viscosity with a completely monotone
//! relaxation kernel. On top of the kernels the crate provides numerical
//! Laplace inversion, creep/relaxation duality, dispersion and attenuation,
//! regime classification, and Green's function synthesis.
//!
//! Every routine is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.

pub mod dispersion;
pub mod duality;
pub mod config;
pub mod error;
pub mod kernels;
pub mod laplace;
pub mod limits;
pub mod quad;
pub mod scalar;
mod volterra;
pub mod wavefield;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

/// Double-precision relaxation kernel.
pub type Kernel = kernels::RelaxationKernel<f64>;
/// Double-precision material model.
pub type Model = kernels::MaterialModel<f64>;
pub type Extended = kernels::ExtendedReal<f64>;
