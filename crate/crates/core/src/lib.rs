//! cdf and pdf of a linear quantity of interest of an elliptic PDE with
//! lognormal diffusion and affine random source, estimated with P1 finite
//! elements, closed-form preintegration over the first source variable and
//! randomly shifted rank-1 lattice rules.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod field;
pub mod mesh;
pub mod normal;
pub mod preint;
pub mod qmc;

pub use error::{Error, Result};
