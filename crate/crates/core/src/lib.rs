pub mod config;
pub mod error;
pub mod expmap;
pub mod extensions;
pub mod geometry;
pub mod interp;
pub mod quantize;
pub mod spectral;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{anchor_apply, make_model, riemannian_volume_weights, GridFunction, ModelGeometry, ModelKind, ModelParams};
pub use num_complex::Complex64 as C64;
