//! Dynamic-rescaling simulation of self-similar blowup in model PDEs, and
//! certified positivity of the weak-advection stability form.

pub mod cert;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod models;
pub mod profiles;
pub mod rescale;
pub mod spline;

pub use error::{Error, Result};
