//! Mesh-free phase-field topology optimization driven by Fourier feature
//! networks.

pub mod autodiff;
pub mod config;
pub mod elasticity;
pub mod error;
pub mod flow;
pub mod gradcheck;
pub mod net;
pub mod optim;
pub mod phasefield;
pub mod problem;
pub mod registry;
pub mod run;
pub mod sampling;
pub mod train;

pub use error::{Error, Result};
