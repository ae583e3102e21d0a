//! Sparse Bayesian regression, latent factor models and Weibull model search
//! for gene expression studies.
//!
//! The crate is `no_std` with `alloc`. Enable `std` for standard-library
//! backed RNG and error support, and `parallel` for rayon-based fits of
//! independent rows and model neighbourhoods. Results do not depend on the
//! thread count: every parallel unit draws from its own seeded stream.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
extern crate alloc;

pub mod dataset;
pub mod error;
pub mod evolution;
pub mod factor;
pub mod linalg;
pub mod math;
pub mod projection;
pub mod regression;
pub mod rng;
pub mod signature;
pub mod survival;
pub mod synthetic;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
