//! Compressed-sensing state tomography from tight-frame measurements.
//!
//! The crate is `no_std` with `alloc`. Dense linear algebra runs on
//! `nalgebra`, randomness on seeded ChaCha generators.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod states;
pub mod cv;
pub mod frames;
pub mod homodyne;
pub mod sampling;
pub mod reconstruct;
pub mod certify;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use states::{
    fock_truncation_error, random_rank_r_state, sign_matrix, tangent_projector, truncate_to_rank, DensityMatrix,
    SpectralTruncation, TangentProjector,
};
