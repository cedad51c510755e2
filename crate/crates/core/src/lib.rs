//! Simulation of a reflective-surface-assisted underwater acoustic downlink in
//! which the surface (UARIS) injects artificial noise to hide the source from
//! eavesdropping nodes.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: positions, Thorp absorption, four-ray delays, channel synthesis
//! - [`uaris`]: reflection vector, noise amplification and power accounting
//! - [`downlink`]: effective channels, SINR and the objective family R1..R4
//! - [`eavesdropper`]: waveform, delay steering matrices and EN observations
//! - [`sbl`]: subspace-based grid search and trust-region refinement
//! - [`fim`]: Fisher information, CRLB and the 95% confidence ellipsoid
//! - [`optimizer`]: fractional-programming alternating ascent
//! - [`experiment`]: Monte-Carlo sweeps, aggregation and output files
//! - [`config`]: the `key = value` configuration format

pub mod config;
pub mod downlink;
pub mod eavesdropper;
mod error;
pub mod experiment;
pub mod fim;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod sbl;
pub mod uaris;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
