//! Wave-vector-resolved quantum fields.
//!
//! Every quantum field here is a map from wave vectors to vectors of a small
//! Hilbert space (a truncated Fock space, the two-mode photon space or the
//! 16-dimensional Clifford space of the Dirac field). Integrals over wave
//! vectors are evaluated by fixed quadrature and every identity of the theory
//! is exposed as a function returning a residual.

pub mod boson;
pub mod boundstate;
pub mod constants;
pub mod coulomb;
pub mod error;
pub mod fermion;
pub mod interaction;
pub mod kspace;
pub mod linalg;
pub mod photon;
pub mod quad;
pub mod reduce;
pub mod suite;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use kspace::{DiagonalOperator, FieldOperator, IntegralKernel, KField, QuadratureGrid, WaveVector};
pub use linalg::{CMat, CVec, PlaneWaveOp, C64};
