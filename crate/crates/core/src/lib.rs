//! Numerical core for dissipative one-band lattices.
//!
//! Covers the momentum-space band data, finite open-boundary lattice
//! operators, the exact edge-free relaxation solution, the dense Lindblad
//! superoperator, density-matrix propagation and observables, and the
//! stochastic Schrödinger unraveling with reproducible noise streams.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! runner and the parallel ensemble driver live in the `skinlab` crate.
//!
//! Conventions shared by every module:
//!
//! * A band function is `X(k) = Σ_m x_m e^{ikm}` and its open-boundary
//!   matrix is `⟨n|X|n'⟩ = x_{n'-n}`, so the plane wave `e^{ikn}` is an
//!   eigenvector of the infinite matrix with eigenvalue `X(k)`.
//! * Density matrices are vectorized by stacking columns:
//!   `vec(ρ)[i + N j] = ρ[i, j]`.
//! * Site labels reported to users are 1-based; matrix indices are 0-based.

#![no_std]

extern crate alloc;

pub mod band;
pub mod bulk;
pub mod curve;
pub mod error;
pub mod evolve;
pub mod lattice;
pub mod linalg;
pub mod liouvillian;
pub mod trajectories;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix.
pub type CMat = faer::Mat<C64>;

pub use band::BandModel;
pub use evolve::{DensityMatrix, MasterPropagator};
pub use lattice::{Construction, LatticeOperators, SpectrumReport};
pub use liouvillian::{LiouvillianMatrix, StationaryReport};
