//! Wavelet-frame construction and greedy approximation on top of a single
//! univariate activation.
//!
//! The crate builds everything from one ingredient: an even, integrable
//! activation `σ: ℝ^d → ℝ`. Dyadic dilates and translates of `σ` form an
//! averaging-kernel family; consecutive differences of those kernels form
//! wavelet-like atoms; an orthogonal greedy loop selects a sparse expansion
//! from the atom dictionary; and the expansion converts exactly into a
//! two-per-atom shallow network with scalar weights and vector biases.
//!
//! Modules mirror that pipeline:
//!
//! - [`activations`]: the activation catalog (values, gradients, Hessian
//!   norms, normalization).
//! - [`quadrature`]: tensor-product grids, deterministic integration, and
//!   the L² distance used to compare activations.
//! - [`kernelcheck`]: numerical certification of the decay/regularity
//!   conditions the frame construction needs.
//! - [`frame`]: lattices, atoms, dictionaries, and expansions.
//! - [`greedy`]: the orthogonal greedy loop, its trace, and the rate check.
//! - [`network`]: expansion → network conversion, activation substitution,
//!   and the vector-weight rewrite for separable activations.
//!
//! The crate is `no_std` + `alloc` (disable the default `std` feature);
//! all transcendental math goes through `libm` so results are bit-identical
//! across platforms and feature combinations.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod activations;
pub mod error;
pub mod frame;
pub mod greedy;
pub mod kernelcheck;
pub mod linalg;
pub mod math;
pub mod network;
pub mod quadrature;
pub mod rng;

pub use activations::ActivationSpec;
pub use error::Error;
pub use frame::{AtomIndex, BoxDomain, Dictionary, WaveletExpansion};
pub use greedy::OgaTrace;
pub use kernelcheck::{HomogeneousConstants, KernelReport};
pub use network::ScalarWeightNet;
pub use quadrature::{Grid, QuadRule};
