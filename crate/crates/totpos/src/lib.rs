//! Exact-arithmetic toolkit for total positivity.
//!
//! Everything in this crate runs over arbitrary-precision rationals — there
//! is no floating point anywhere. It provides:
//!
//! - [`classify`]: membership in TP / invertible-TN / singular-TN with minor
//!   witnesses, Fekete's contiguous-minor shortcut, Neville-elimination
//!   invertible-TN testing, and totally positive perturbations of ITN
//!   matrices.
//! - [`factor`]: the canonical bidiagonal factorization of ITN matrices, its
//!   inverse parameter map, Gaussian LDU decomposition, generator words, and
//!   seeded random ITN/TP generation through the parameter map.
//! - [`structure`]: centralizer block structure of positive diagonal
//!   matrices, commutation patterns of embedded 2x2 blocks, and the negative
//!   inverse entry that keeps non-diagonal ITN matrices out of any subgroup.
//! - [`automorph`]: the semigroup automorphisms of TP/ITN — maps
//!   A ↦ μ(det A)·(det A)^{-1/n}·R·A·R^{-1} with R diagonal or antidiagonal
//!   and μ a power map — applied exactly, verified as homomorphisms,
//!   recovered from generator images, and extended from TP to ITN.
//! - [`battery`]: the seeded property-test battery behind `totpos check-all`.
//!
//! Scalars that are irrational (n-th roots of determinants) are carried
//! exactly as prime-power products by [`radical::RadicalScalar`], so every
//! equality in the crate is decided by comparison of canonical forms.

pub mod automorph;
pub mod battery;
pub mod classify;
pub mod error;
pub mod factor;
pub mod io;
pub mod matrix;
pub mod radical;
pub mod rat;
pub mod structure;

pub use error::{Error, Result};
pub use matrix::{MinorIndex, RatMatrix};
pub use radical::{RadicalScalar, ScaledMatrix};
pub use rat::Rat;
