//! Simulator and inverse-problem toolkit for a one-dimensional non-Hermitian
//! (gain/loss) photonic quantum walk on a two-band lattice.
//!
//! The walk is specified by two real parameters: a coin splitting angle
//! `delta` and a non-Hermiticity strength `eta`.  One time step in momentum
//! space is the 2×2 operator
//!
//! ```text
//! U(q) = T(q) · W ,        W = (σ₀ + i σₓ)/√2 ,
//! T(q) = [[α, i β e^{iq}], [i β e^{−iq}, α]] ,
//! α = cos((δ + iη)/2) ,    β = sin((δ + iη)/2) ,
//! ```
//!
//! which has unit determinant and the closed-form Bloch decomposition
//! `U(q) = cos E · σ₀ − i sin E · (n · σ)` with complex quasi-energy `E(q)`
//! and complex Bloch vector `n(q)`.
//!
//! The crate provides, layer by layer:
//!
//! * [`mat`] — complex 2×2 matrix and Pauli-algebra helpers,
//! * [`spectral`] — the forward model, Bloch decompositions and eigensystems,
//! * [`polarimetry`] — projective intensity ratios and dataset synthesis,
//! * [`image`] — rendering datasets to 16-bit PGM frames and reading them back,
//! * [`tomography`] — per-pixel operator reconstruction from ratio sets,
//! * [`topology`] — winding numbers, phase diagrams and exceptional points,
//! * [`ptsym`] — the rotated frame, PT normal form and symmetry-breaking order
//!   parameter,
//! * [`calibration`] — extraction of `delta` and `eta` from photometric
//!   readings.
//!
//! All angles are radians; intensities and ratios are dimensionless.

pub mod calibration;
pub mod image;
pub mod mat;
pub mod polarimetry;
pub mod ptsym;
pub mod spectral;
pub mod tomography;
pub mod topology;
