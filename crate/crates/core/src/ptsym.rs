//! Rotated-frame PT-symmetry machinery: normal form, phase classification
//! and the symmetry-breaking order parameter.
//!
//! The walk's effective Hamiltonian `H(q) = E(q) n(q)·σ` anticommutes with
//! the sublattice operator `S = (σ_y − σ_z)/√2` because `n_y = n_z`.  The
//! half-coin rotation `r = √W = cos(π/8)σ₀ + i sin(π/8)σₓ` maps `S` onto the
//! standard chiral operator (`r S r† = −σ_z`), so in the rotated frame the
//! Hamiltonian is purely off-diagonal:
//!
//! ```text
//! H_r = r H r† = [[0, z_a], [z_b, 0]] ,
//! z_a = E (nₓ − i√2 n_y) ,   z_b = E (nₓ + i√2 n_y) ,
//! λ² = z_a z_b  (eigenvalues ±λ) .
//! ```
//!
//! Writing `z_a = e^{iφ'} a e^{iφ}`, `z_b = e^{iφ'} b e^{−iφ}` with
//! `a, b ≥ 0`, `φ' ∈ (−π/2, π/2]`, `φ ∈ (−π, π]` puts every such operator
//! into a normal form: up to the overall complex scale `e^{iφ'}` and the
//! momentum-like gauge rotation `R_φ = W·diag(e^{−iφ/2}, e^{iφ/2})`, it is
//! the canonical PT-symmetric two-level Hamiltonian
//!
//! ```text
//! H_PT(a, b) = ½ [[i(b − a), a + b], [a + b, −i(b − a)]] ,
//! σₓ conj(H_PT) σₓ = H_PT ,   eig(H_PT) = ±√(ab) .
//! ```
//!
//! The antiunitary check `VK: ψ ↦ diag(e^{iϕ}, e^{−iϕ}) conj(ψ)` with
//! `ϕ = φ + φ'` fixes the symmetry of individual eigenvectors; the order
//! parameter `1 − |⟨ψ|VKψ⟩|` vanishes exactly in the PT-unbroken phase
//! (`ab > 0` effective coupling real pair) and is strictly positive in the
//! broken phase, reaching `1 − |a−b|/(a+b)` for the coalescing pair.
//!
//! At an exceptional point exactly one of `z_a`, `z_b` vanishes — the
//! one-sided degeneracy that distinguishes a true EP from a diabolic
//! crossing (`z_a = z_b = 0`).

use crate::mat::{gauge_normalize, C64, CMat2, CVec2, SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z};
use crate::spectral::{bloch_from_canonical, coin_matrix, CanonicalStep, SpectralError};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI, SQRT_2};
use thiserror::Error;

const CI: C64 = C64::new(0.0, 1.0);

/// Sign in `r S r† = SIGN · σ_z`: the rotated sublattice operator is the
/// *negative* standard chiral operator.
pub const SUBLATTICE_ROTATION_SIGN: f64 = -1.0;

/// Errors from the rotated-frame analysis.
#[derive(Debug, Error)]
pub enum PtError {
    /// The rotated operator kept a diagonal part: the input was not
    /// sublattice-symmetric.
    #[error("operator is not sublattice-symmetric (relative rotated-diagonal residual {residual:.3e})")]
    NotSublatticeSymmetric { residual: f64 },
    /// Both rotated off-diagonals vanish; no normal form exists.
    #[error("both rotated off-diagonal elements vanish; the normal form is undefined")]
    ZeroMatrix,
    /// A state vector had numerically zero norm.
    #[error("state vector has (numerically) zero norm")]
    ZeroVector,
    /// Spectral decomposition failed upstream.
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Sublattice symmetry operator `S = (σ_y − σ_z)/√2`.
pub fn sublattice_operator() -> CMat2 {
    (SIGMA_Y - SIGMA_Z) / C64::new(SQRT_2, 0.0)
}

/// Half-coin rotation `r = √W = cos(π/8)σ₀ + i sin(π/8)σₓ`.
pub fn rotation_r() -> CMat2 {
    SIGMA_0 * C64::new(FRAC_PI_8.cos(), 0.0) + SIGMA_X * C64::new(0.0, FRAC_PI_8.sin())
}

/// A sublattice-symmetric Hamiltonian in the rotated (chiral) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedForm {
    /// The rotated matrix `r H r†`.
    pub h_r: CMat2,
    /// Upper off-diagonal element.
    pub z_a: C64,
    /// Lower off-diagonal element.
    pub z_b: C64,
    /// Relative magnitude of the residual diagonal (0 for exact symmetry).
    pub diag_residual: f64,
}

/// Rotates `H` into the chiral frame and validates that its diagonal
/// vanishes there (relative residual ≤ 1e−9).
pub fn rotate_hamiltonian(h: &CMat2) -> Result<RotatedForm, PtError> {
    let r = rotation_r();
    let h_r = r * h * r.adjoint();
    let scale = crate::mat::frobenius_norm(h);
    let diag = h_r[(0, 0)].norm().max(h_r[(1, 1)].norm());
    let diag_residual = if scale <= 1e-290 { 0.0 } else { diag / scale };
    if diag_residual > 1e-9 {
        return Err(PtError::NotSublatticeSymmetric {
            residual: diag_residual,
        });
    }
    Ok(RotatedForm {
        z_a: h_r[(0, 1)],
        z_b: h_r[(1, 0)],
        h_r,
        diag_residual,
    })
}

/// Rotated off-diagonals straight from canonical coordinates,
/// `z_a = mₓ − i√2 m̄_y`, `z_b = mₓ + i√2 m̄_y` with the sublattice pair
/// symmetrized (`m̄_y = (m_y + m_z)/2`).  Regular at exceptional points and
/// satisfying `z_a z_b = m·m` exactly for a symmetric step, this is the
/// coordinate pair used by the exceptional-point locator.
pub fn canonical_offdiagonals(cs: &CanonicalStep) -> (C64, C64) {
    let my = (cs.m.y + cs.m.z) * 0.5;
    let shift = CI * SQRT_2 * my;
    (cs.m.x - shift, cs.m.x + shift)
}

/// Normal-form coordinates of a chiral-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtDecomposition {
    /// Magnitude of the upper coupling, `a = |z_a| ≥ 0`.
    pub a: f64,
    /// Magnitude of the lower coupling, `b = |z_b| ≥ 0`.
    pub b: f64,
    /// Gauge rotation angle, `φ ∈ (−π, π]`.
    pub phi: f64,
    /// Overall phase, `φ' ∈ (−π/2, π/2]`.
    pub phi_prime: f64,
    /// True when exactly one coupling vanishes (exceptional-point geometry);
    /// the vanished side's angle is inherited from the surviving one.
    pub one_sided: bool,
}

fn fold_pi(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI { y - 2.0 * PI } else { y }
}

impl PtDecomposition {
    /// Rebuilds the off-diagonal couplings
    /// `(e^{iφ'} a e^{iφ}, e^{iφ'} b e^{−iφ})`.
    pub fn reconstruct(&self) -> (C64, C64) {
        let outer = (CI * self.phi_prime).exp();
        (
            outer * self.a * (CI * self.phi).exp(),
            outer * self.b * (-CI * self.phi).exp(),
        )
    }

    /// Angle of the antiunitary symmetry check, `ϕ = φ + φ'` folded into
    /// `(−π, π]` (equals `arg z_a` whenever `a > 0`).
    pub fn vk_angle(&self) -> f64 {
        fold_pi(self.phi + self.phi_prime)
    }
}

/// Decomposes off-diagonal couplings into the PT normal form.
///
/// Fails with [`PtError::ZeroMatrix`] when both couplings vanish (a diabolic
/// degeneracy has no preferred gauge).
pub fn pt_decompose(z_a: C64, z_b: C64) -> Result<PtDecomposition, PtError> {
    let (a, b) = (z_a.norm(), z_b.norm());
    let scale = a.max(b);
    if scale <= 1e-150 {
        return Err(PtError::ZeroMatrix);
    }
    let a_dark = a <= 1e-12 * scale;
    let b_dark = b <= 1e-12 * scale;
    let theta_a = if a_dark { z_b.arg() } else { z_a.arg() };
    let theta_b = if b_dark { z_a.arg() } else { z_b.arg() };
    let mut phi_prime = 0.5 * (theta_a + theta_b);
    let mut phi = 0.5 * (theta_a - theta_b);
    // Joint move (φ' ∓ π, φ + π) keeps both couplings fixed; use it to fold
    // the overall phase into (−π/2, π/2].  Couplings with real-negative
    // product sit exactly on the ±π/2 boundary; a small guard keeps their
    // rounding jitter on the +π/2 representative.
    const GUARD: f64 = 1e-12;
    if phi_prime > FRAC_PI_2 + GUARD {
        phi_prime -= PI;
        phi += PI;
    } else if phi_prime < -FRAC_PI_2 + GUARD {
        phi_prime += PI;
        phi += PI;
    }
    Ok(PtDecomposition {
        a,
        b,
        phi: fold_pi(phi),
        phi_prime,
        one_sided: a_dark ^ b_dark,
    })
}

/// Spectral character of the eigenvalue pair `±λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralPurity {
    /// `λ` is real: PT-unbroken pair.
    RealPair,
    /// `λ` is purely imaginary: PT-broken pair.
    ImaginaryPair,
    /// `λ ≈ 0` relative to the couplings: coalescence (exceptional point).
    Coalesced,
    /// `λ` is genuinely complex (no antiunitary symmetry protects the pair).
    Mixed,
}

impl SpectralPurity {
    /// True for spectra whose eigenvectors break the antiunitary symmetry
    /// (imaginary or generic complex pairs).
    pub fn is_broken(&self) -> bool {
        matches!(self, SpectralPurity::ImaginaryPair | SpectralPurity::Mixed)
    }
}

/// Eigenvalue and spectral character of a chiral-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseClassification {
    /// Principal branch of `√(z_a z_b)` (the pair is `±λ`).
    pub lambda: C64,
    /// Real / imaginary / coalesced / mixed character of the pair.
    pub purity: SpectralPurity,
}

/// Classifies the eigenvalue pair of `[[0, z_a],[z_b, 0]]`.
///
/// Tolerances are relative: coalescence at `|λ| ≤ 1e−6·max(|z_a|,|z_b|)`,
/// real/imaginary purity at `1e−6·|λ|` with an absolute floor of `1e−12`.
/// A zero matrix classifies as a (trivially symmetric) real pair `λ = 0`.
pub fn classify_phase(z_a: C64, z_b: C64) -> PhaseClassification {
    let scale = z_a.norm().max(z_b.norm());
    if scale <= 1e-150 {
        return PhaseClassification {
            lambda: C64::new(0.0, 0.0),
            purity: SpectralPurity::RealPair,
        };
    }
    let lambda = (z_a * z_b).sqrt();
    if lambda.norm() <= 1e-6 * scale {
        return PhaseClassification {
            lambda,
            purity: SpectralPurity::Coalesced,
        };
    }
    let tol = (1e-6 * lambda.norm()).max(1e-12);
    let purity = if lambda.im.abs() <= tol {
        SpectralPurity::RealPair
    } else if lambda.re.abs() <= tol {
        SpectralPurity::ImaginaryPair
    } else {
        SpectralPurity::Mixed
    };
    PhaseClassification { lambda, purity }
}

/// Unit right eigenvector of `[[0, z_a],[z_b, 0]]` for eigenvalue `+λ`.
///
/// Both algebraic forms `(z_a, λ)` and `(λ, z_b)` span it; the larger one is
/// kept for numerical stability (at a one-sided zero only one survives).
/// Returns `None` for the zero matrix.
pub fn rotated_eigenvector(z_a: C64, z_b: C64, lambda: C64) -> Option<CVec2> {
    let cand_a = CVec2::new(z_a, lambda);
    let cand_b = CVec2::new(lambda, z_b);
    let pick = if cand_a.norm() >= cand_b.norm() {
        cand_a
    } else {
        cand_b
    };
    gauge_normalize(&pick)
}

/// Phase matrix `V(ϕ) = diag(e^{iϕ}, e^{−iϕ})` of the antiunitary check.
pub fn vk_phase_matrix(phi: f64) -> CMat2 {
    CMat2::new(
        (CI * phi).exp(),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        (-CI * phi).exp(),
    )
}

/// Applies the antiunitary symmetry `VK: ψ ↦ V(ϕ) conj(ψ)`.  An involution:
/// applying it twice returns `ψ`.
pub fn vk_apply(psi: &CVec2, phi: f64) -> CVec2 {
    vk_phase_matrix(phi) * psi.map(|c| c.conj())
}

/// Symmetry-breaking order parameter `1 − |⟨ψ|VKψ⟩| / ⟨ψ|ψ⟩`, clamped at
/// zero against rounding.  Exactly zero iff `ψ` is an eigenvector of `VK`
/// (up to phase); invariant under `ψ → c ψ` for any complex `c ≠ 0`.
pub fn order_parameter(psi: &CVec2, phi: f64) -> Result<f64, PtError> {
    let norm_sq = psi.norm_squared();
    if norm_sq <= 1e-290 {
        return Err(PtError::ZeroVector);
    }
    let check = vk_apply(psi, phi);
    Ok((1.0 - psi.dotc(&check).norm() / norm_sq).max(0.0))
}

/// The canonical PT-symmetric two-level Hamiltonian
/// `H_PT(a,b) = ½[[i(b−a), a+b],[a+b, −i(b−a)]]`.
pub fn pt_hamiltonian(a: f64, b: f64) -> CMat2 {
    let gain = C64::new(0.0, 0.5 * (b - a));
    let coupling = C64::new(0.5 * (a + b), 0.0);
    CMat2::new(gain, coupling, coupling, -gain)
}

/// Gauge rotation `R_φ = W · diag(e^{−iφ/2}, e^{iφ/2})` that carries a
/// chiral-frame Hamiltonian with couplings `(a e^{iφ}, b e^{−iφ})` onto
/// `H_PT(a, b)`.  The half angle makes the equivalence invariant under the
/// normal form's joint move `(φ' ∓ π, φ + π)`.
pub fn momentum_gauge_rotation(phi: f64) -> CMat2 {
    coin_matrix() * vk_phase_matrix(0.5 * phi).adjoint()
}

/// Explicit equivalence of a normal form with the canonical PT Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct PtEquivalence {
    /// The canonical Hamiltonian `H_PT(a, b)`.
    pub h_pt: CMat2,
    /// The unitary `R_φ` realizing the equivalence.
    pub rotation: CMat2,
    /// Overall complex scale `e^{iφ'}`.
    pub scale: C64,
    /// `‖R_φ H_r R_φ† − e^{iφ'} H_PT‖_F` (zero up to rounding).
    pub residual: f64,
}

/// Verifies `R_φ H_r R_φ† = e^{iφ'} H_PT(a, b)` for a decomposition and
/// returns the witnesses.
pub fn pt_equivalent(d: &PtDecomposition) -> PtEquivalence {
    let (z_a, z_b) = d.reconstruct();
    let h_r = CMat2::new(C64::new(0.0, 0.0), z_a, z_b, C64::new(0.0, 0.0));
    let rotation = momentum_gauge_rotation(d.phi);
    let h_pt = pt_hamiltonian(d.a, d.b);
    let scale = (CI * d.phi_prime).exp();
    let residual =
        crate::mat::frobenius_dist(&(rotation * h_r * rotation.adjoint()), &(h_pt * scale));
    PtEquivalence {
        h_pt,
        rotation,
        scale,
        residual,
    }
}

/// Full rotated-frame analysis of one canonical step.
#[derive(Debug, Clone, PartialEq)]
pub struct PtPointReport {
    /// Upper rotated coupling of the effective Hamiltonian.
    pub z_a: C64,
    /// Lower rotated coupling.
    pub z_b: C64,
    /// Relative diagonal residual after rotation (sublattice-symmetry
    /// violation of the input; 0 for theory operators).
    pub sublattice_residual: f64,
    /// Normal-form coordinates.
    pub decomposition: PtDecomposition,
    /// Eigenvalue pair character.
    pub classification: PhaseClassification,
    /// Symmetry-breaking order parameter of the `+λ` eigenvector.
    pub order_parameter: f64,
}

/// Rotated-frame analysis of a canonical step: quasi-energy decomposition,
/// chiral-frame couplings, normal form, purity and order parameter.
///
/// The couplings are taken from the effective Hamiltonian `E n·σ`, which is
/// invariant under the `(E, n) → (−E + 2πj, −n)` branch ambiguity; the
/// overall sign of the step itself must already be fixed (sign-aligned)
/// because `±U` carry different Hamiltonians.
pub fn pt_point(cs: &CanonicalStep) -> Result<PtPointReport, PtError> {
    let bloch = bloch_from_canonical(cs)?;
    let h = bloch.effective_hamiltonian();
    let r = rotation_r();
    let h_r = r * h * r.adjoint();
    let scale = crate::mat::frobenius_norm(&h);
    let sublattice_residual = if scale <= 1e-290 {
        0.0
    } else {
        h_r[(0, 0)].norm().max(h_r[(1, 1)].norm()) / scale
    };
    let (z_a, z_b) = (h_r[(0, 1)], h_r[(1, 0)]);
    let decomposition = pt_decompose(z_a, z_b)?;
    let classification = classify_phase(z_a, z_b);
    let psi =
        rotated_eigenvector(z_a, z_b, classification.lambda).ok_or(PtError::ZeroMatrix)?;
    let order = order_parameter(&psi, decomposition.vk_angle())?;
    Ok(PtPointReport {
        z_a,
        z_b,
        sublattice_residual,
        decomposition,
        classification,
        order_parameter: order,
    })
}
