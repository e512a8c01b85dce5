//! Forward model and spectral decompositions of the one-step walk operator.
//!
//! A single time step of the walk at quasimomentum `q` is
//!
//! ```text
//! U(q) = T(q) · W ,
//! W    = (σ₀ + i σₓ)/√2 ,
//! T(q) = [[α, i β e^{iq}], [i β e^{−iq}, α]] ,
//! α    = cos((δ + iη)/2) ,   β = sin((δ + iη)/2) ,
//! ```
//!
//! where `δ` is the coin splitting angle and `η ≥ 0` the gain/loss strength.
//! The complex half-angle keeps the bilinear identity `α² + β² = 1`, so
//! `det T = det W = det U = 1` even though `U` is not unitary for `η ≠ 0`.
//!
//! Any unit-determinant operator decomposes over the Pauli basis as
//! `U = m₀σ₀ + m·σ` with the determinant gauge `m₀² − m·m = 1`, and away from
//! spectral degeneracies also as
//!
//! ```text
//! U = cos E · σ₀ − i sin E · (n · σ) ,   E = arccos m₀ ,   n = i m / sin E ,
//! ```
//!
//! with complex quasi-energy `E(q)` and complex Bloch vector `n(q)` obeying
//! the bilinear normalization `n·n = 1`.  For the walk above the closed form
//! is
//!
//! ```text
//! E(q)   = arccos[(α − β cos q)/√2] ,
//! nₓ(q)  = −(α + β cos q)/D ,   n_y(q) = n_z(q) = β sin q / D ,
//! D(q)   = √(2 − (α − β cos q)²) ,
//! ```
//!
//! which makes the sublattice constraint `n_y = n_z` manifest.  At an
//! exceptional point `m·m → 0` while `m ≠ 0`: `E` coalesces, `n` diverges,
//! and only the `(m₀, m)` chart stays regular — which is why the canonical
//! form is the primary representation throughout this crate.

use crate::mat::{
    from_pauli, frobenius_norm, kernel_unit_vector, pauli_decompose, trace_inner, C64, CMat2,
    CVec2, CVec3, RVec3, SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z,
};
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

const CI: C64 = C64::new(0.0, 1.0);
const TAU: f64 = 2.0 * PI;

/// Default number of Brillouin-zone samples (camera columns per zone).
pub const DEFAULT_BZ_SAMPLES: usize = 90;

/// Errors from constructing or decomposing walk operators.
#[derive(Debug, Error)]
pub enum SpectralError {
    /// Model parameters contained NaN or infinity.
    #[error("model parameters must be finite, got delta={delta}, eta={eta}")]
    NonFinite { delta: f64, eta: f64 },
    /// An operator's determinant is too small for unit-determinant rescaling.
    #[error("operator determinant has modulus {modulus:.3e}; cannot rescale to unit determinant")]
    DegenerateOperator { modulus: f64 },
    /// A one-step operator failed the unit-determinant invariant.
    #[error("one-step operator determinant deviates from one by {residual:.3e}")]
    DeterminantDrift { residual: f64 },
    /// `sin E ≈ 0` with `m ≠ 0`: the Bloch vector diverges at an exceptional point.
    #[error("Bloch vector is undefined at an exceptional point (sin E ≈ 0 with m ≠ 0)")]
    EPSingular,
    /// The band lift hit an exceptional point at a specific sample.
    #[error("band lift is singular at sample {index} (sin E ≈ 0 with m ≠ 0)")]
    EPSingularAt { index: usize },
    /// The operator is a multiple of the identity; its Bloch direction is undefined.
    #[error("operator is proportional to the identity; its Bloch direction is undefined")]
    ScalarOperator,
    /// A state vector had numerically zero norm.
    #[error("state vector has (numerically) zero norm")]
    ZeroVector,
    /// An operator had numerically zero Frobenius norm.
    #[error("operator has (numerically) zero Frobenius norm")]
    ZeroOperator,
    /// A momentum sweep was requested with too few samples.
    #[error("momentum sweep needs at least 3 samples, got {got}")]
    TooFewSamples { got: usize },
}

/// Walk parameters: coin splitting angle `δ` (reduced mod 2π) and gain/loss
/// strength `η`, both in radians / dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    delta: f64,
    eta: f64,
}

impl ModelParams {
    /// Validates and reduces parameters; `delta` is folded into `[0, 2π)`.
    pub fn new(delta: f64, eta: f64) -> Result<Self, SpectralError> {
        if !delta.is_finite() || !eta.is_finite() {
            return Err(SpectralError::NonFinite { delta, eta });
        }
        Ok(Self {
            delta: delta.rem_euclid(TAU),
            eta,
        })
    }

    /// Two cascaded coins acting within one step compose by adding both the
    /// splitting angles and the gain/loss exponents: `δ = δ₁ + δ₂`,
    /// `η = η₁ + η₂`.
    pub fn cascade(delta1: f64, eta1: f64, delta2: f64, eta2: f64) -> Result<Self, SpectralError> {
        Self::new(delta1 + delta2, eta1 + eta2)
    }

    /// Coin splitting angle in `[0, 2π)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Gain/loss strength.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Complex hopping amplitudes `α = cos((δ+iη)/2)`, `β = sin((δ+iη)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoppingCoeffs {
    /// Diagonal (staying) amplitude.
    pub alpha: C64,
    /// Off-diagonal (hopping) amplitude.
    pub beta: C64,
}

impl HoppingCoeffs {
    /// Residual of the bilinear identity `α² + β² − 1` (zero analytically).
    pub fn bilinear_residual(&self) -> C64 {
        self.alpha * self.alpha + self.beta * self.beta - C64::new(1.0, 0.0)
    }
}

/// Hopping amplitudes for the given walk parameters.
pub fn hopping_from_params(params: &ModelParams) -> HoppingCoeffs {
    let half = C64::new(params.delta * 0.5, params.eta * 0.5);
    HoppingCoeffs {
        alpha: half.cos(),
        beta: half.sin(),
    }
}

/// Quasimomentum in the Brillouin zone, stored reduced into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quasimomentum(f64);

impl Quasimomentum {
    /// Wraps any finite momentum into `[0, 2π)`.
    pub fn new(q: f64) -> Self {
        Self(q.rem_euclid(TAU))
    }

    /// The reduced momentum value.
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Uniform momentum grid `q_k = 2πk/n`, `k = 0..n` (endpoint excluded).
pub fn momentum_grid(n: usize) -> Vec<Quasimomentum> {
    (0..n).map(|k| Quasimomentum::new(TAU * k as f64 / n as f64)).collect()
}

/// The balanced coin `W = (σ₀ + iσₓ)/√2`.
pub fn coin_matrix() -> CMat2 {
    (SIGMA_0 + SIGMA_X * CI) / C64::new(SQRT_2, 0.0)
}

/// The momentum-space translation symbol
/// `T(q) = [[α, iβe^{iq}], [iβe^{−iq}, α]]`.
pub fn translation_symbol(coeffs: &HoppingCoeffs, q: Quasimomentum) -> CMat2 {
    let phase = (CI * q.value()).exp();
    CMat2::new(
        coeffs.alpha,
        CI * coeffs.beta * phase,
        CI * coeffs.beta / phase,
        coeffs.alpha,
    )
}

/// A one-step walk operator, guaranteed to have unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOperator(CMat2);

impl StepOperator {
    /// Wraps a matrix after checking `|det − 1| ≤ 1e−8`.
    pub fn new(m: CMat2) -> Result<Self, SpectralError> {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let residual = (det - C64::new(1.0, 0.0)).norm();
        if residual > 1e-8 {
            return Err(SpectralError::DeterminantDrift { residual });
        }
        Ok(Self(m))
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &CMat2 {
        &self.0
    }

    /// Determinant of the wrapped matrix (unity up to rounding).
    pub fn det(&self) -> C64 {
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]
    }
}

/// One-step operator `U(q) = T(q) · W`.  Unit determinant holds by
/// construction because `det T = det W = 1`.
pub fn step_operator(params: &ModelParams, q: Quasimomentum) -> StepOperator {
    let coeffs = hopping_from_params(params);
    let u = translation_symbol(&coeffs, q) * coin_matrix();
    debug_assert!(
        (u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-10
    );
    StepOperator(u)
}

/// Determinant-gauge Pauli coordinates `(m₀, m)` of a unit-determinant
/// operator: `U = m₀σ₀ + m·σ` with `m₀² − m·m = 1`.
///
/// This chart stays regular at exceptional points (`m·m → 0`), unlike the
/// `(E, n)` chart, and is the working representation of the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalStep {
    /// Coefficient of `σ₀` (equals `cos E`).
    pub m0: C64,
    /// Pauli 3-vector (equals `−i sin E · n`).
    pub m: CVec3,
}

impl CanonicalStep {
    /// Closed-form coordinates for the walk:
    /// `m₀ = (α − β cos q)/√2`, `m = (i(α + β cos q), −iβ sin q, −iβ sin q)/√2`.
    /// Total (no exceptional-point singularity in this chart).
    pub fn closed_form(params: &ModelParams, q: Quasimomentum) -> Self {
        let HoppingCoeffs { alpha, beta } = hopping_from_params(params);
        let (cq, sq) = (q.value().cos(), q.value().sin());
        let inv_sqrt2 = C64::new(1.0 / SQRT_2, 0.0);
        Self {
            m0: (alpha - beta * cq) * inv_sqrt2,
            m: CVec3::new(
                CI * (alpha + beta * cq) * inv_sqrt2,
                -CI * beta * sq * inv_sqrt2,
                -CI * beta * sq * inv_sqrt2,
            ),
        }
    }

    /// The matrix `m₀σ₀ + m·σ`.
    pub fn matrix(&self) -> CMat2 {
        from_pauli(self.m0, &self.m)
    }

    /// Residual of the determinant gauge, `m₀² − m·m − 1`.
    pub fn det_residual(&self) -> C64 {
        self.m0 * self.m0 - self.m.dot(&self.m) - C64::new(1.0, 0.0)
    }

    /// The other determinant-gauge representative `(−m₀, −m)` of the same ray.
    pub fn flipped(&self) -> Self {
        Self {
            m0: -self.m0,
            m: -self.m,
        }
    }

    /// Rescales onto the gauge surface by dividing by the principal square
    /// root of `m₀² − m·m`.  Fails when that determinant is numerically zero.
    pub fn renormalized(&self) -> Result<Self, SpectralError> {
        let det = self.m0 * self.m0 - self.m.dot(&self.m);
        if det.norm() <= 1e-14 {
            return Err(SpectralError::DegenerateOperator {
                modulus: det.norm(),
            });
        }
        let scale = det.sqrt();
        Ok(Self {
            m0: self.m0 / scale,
            m: self.m / scale,
        })
    }
}

/// Splits an arbitrary nonzero-determinant matrix into a unit-determinant
/// canonical step and a complex scale: `M = scale · (m₀σ₀ + m·σ)`.
///
/// The scale is the principal square root of `det M`, so the returned
/// representative carries the inherent overall-sign ambiguity of the ray.
pub fn canonical_from_operator(m: &CMat2) -> Result<(CanonicalStep, C64), SpectralError> {
    let (m0, mv) = pauli_decompose(m);
    let det = m0 * m0 - mv.dot(&mv);
    if det.norm() <= 1e-14 {
        return Err(SpectralError::DegenerateOperator {
            modulus: det.norm(),
        });
    }
    let scale = det.sqrt();
    Ok((
        CanonicalStep {
            m0: m0 / scale,
            m: mv / scale,
        },
        scale,
    ))
}

/// Quasi-energy and Bloch vector of a one-step operator:
/// `U = cos E · σ₀ − i sin E · (n·σ)` with bilinear `n·n = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDecomposition {
    /// Complex quasi-energy `E`.
    pub energy: C64,
    /// Complex Bloch vector `n` (diverges at exceptional points).
    pub n: CVec3,
}

impl BlochDecomposition {
    /// Rebuilds the operator `cos E · σ₀ − i sin E · (n·σ)`.
    pub fn rebuild(&self) -> CMat2 {
        let (ce, se) = (self.energy.cos(), self.energy.sin());
        from_pauli(ce, &(self.n * (-CI * se)))
    }

    /// The traceless effective Hamiltonian `H = E · (n·σ)` generating the
    /// step, `U = exp(−iH)`.
    pub fn effective_hamiltonian(&self) -> CMat2 {
        from_pauli(C64::new(0.0, 0.0), &(self.n * self.energy))
    }
}

/// Closed-form Bloch decomposition of the walk at one momentum.
///
/// Fails with [`SpectralError::EPSingular`] when `|2 − (α − β cos q)²| ≤ 1e−10`
/// (the Bloch vector diverges there).
pub fn bloch_closed_form(
    params: &ModelParams,
    q: Quasimomentum,
) -> Result<BlochDecomposition, SpectralError> {
    let HoppingCoeffs { alpha, beta } = hopping_from_params(params);
    let (cq, sq) = (q.value().cos(), q.value().sin());
    let x = alpha - beta * cq;
    let d_sq = C64::new(2.0, 0.0) - x * x;
    if d_sq.norm() <= 1e-10 {
        return Err(SpectralError::EPSingular);
    }
    let d = d_sq.sqrt();
    let energy = (x / SQRT_2).acos();
    let ny = beta * sq / d;
    Ok(BlochDecomposition {
        energy,
        n: CVec3::new(-(alpha + beta * cq) / d, ny, ny),
    })
}

/// Bloch decomposition from canonical coordinates: `E = arccos m₀`,
/// `n = i m / sin E` with `sin E` taken as the principal `√(1 − m₀²)`.
///
/// Fails with [`SpectralError::ScalarOperator`] when `m ≈ 0` and with
/// [`SpectralError::EPSingular`] when `sin E ≈ 0` but `m ≠ 0`.
pub fn bloch_from_canonical(cs: &CanonicalStep) -> Result<BlochDecomposition, SpectralError> {
    let sin_e = (C64::new(1.0, 0.0) - cs.m0 * cs.m0).sqrt();
    if sin_e.norm() <= 1e-10 {
        let m_mag = cs.m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        return Err(if m_mag <= 1e-10 {
            SpectralError::ScalarOperator
        } else {
            SpectralError::EPSingular
        });
    }
    Ok(BlochDecomposition {
        energy: cs.m0.acos(),
        n: cs.m * (CI / sin_e),
    })
}

/// Eigenvalues (of the effective Hamiltonian) and right eigenvectors of a
/// canonical step.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// Quasi-energy of band 1 (`+arccos m₀` on the principal branch).
    pub lambda1: C64,
    /// Quasi-energy of band 2 (`−λ₁` up to rounding: `λ₁ + λ₂ = 0`).
    pub lambda2: C64,
    /// Right eigenvector for band 1 (unit norm, phase-gauged).
    pub psi1: CVec2,
    /// Right eigenvector for band 2 (unit norm, phase-gauged).
    pub psi2: CVec2,
    /// Modulus of the eigenvector overlap `|⟨ψ₁|ψ₂⟩|` (0 when orthogonal,
    /// → 1 at coalescence).
    pub overlap: f64,
    /// True when the eigenvectors have coalesced (`overlap > 1 − 1e−8`).
    pub coalesced: bool,
}

impl Eigensystem {
    /// Eigenvector infidelity `1 − |⟨ψ₁|ψ₂⟩|²`; 1 for orthogonal bands,
    /// → 0 at an exceptional point.
    pub fn infidelity(&self) -> f64 {
        1.0 - self.overlap * self.overlap
    }
}

/// Eigen-decomposition of a canonical step.
///
/// The input is defensively renormalized onto the determinant gauge.  With
/// `w = −i sin E` (principal branch) the matrix eigenvalues are `m₀ ± w`,
/// so band 1 carries `λ₁ = i ln(m₀ + w) = arccos m₀` and its eigenvector
/// spans the kernel of `m·σ − wσ₀`.  At an exceptional point both kernels
/// collapse onto the same direction and `coalesced` is set; for a scalar
/// operator (`m ≈ 0`) the basis vectors are returned.
pub fn eigensystem(cs: &CanonicalStep) -> Result<Eigensystem, SpectralError> {
    let cs = cs.renormalized()?;
    let sin_e = (C64::new(1.0, 0.0) - cs.m0 * cs.m0).sqrt();
    let w = -CI * sin_e;
    let mu1 = cs.m0 + w;
    let mu2 = cs.m0 - w;
    let lambda1 = CI * mu1.ln();
    let lambda2 = CI * mu2.ln();
    let e1 = CVec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let e2 = CVec2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let psi1 = kernel_unit_vector(&from_pauli(-w, &cs.m)).unwrap_or(e1);
    let psi2 = kernel_unit_vector(&from_pauli(w, &cs.m)).unwrap_or(e2);
    let overlap = psi1.dotc(&psi2).norm();
    Ok(Eigensystem {
        lambda1,
        lambda2,
        psi1,
        psi2,
        overlap,
        coalesced: overlap > 1.0 - 1e-8,
    })
}

/// Hermitian/anti-Hermitian split of an operator, `H = H_h + H_a` with
/// `H_h = (H + H†)/2` and `H_a = (H − H†)/2`, plus the norm of their
/// commutator — the obstruction to simultaneous diagonalization of the
/// coherent and gain/loss parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSplit {
    /// Hermitian part `(H + H†)/2`.
    pub hermitian: CMat2,
    /// Anti-Hermitian (gain/loss) part `(H − H†)/2`.
    pub gain_loss: CMat2,
    /// `‖[H_h, H_a]‖_F`.
    pub commutator_norm: f64,
}

/// Splits `H` into Hermitian and anti-Hermitian parts.
pub fn hermitian_split(h: &CMat2) -> HermitianSplit {
    let dag = h.adjoint();
    let hermitian = (h + dag) * C64::new(0.5, 0.0);
    let gain_loss = (h - dag) * C64::new(0.5, 0.0);
    let comm = hermitian * gain_loss - gain_loss * hermitian;
    HermitianSplit {
        hermitian,
        gain_loss,
        commutator_norm: frobenius_norm(&comm),
    }
}

/// Quantum state fidelity `|⟨a|b⟩|² / (‖a‖²‖b‖²)` of two spinors.
pub fn state_fidelity(a: &CVec2, b: &CVec2) -> Result<f64, SpectralError> {
    let (na, nb) = (a.norm_squared(), b.norm_squared());
    if na <= 1e-290 || nb <= 1e-290 {
        return Err(SpectralError::ZeroVector);
    }
    Ok(a.dotc(b).norm_sqr() / (na * nb))
}

/// Scale-invariant operator fidelity `|tr(A†B)|² / (‖A‖²_F ‖B‖²_F)`.
/// Equals 1 exactly when `B = cA` for some complex `c ≠ 0`.
pub fn operator_fidelity(a: &CMat2, b: &CMat2) -> Result<f64, SpectralError> {
    let (na, nb) = (frobenius_norm(a), frobenius_norm(b));
    if na <= 1e-290 || nb <= 1e-290 {
        return Err(SpectralError::ZeroOperator);
    }
    Ok(trace_inner(a, b).norm_sqr() / (na * na * nb * nb))
}

/// Stokes vector `S_k = ⟨ψ|σ_k|ψ⟩ / ⟨ψ|ψ⟩` of a spinor (real by
/// Hermiticity; generally `|S| < 1` only for mixed states, so here `|S| = 1`
/// up to rounding).
pub fn stokes(psi: &CVec2) -> Result<RVec3, SpectralError> {
    let norm = psi.norm_squared();
    if norm <= 1e-290 {
        return Err(SpectralError::ZeroVector);
    }
    let expect = |s: &CMat2| psi.dotc(&(s * psi)).re / norm;
    Ok(RVec3::new(expect(&SIGMA_X), expect(&SIGMA_Y), expect(&SIGMA_Z)))
}

/// Continuity-lifted Bloch decompositions along a momentum path.
///
/// The first sample uses the principal branch (`Re E ∈ [0, π]`); every later
/// sample picks, among `±E_principal + 2πj` (`j ∈ {−1,0,1}`), the branch
/// nearest its predecessor, and the Bloch vector follows the same sign so
/// that `n(q)` stays continuous across arccos branch cuts.  Fails at
/// samples where all branches are singular (`sin E ≈ 0` with `m ≠ 0`).
pub fn lift_bands(steps: &[CanonicalStep]) -> Result<Vec<BlochDecomposition>, SpectralError> {
    let mut out = Vec::with_capacity(steps.len());
    let mut prev: Option<C64> = None;
    for (index, cs) in steps.iter().enumerate() {
        let principal = cs.m0.acos();
        let energy = match prev {
            None => principal,
            Some(p) => {
                let mut best = principal;
                let mut best_dist = f64::INFINITY;
                for sign in [1.0, -1.0] {
                    for j in -1i32..=1 {
                        let cand = principal * sign + C64::new(TAU * j as f64, 0.0);
                        let dist = (cand - p).norm();
                        if dist < best_dist {
                            best_dist = dist;
                            best = cand;
                        }
                    }
                }
                best
            }
        };
        let sin_e = energy.sin();
        if sin_e.norm() <= 1e-10 {
            let m_mag = cs.m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
            if m_mag <= 1e-10 {
                return Err(SpectralError::ScalarOperator);
            }
            return Err(SpectralError::EPSingularAt { index });
        }
        out.push(BlochDecomposition {
            energy,
            n: cs.m * (CI / sin_e),
        });
        prev = Some(energy);
    }
    Ok(out)
}

/// Closed-form band structure on a uniform momentum grid with the
/// continuity-lifted branch.
#[derive(Debug, Clone)]
pub struct BandSweep {
    /// Grid momenta `q_k = 2πk/n`.
    pub q: Vec<f64>,
    /// Canonical coordinates at each momentum.
    pub steps: Vec<CanonicalStep>,
    /// Lifted quasi-energy and Bloch vector at each momentum.
    pub bands: Vec<BlochDecomposition>,
}

/// Sweeps the closed-form bands over `n_samples` momenta.
pub fn band_sweep(params: &ModelParams, n_samples: usize) -> Result<BandSweep, SpectralError> {
    if n_samples < 3 {
        return Err(SpectralError::TooFewSamples { got: n_samples });
    }
    let grid = momentum_grid(n_samples);
    let steps: Vec<CanonicalStep> = grid
        .iter()
        .map(|&q| CanonicalStep::closed_form(params, q))
        .collect();
    let bands = lift_bands(&steps)?;
    Ok(BandSweep {
        q: grid.iter().map(|q| q.value()).collect(),
        steps,
        bands,
    })
}
