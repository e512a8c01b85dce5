//! Topological invariants of the walk: winding number, phase diagram,
//! critical momenta and exceptional points.
//!
//! With the sublattice constraint `n_y = n_z`, the complex Bloch vector is
//! confined to a plane and winds about the axis `s = (0, 1, −1)/√2`:
//!
//! ```text
//! ν = (1/2π) ∮ dq  (n × ∂_q n) · s ,
//! ```
//!
//! evaluated with bilinear (unconjugated) products.  `ν` is complex for a
//! non-Hermitian walk; its real part converges to an integer on refinement
//! and its imaginary part to zero.  The integral uses the continuity-lifted
//! branch of `n(q)`: per-pixel principal values flip sign across arccos cuts
//! at strong gain/loss and would destroy the quantization.
//!
//! Exceptional points are located as one-sided zeros of the rotated-frame
//! couplings
//!
//! ```text
//! z_∓(q, η) = i(α + β cos q)/√2 ∓ β sin q ,
//! ```
//!
//! (`−` for the upper coupling, `+` for the lower), by a two-dimensional
//! Newton iteration in `(q, η)` with analytic Jacobian, bootstrapped from a
//! coarse scan.  A genuine exceptional point keeps the partner coupling
//! finite; if both couplings vanish the degeneracy is diabolic — the walk's
//! `m` vector itself vanishes — and the locator reports it as such rather
//! than returning a spurious record.
//!
//! Candidate critical momenta on a measured grid are the minima of the
//! eigenvector infidelity `1 − |⟨ψ₁|ψ₂⟩|²`, which dips toward zero only
//! near coalescence; a zone whose minimum stays above `1/2` has no
//! exceptional-point candidates and is flagged shallow.

use crate::mat::{C64, CVec3};
use crate::spectral::{band_sweep, eigensystem, CanonicalStep, ModelParams, SpectralError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

const CI: C64 = C64::new(0.0, 1.0);
const TAU: f64 = 2.0 * PI;

/// Errors from topology computations.
#[derive(Debug, Error)]
pub enum TopologyError {
    /// Periodic zone quadratures need a minimally resolved grid.
    #[error("zone quadrature needs at least 8 samples, got {got}")]
    TooFewSamples { got: usize },
    /// Spectral decomposition failed upstream.
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    /// The located degeneracy is diabolic (`m ≈ 0`), not an exceptional point.
    #[error("degeneracy at q={q:.6}, eta={eta:.6} is diabolic (m ≈ 0), not an exceptional point")]
    NotAnEP { q: f64, eta: f64 },
    /// Newton iteration failed to converge onto a coupling zero.
    #[error("exceptional-point search did not converge within {iterations} iterations (|z| = {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    /// A phase-diagram grid specification was invalid.
    #[error("invalid phase-diagram grid: {reason}")]
    InvalidGrid { reason: String },
}

/// Winding-plane normal `s = (0, 1, −1)/√2`.
pub fn winding_plane_normal() -> CVec3 {
    CVec3::new(
        C64::new(0.0, 0.0),
        C64::new(1.0 / SQRT_2, 0.0),
        C64::new(-1.0 / SQRT_2, 0.0),
    )
}

/// Complex winding number of a Bloch-vector loop sampled uniformly over the
/// zone (period excluded endpoint), via central differences and the
/// trapezoid rule:
/// `ν ≈ (1/N) Σ_k (n_k × (n_{k+1} − n_{k−1})·N/(4π)) · s · (2π/N)`.
pub fn winding_number(n: &[CVec3]) -> Result<C64, TopologyError> {
    let len = n.len();
    if len < 8 {
        return Err(TopologyError::TooFewSamples { got: len });
    }
    let s = winding_plane_normal();
    let dq = TAU / len as f64;
    let mut total = C64::new(0.0, 0.0);
    for k in 0..len {
        let prev = &n[(k + len - 1) % len];
        let next = &n[(k + 1) % len];
        let deriv = (next - prev) / C64::new(2.0 * dq, 0.0);
        total += crate::mat::cross3(&n[k], &deriv).dot(&s);
    }
    Ok(total * C64::new(dq / TAU, 0.0))
}

/// Winding number of the closed-form (continuity-lifted) bands.
pub fn winding_closed_form(params: &ModelParams, n_samples: usize) -> Result<C64, TopologyError> {
    let sweep = band_sweep(params, n_samples)?;
    let n: Vec<CVec3> = sweep.bands.iter().map(|b| b.n).collect();
    winding_number(&n)
}

/// Deviation of a Bloch-vector sweep from sublattice symmetry,
/// `max_q |n_y − n_z|` (exactly zero for the closed-form bands).
pub fn sublattice_residual(bands: &[crate::spectral::BlochDecomposition]) -> f64 {
    bands
        .iter()
        .map(|b| (b.n.y - b.n.z).norm())
        .fold(0.0, f64::max)
}

/// Deviation of a canonical step from sublattice symmetry,
/// `‖S U S − U⁻¹‖_F` with `S = (σ_y − σ_z)/√2` and `U⁻¹ = m₀σ₀ − m·σ`
/// (exactly `2|m_y − m_z|` in Pauli coordinates).
pub fn step_sublattice_residual(cs: &CanonicalStep) -> f64 {
    let s = crate::ptsym::sublattice_operator();
    let inv = crate::mat::from_pauli(cs.m0, &(-cs.m));
    crate::mat::frobenius_dist(&(s * cs.matrix() * s), &inv)
}

/// Eigenvector infidelity `1 − |⟨ψ₁|ψ₂⟩|²` at each step of a zone sweep.
pub fn infidelity_profile(steps: &[CanonicalStep]) -> Result<Vec<f64>, TopologyError> {
    steps
        .iter()
        .map(|cs| Ok(eigensystem(cs)?.infidelity()))
        .collect()
}

/// Cyclic local minima of an infidelity profile that dip below `1/2` —
/// the pixels where the two reconstructed eigenvectors are closer to
/// coalescence than to orthogonality.
pub fn ep_suspect_pixels(profile: &[f64]) -> Vec<usize> {
    let len = profile.len();
    if len < 3 {
        return Vec::new();
    }
    (0..len)
        .filter(|&k| {
            let v = profile[k];
            v < 0.5 && v <= profile[(k + len - 1) % len] && v <= profile[(k + 1) % len]
        })
        .collect()
}

/// The infidelity-minimizing momentum pair of a zone sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalMomentum {
    /// Pixel index of the global infidelity minimum.
    pub k: usize,
    /// Momentum of the minimum, `2πk/N`.
    pub q: f64,
    /// Mirror pixel `(N − k) mod N` (the zone is symmetric under `q → 2π−q`).
    pub mirror_k: usize,
    /// Mirror momentum `2π − q` (mod 2π).
    pub mirror_q: f64,
    /// Infidelity value at the minimum.
    pub infidelity: f64,
    /// True when even the minimum stays above `1/2`: no coalescence
    /// candidates anywhere in the zone.
    pub shallow: bool,
}

/// Locates the candidate critical momentum (and its mirror) of a sweep as
/// the global minimum of the eigenvector infidelity.
pub fn critical_momentum(steps: &[CanonicalStep]) -> Result<CriticalMomentum, TopologyError> {
    let profile = infidelity_profile(steps)?;
    if profile.len() < 8 {
        return Err(TopologyError::TooFewSamples { got: profile.len() });
    }
    let n = profile.len();
    let (k, &infidelity) = profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("profile non-empty");
    let mirror_k = (n - k) % n;
    Ok(CriticalMomentum {
        k,
        q: TAU * k as f64 / n as f64,
        mirror_k,
        mirror_q: TAU * mirror_k as f64 / n as f64,
        infidelity,
        shallow: infidelity > 0.5,
    })
}

/// Which rotated-frame coupling vanishes at an exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSide {
    /// Upper coupling `z_a = mₓ − i√2 m_y` vanishes.
    Upper,
    /// Lower coupling `z_b = mₓ + i√2 m_y` vanishes.
    Lower,
}

/// A located exceptional point with its dual characterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EPRecord {
    /// Momentum of the coalescence.
    pub q: f64,
    /// Gain/loss strength of the coalescence.
    pub eta: f64,
    /// Which coupling vanishes.
    pub side: CouplingSide,
    /// First characterization: modulus of the vanishing coupling.
    pub coupling_residual: f64,
    /// Modulus of the surviving partner coupling (order unity at a genuine
    /// exceptional point).
    pub partner_magnitude: f64,
    /// Second, independent characterization: eigenvector infidelity
    /// `1 − |⟨ψ₁|ψ₂⟩|²` at the located point.
    pub coalescence_infidelity: f64,
    /// Newton iterations used.
    pub iterations: usize,
}

/// Search controls for the exceptional-point locator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpSearchOptions {
    /// Upper end of the gain/loss scan range.
    pub eta_max: f64,
    /// Momentum samples of the bootstrap scan.
    pub scan_q: usize,
    /// Gain/loss samples of the bootstrap scan.
    pub scan_eta: usize,
    /// Newton iteration cap.
    pub max_iterations: usize,
    /// Convergence threshold on the coupling modulus.
    pub tolerance: f64,
}

impl Default for EpSearchOptions {
    fn default() -> Self {
        Self {
            eta_max: 3.0,
            scan_q: 360,
            scan_eta: 61,
            max_iterations: 50,
            tolerance: 1e-12,
        }
    }
}

/// Coupling `z_∓` and its partial derivatives at `(q, η)` for a fixed `δ`.
/// `side_sign` is `−1` for the upper coupling, `+1` for the lower.
fn coupling_and_derivs(delta: f64, eta: f64, q: f64, side_sign: f64) -> (C64, C64, C64) {
    let half = C64::new(delta * 0.5, eta * 0.5);
    let alpha = half.cos();
    let beta = half.sin();
    // d/dη of the half-angle argument is i/2.
    let dalpha = -beta * C64::new(0.0, 0.5);
    let dbeta = alpha * C64::new(0.0, 0.5);
    let (c, s) = (q.cos(), q.sin());
    let inv_sqrt2 = 1.0 / SQRT_2;
    let z = CI * (alpha + beta * c) * inv_sqrt2 + beta * (side_sign * s);
    let dz_dq = CI * (-beta * s) * inv_sqrt2 + beta * (side_sign * c);
    let dz_deta = CI * (dalpha + dbeta * c) * inv_sqrt2 + dbeta * (side_sign * s);
    (z, dz_dq, dz_deta)
}

struct CouplingZero {
    q: f64,
    eta: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Drives one coupling to zero by a damped Gauss–Newton (Levenberg)
/// iteration on `|z|²`.  Unlike a plain Newton step this survives the
/// degenerate zeros at diabolic crossings, where both couplings vanish and
/// the 2×2 Jacobian becomes singular.
fn coupling_zero_search(
    delta: f64,
    side_sign: f64,
    start: (f64, f64),
    opts: &EpSearchOptions,
) -> CouplingZero {
    let (mut q, mut eta) = start;
    let (mut z, mut dz_dq, mut dz_deta) = coupling_and_derivs(delta, eta, q, side_sign);
    let mut mu = 1e-8;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if z.norm() <= opts.tolerance {
            break;
        }
        iterations += 1;
        // Normal equations of the real 2×2 least-squares system.
        let (a00, a01) = (
            dz_dq.norm_sqr(),
            dz_dq.re * dz_deta.re + dz_dq.im * dz_deta.im,
        );
        let a11 = dz_deta.norm_sqr();
        let g0 = dz_dq.re * z.re + dz_dq.im * z.im;
        let g1 = dz_deta.re * z.re + dz_deta.im * z.im;
        let mut stepped = false;
        for _ in 0..24 {
            let (m00, m11) = (a00 * (1.0 + mu), a11 * (1.0 + mu));
            let det = m00 * m11 - a01 * a01;
            if det.abs() < 1e-300 {
                mu = (mu * 10.0).max(1e-6);
                continue;
            }
            let dq = (m11 * g0 - a01 * g1) / det;
            let de = (m00 * g1 - a01 * g0) / det;
            let (q_new, eta_new) = (q - dq, eta - de);
            let trial = coupling_and_derivs(delta, eta_new, q_new, side_sign);
            if trial.0.norm() < z.norm() {
                q = q_new;
                eta = eta_new;
                (z, dz_dq, dz_deta) = trial;
                mu = (mu * 0.25).max(1e-14);
                stepped = true;
                break;
            }
            mu *= 10.0;
            if mu > 1e14 {
                break;
            }
        }
        if !stepped {
            break;
        }
    }
    CouplingZero {
        q: q.rem_euclid(TAU),
        eta,
        residual: z.norm(),
        iterations,
        converged: z.norm() <= opts.tolerance,
    }
}

fn bootstrap_scan(delta: f64, side_sign: f64, opts: &EpSearchOptions) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_mag = f64::INFINITY;
    for iq in 0..opts.scan_q {
        let q = TAU * (iq as f64 + 0.5) / opts.scan_q as f64;
        for ie in 0..opts.scan_eta {
            let eta = opts.eta_max * ie as f64 / (opts.scan_eta - 1).max(1) as f64;
            let (z, ..) = coupling_and_derivs(delta, eta, q, side_sign);
            let mag = z.norm();
            if mag < best_mag {
                best_mag = mag;
                best = (q, eta);
            }
        }
    }
    best
}

/// Locates the exceptional-point pair of the walk at fixed `δ`.
///
/// Each of the two couplings is driven to zero by Newton iteration in
/// `(q, η)`, seeded either from `init = (q, η)` (mirrored in `q` for the
/// partner coupling) or from a coarse scan.  Returns the two records sorted
/// by momentum; fails with [`TopologyError::NotAnEP`] when the converged
/// degeneracy is diabolic (both couplings, and hence the whole `m` vector,
/// vanish).
pub fn find_exceptional_points(
    delta: f64,
    init: Option<(f64, f64)>,
    opts: &EpSearchOptions,
) -> Result<[EPRecord; 2], TopologyError> {
    ModelParams::new(delta, 0.0)?; // validates δ up front
    let mut records = Vec::with_capacity(2);
    for (side, side_sign) in [(CouplingSide::Upper, -1.0), (CouplingSide::Lower, 1.0)] {
        let start = match init {
            Some((q0, eta0)) => {
                if side_sign < 0.0 {
                    (q0, eta0)
                } else {
                    (TAU - q0, eta0)
                }
            }
            None => bootstrap_scan(delta, side_sign, opts),
        };
        let zero = coupling_zero_search(delta, side_sign, start, opts);
        if !zero.converged && zero.residual > 1e-6 {
            return Err(TopologyError::NoConvergence {
                iterations: zero.iterations,
                residual: zero.residual,
            });
        }
        let (partner, ..) = coupling_and_derivs(delta, zero.eta, zero.q, -side_sign);
        let params = ModelParams::new(delta, zero.eta)?;
        let cs = CanonicalStep::closed_form(&params, crate::spectral::Quasimomentum::new(zero.q));
        let m_mag = cs.m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        if m_mag <= 1e-4 || partner.norm() <= 1e-4 {
            // Both couplings collapse together: the m vector itself is
            // heading to zero and the degeneracy is diabolic.
            return Err(TopologyError::NotAnEP {
                q: zero.q,
                eta: zero.eta,
            });
        }
        if !zero.converged {
            return Err(TopologyError::NoConvergence {
                iterations: zero.iterations,
                residual: zero.residual,
            });
        }
        let coalescence_infidelity = eigensystem(&cs)?.infidelity();
        records.push(EPRecord {
            q: zero.q,
            eta: zero.eta,
            side,
            coupling_residual: zero.residual,
            partner_magnitude: partner.norm(),
            coalescence_infidelity,
            iterations: zero.iterations,
        });
    }
    records.sort_by(|a, b| a.q.total_cmp(&b.q));
    Ok([records[0], records[1]])
}

/// Grid specification for a topological phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramSpec {
    /// First splitting angle.
    pub delta_min: f64,
    /// Last splitting angle (inclusive).
    pub delta_max: f64,
    /// Number of splitting-angle samples (≥ 1).
    pub delta_count: usize,
    /// First gain/loss strength.
    pub eta_min: f64,
    /// Last gain/loss strength (inclusive).
    pub eta_max: f64,
    /// Number of gain/loss samples (≥ 1).
    pub eta_count: usize,
    /// Momentum samples per winding integral.
    pub samples: usize,
}

impl Default for PhaseDiagramSpec {
    /// A 12×8 grid covering `δ ∈ [0.2, 2π − 0.2]`, `η ∈ [0, 1.35]` at 90
    /// momentum samples — wide enough to show both winding phases while
    /// staying clear of the phase walls where the integral degrades.
    fn default() -> Self {
        Self {
            delta_min: 0.2,
            delta_max: TAU - 0.2,
            delta_count: 12,
            eta_min: 0.0,
            eta_max: 1.35,
            eta_count: 8,
            samples: 90,
        }
    }
}

impl PhaseDiagramSpec {
    fn validate(&self) -> Result<(), TopologyError> {
        let finite = self.delta_min.is_finite()
            && self.delta_max.is_finite()
            && self.eta_min.is_finite()
            && self.eta_max.is_finite();
        if !finite {
            return Err(TopologyError::InvalidGrid {
                reason: "grid bounds must be finite".into(),
            });
        }
        if self.delta_count < 8 || self.eta_count < 8 {
            return Err(TopologyError::InvalidGrid {
                reason: "grid needs at least 8 samples per axis".into(),
            });
        }
        if self.delta_max < self.delta_min || self.eta_max < self.eta_min {
            return Err(TopologyError::InvalidGrid {
                reason: "grid bounds must be ordered".into(),
            });
        }
        if self.samples < 3 {
            return Err(TopologyError::InvalidGrid {
                reason: "winding integration needs at least 3 samples".into(),
            });
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![min];
        }
        (0..count)
            .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
            .collect()
    }
}

/// One phase-diagram cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiagramCell {
    /// Splitting angle.
    pub delta: f64,
    /// Gain/loss strength.
    pub eta: f64,
    /// Complex winding number, or `None` when the sweep hit an
    /// exceptional-point pixel (the invariant is undefined on the wall).
    pub nu: Option<C64>,
}

/// Computes the winding number over a parameter grid (cells in row-major
/// order: `δ` outer, `η` inner).  Cells are evaluated in parallel.
pub fn phase_diagram(spec: &PhaseDiagramSpec) -> Result<Vec<PhaseDiagramCell>, TopologyError> {
    spec.validate()?;
    let deltas = PhaseDiagramSpec::axis(spec.delta_min, spec.delta_max, spec.delta_count);
    let etas = PhaseDiagramSpec::axis(spec.eta_min, spec.eta_max, spec.eta_count);
    let cells: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| etas.iter().map(move |&e| (d, e)))
        .collect();
    cells
        .into_par_iter()
        .map(|(delta, eta)| {
            let params = ModelParams::new(delta, eta)?;
            let nu = match winding_closed_form(&params, spec.samples) {
                Ok(nu) => Some(nu),
                Err(TopologyError::Spectral(
                    SpectralError::EPSingular
                    | SpectralError::EPSingularAt { .. }
                    | SpectralError::ScalarOperator,
                )) => None,
                Err(e) => return Err(e),
            };
            Ok(PhaseDiagramCell { delta, eta, nu })
        })
        .collect()
}
