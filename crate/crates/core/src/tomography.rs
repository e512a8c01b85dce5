//! Inverse problem: recovering the step operator from measurement ratios.
//!
//! Each momentum pixel is solved independently as a constrained nonlinear
//! least-squares problem over the eight real parameters of the canonical
//! form `(m₀, m)`, with the model ratios
//!
//! ```text
//! 𝓡_ij(m₀, m) = |⟨j|M|i⟩|² / (|⟨j|M|i⟩|² + |⟨j⊥|M|i⟩|²),
//!               M = m₀σ₀ + m·σ ,
//! ```
//!
//! matched against the 18 measured ratios.  The determinant gauge
//! `m₀² − m·m = 1` (the double constraint pinning the two-parameter complex
//! scale freedom the ratios cannot see) is enforced twice over: two
//! penalty residuals keep the Levenberg–Marquardt steps well conditioned
//! along the gauge direction, and every accepted iterate is projected back
//! onto the constraint surface by renormalization.  Matrix elements are
//! linear in the parameters, so the Jacobian is analytic and exact.
//!
//! Working in `(m₀, m)` rather than `(E, n)` keeps the chart regular at
//! exceptional points, where `sin E → 0` makes the Bloch vector diverge —
//! precisely the loci this toolkit cares about.
//!
//! A full-zone sweep exploits continuity in `q`: the first pixel starts
//! from seeded random parameters (with restarts), every later pixel warm
//! starts from its predecessor.  The leftover global sign ambiguity
//! (`±M` produce identical ratios and both satisfy the gauge) is resolved
//! afterwards by [`branch_align`] or, against a reference operator, by
//! [`branch_align_to`].

use crate::mat::{C64, CMat2, CVec2};
use crate::polarimetry::{DatasetRecord, RatioSet, CHANNELS};
use crate::spectral::{lift_bands, BlochDecomposition, CanonicalStep};
use crate::topology::ep_suspect_pixels;
use nalgebra::{SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const N_PARAMS: usize = 8;
const N_RESIDUALS: usize = 20; // 18 ratios + 2 gauge penalties
const PENALTY_WEIGHT: f64 = 1.0;

type Params = SVector<f64, N_PARAMS>;
type Residuals = SVector<f64, N_RESIDUALS>;
type Jacobian = SMatrix<f64, N_RESIDUALS, N_PARAMS>;
type NormalMat = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// Errors from the reconstruction layer.
#[derive(Debug, Error)]
pub enum TomographyError {
    /// The solver configuration fails validation.
    #[error("invalid solver configuration: {reason}")]
    InvalidConfig { reason: String },
    /// A zone sweep needs at least two samples.
    #[error("zone reconstruction needs at least 2 samples, got {got}")]
    TooFewSamples { got: usize },
}

/// Stopping rules and restart policy of the per-pixel solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Outer iteration cap per solve.
    #[serde(default = "SolverConfig::default_max_iterations")]
    pub max_iterations: usize,
    /// Converged when the ratio cost falls at or below this value.
    #[serde(default = "SolverConfig::default_cost_tolerance")]
    pub cost_tolerance: f64,
    /// Converged when an accepted relative step falls below this value
    /// (the stopping rule that matters on noisy data, where the cost
    /// plateaus at the noise floor).
    #[serde(default = "SolverConfig::default_step_tolerance")]
    pub step_tolerance: f64,
    /// Random re-initializations tried when a solve stalls unconverged.
    #[serde(default = "SolverConfig::default_restarts")]
    pub restarts: usize,
    /// Seed of the restart initializer (stream index = restart number).
    #[serde(default)]
    pub seed: u64,
}

impl SolverConfig {
    fn default_max_iterations() -> usize {
        200
    }
    fn default_cost_tolerance() -> f64 {
        1e-18
    }
    fn default_step_tolerance() -> f64 {
        1e-12
    }
    fn default_restarts() -> usize {
        20
    }

    /// Checks that every control is positive and finite.
    pub fn validate(&self) -> Result<(), TomographyError> {
        let fail = |reason: &str| {
            Err(TomographyError::InvalidConfig {
                reason: reason.into(),
            })
        };
        if self.max_iterations == 0 {
            return fail("max_iterations must be positive");
        }
        if !(self.cost_tolerance.is_finite() && self.cost_tolerance > 0.0) {
            return fail("cost_tolerance must be positive");
        }
        if !(self.step_tolerance.is_finite() && self.step_tolerance > 0.0) {
            return fail("step_tolerance must be positive");
        }
        if self.restarts == 0 {
            return fail("restarts must be positive");
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: Self::default_max_iterations(),
            cost_tolerance: Self::default_cost_tolerance(),
            step_tolerance: Self::default_step_tolerance(),
            restarts: Self::default_restarts(),
            seed: 0,
        }
    }
}

/// Status flags of one reconstructed pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ReconstructionFlags {
    /// The solve met a stopping tolerance.
    pub converged: bool,
    /// The pixel is a cyclic local minimum of eigenvector infidelity below
    /// `1/2` — a coalescence candidate (set by zone-level post-processing).
    pub ep_suspect: bool,
    /// The pixel's data carried an extinguished input upstream.
    pub dark_input: bool,
}

/// One reconstructed momentum pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionResult {
    /// Recovered canonical step (det gauge holds to solver precision).
    pub canonical: CanonicalStep,
    /// Final ratio cost (sum of 18 squared residuals).
    pub residual: f64,
    /// Outer iterations of the run that produced this candidate.
    pub iterations: usize,
    /// Convergence / diagnostic flags.
    pub flags: ReconstructionFlags,
}

/// A reconstructed Brillouin-zone sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneReconstruction {
    /// Momentum of each pixel (taken from the dataset records).
    pub q: Vec<f64>,
    /// Per-pixel solver output, sign-aligned across the zone.
    pub results: Vec<ReconstructionResult>,
    /// Quasi-energy bands and Bloch vectors on the continuity-lifted
    /// branch; `None` at pixels too close to an exceptional point for the
    /// `(E, n)` chart.
    pub bands: Vec<Option<BlochDecomposition>>,
    /// Eigenvector infidelity `1 − |⟨ψ₁|ψ₂⟩|²` per pixel (`1` where the
    /// eigensystem is degenerate beyond evaluation).
    pub infidelity: Vec<f64>,
}

/// Sum of squared differences between a candidate's 18 model ratios and a
/// measured ratio set.  Zero exactly at a perfect (gauge-equivalent) match.
pub fn cost(candidate: &CanonicalStep, data: &RatioSet) -> f64 {
    let p = pack(candidate);
    let data = data.as_array();
    let (r, _) = residuals_and_jacobian(&p, &data);
    ratio_cost(&r)
}

fn pack(cs: &CanonicalStep) -> Params {
    Params::from_column_slice(&[
        cs.m0.re, cs.m0.im, cs.m.x.re, cs.m.x.im, cs.m.y.re, cs.m.y.im, cs.m.z.re, cs.m.z.im,
    ])
}

fn unpack(p: &Params) -> CanonicalStep {
    CanonicalStep {
        m0: C64::new(p[0], p[1]),
        m: crate::mat::CVec3::new(
            C64::new(p[2], p[3]),
            C64::new(p[4], p[5]),
            C64::new(p[6], p[7]),
        ),
    }
}

/// Complex matrix elements `⟨j_c|σ_μ|i_c⟩` for every channel and Pauli
/// component — the constant coefficients making `⟨j|M|i⟩` linear in the
/// parameters.
fn channel_coefficients() -> [[C64; 4]; 18] {
    let sigmas = [
        crate::mat::SIGMA_0,
        crate::mat::SIGMA_X,
        crate::mat::SIGMA_Y,
        crate::mat::SIGMA_Z,
    ];
    let mut coeff = [[C64::new(0.0, 0.0); 4]; 18];
    for (c, (input, projection)) in CHANNELS.iter().enumerate() {
        let ket: CVec2 = input.spinor();
        let bra = projection.spinor().adjoint();
        for (mu, sigma) in sigmas.iter().enumerate() {
            coeff[c][mu] = (bra * sigma * ket)[(0, 0)];
        }
    }
    coeff
}

fn ratio_cost(r: &Residuals) -> f64 {
    (0..18).map(|c| r[c] * r[c]).sum()
}

fn total_cost(r: &Residuals) -> f64 {
    r.norm_squared()
}

/// Residual vector (18 ratio residuals + 2 gauge penalties) and its exact
/// Jacobian at parameter vector `p`.
fn residuals_and_jacobian(p: &Params, data: &[f64; 18]) -> (Residuals, Jacobian) {
    thread_local! {
        static COEFF: [[C64; 4]; 18] = channel_coefficients();
    }
    COEFF.with(|coeff| {
        let mut r = Residuals::zeros();
        let mut j = Jacobian::zeros();
        // Channel amplitudes A_c = Σ_μ coeff[c][μ]·param_μ and the real
        // derivative d|A|²/dp of each intensity.
        let params_c = [
            C64::new(p[0], p[1]),
            C64::new(p[2], p[3]),
            C64::new(p[4], p[5]),
            C64::new(p[6], p[7]),
        ];
        let mut intensity = [0.0_f64; 18];
        let mut d_intensity = [[0.0_f64; N_PARAMS]; 18];
        for c in 0..18 {
            let mut amp = C64::new(0.0, 0.0);
            for mu in 0..4 {
                amp += coeff[c][mu] * params_c[mu];
            }
            intensity[c] = amp.norm_sqr();
            for mu in 0..4 {
                // d|A|²/dz for A linear in z: 2·Re(conj(A)·dA/dz), with
                // dA/d(Re z) = coeff and dA/d(Im z) = i·coeff.
                let base = amp.conj() * coeff[c][mu];
                d_intensity[c][2 * mu] = 2.0 * base.re;
                d_intensity[c][2 * mu + 1] = -2.0 * base.im;
            }
        }
        for pair in 0..9 {
            let (a, b) = (2 * pair, 2 * pair + 1);
            let sum = intensity[a] + intensity[b];
            if sum <= 1e-290 {
                // Extinguished pair: flat 1/2 model ratio, no gradient.
                r[a] = 0.5 - data[a];
                r[b] = 0.5 - data[b];
                continue;
            }
            let ratio_a = intensity[a] / sum;
            r[a] = ratio_a - data[a];
            r[b] = (1.0 - ratio_a) - data[b];
            for k in 0..N_PARAMS {
                let d = (d_intensity[a][k] * intensity[b] - intensity[a] * d_intensity[b][k])
                    / (sum * sum);
                j[(a, k)] = d;
                j[(b, k)] = -d;
            }
        }
        // Gauge penalties: g = m0² − m·m − 1 (complex), residuals w·(Re g, Im g).
        let g = params_c[0] * params_c[0]
            - params_c[1] * params_c[1]
            - params_c[2] * params_c[2]
            - params_c[3] * params_c[3]
            - C64::new(1.0, 0.0);
        r[18] = PENALTY_WEIGHT * g.re;
        r[19] = PENALTY_WEIGHT * g.im;
        for mu in 0..4 {
            let dg = if mu == 0 {
                2.0 * params_c[0]
            } else {
                -2.0 * params_c[mu]
            };
            // Holomorphic g: ∂(Re g, Im g)/∂(Re z, Im z) from g'.
            j[(18, 2 * mu)] = PENALTY_WEIGHT * dg.re;
            j[(18, 2 * mu + 1)] = -PENALTY_WEIGHT * dg.im;
            j[(19, 2 * mu)] = PENALTY_WEIGHT * dg.im;
            j[(19, 2 * mu + 1)] = PENALTY_WEIGHT * dg.re;
        }
        (r, j)
    })
}

/// Projects parameters onto the gauge surface `m0² − m·m = 1`.
fn project(p: &Params) -> Option<Params> {
    unpack(p).renormalized().ok().map(|cs| pack(&cs))
}

struct SolveOutcome {
    params: Params,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// One Levenberg–Marquardt descent from `start`, projected onto the gauge
/// surface after every accepted step.
fn solve_from(start: &Params, data: &[f64; 18], cfg: &SolverConfig) -> SolveOutcome {
    let mut p = project(start).unwrap_or(*start);
    let (mut r, mut j) = residuals_and_jacobian(&p, data);
    let mut mu = 1e-6;
    let mut iterations = 0;
    let mut converged = ratio_cost(&r) <= cfg.cost_tolerance;
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let a: NormalMat = j.transpose() * j;
        let g = j.transpose() * r;
        let mut stepped = false;
        for _ in 0..24 {
            let mut damped = a;
            for k in 0..N_PARAMS {
                damped[(k, k)] += mu * a[(k, k)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-g));
            let trial_raw = p + delta;
            let Some(trial) = project(&trial_raw) else {
                mu *= 10.0;
                continue;
            };
            let (tr, tj) = residuals_and_jacobian(&trial, data);
            if total_cost(&tr) < total_cost(&r) {
                let step = (trial - p).norm();
                p = trial;
                r = tr;
                j = tj;
                mu = (mu * 0.25).max(1e-14);
                stepped = true;
                if ratio_cost(&r) <= cfg.cost_tolerance
                    || step <= cfg.step_tolerance * (1.0 + p.norm())
                {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
            if mu > 1e15 {
                break;
            }
        }
        if !stepped {
            // No downhill step exists at the damping limit: a (possibly
            // noisy) local minimum.
            converged = ratio_cost(&r) <= cfg.cost_tolerance || mu > 1e15;
            break;
        }
    }
    SolveOutcome {
        params: p,
        residual: ratio_cost(&r),
        iterations,
        converged,
    }
}

/// Seeded random gauge-surface point; `stream` isolates restarts.
fn random_start(seed: u64, stream: u64) -> Params {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let mut p = Params::zeros();
        for k in 0..N_PARAMS {
            p[k] = StandardNormal.sample(&mut rng);
        }
        if let Some(projected) = project(&p) {
            return projected;
        }
    }
}

/// Reconstructs one momentum pixel from its 18 measured ratios.
///
/// Descends from `init` first; if that stalls unconverged, retries from up
/// to `cfg.restarts` seeded random gauge-surface points (RNG streams
/// `1..=restarts` of `cfg.seed`), keeping the lowest-cost outcome.  Failure
/// to converge is reported through the flags, never hidden: the best
/// iterate is always returned.
pub fn reconstruct_pixel(
    data: &RatioSet,
    init: &CanonicalStep,
    cfg: &SolverConfig,
) -> Result<ReconstructionResult, TomographyError> {
    cfg.validate()?;
    let data = data.as_array();
    let mut best = solve_from(&pack(init), &data, cfg);
    let mut restart = 1;
    while !best.converged && restart <= cfg.restarts {
        let attempt = solve_from(&random_start(cfg.seed, restart as u64), &data, cfg);
        if attempt.converged || attempt.residual < best.residual {
            best = attempt;
        }
        restart += 1;
    }
    Ok(ReconstructionResult {
        canonical: unpack(&best.params),
        residual: best.residual,
        iterations: best.iterations,
        flags: ReconstructionFlags {
            converged: best.converged,
            ep_suspect: false,
            dark_input: false,
        },
    })
}

fn first_pixel(data: &RatioSet, cfg: &SolverConfig) -> Result<ReconstructionResult, TomographyError> {
    let init = unpack(&random_start(cfg.seed, 0));
    reconstruct_pixel(data, &init, cfg)
}

/// Sequential continuation sweep over a full-zone dataset.
///
/// Pixel 0 starts from seeded random parameters (stream 0, with restarts);
/// every later pixel warm starts from its predecessor's solution.  The
/// sweep is then sign-aligned by [`branch_align`], pixels are classified
/// for coalescence candidates, and the `(E, n)` bands are lifted along the
/// continuity branch.
pub fn reconstruct_bz(
    data: &[DatasetRecord],
    cfg: &SolverConfig,
) -> Result<ZoneReconstruction, TomographyError> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(TomographyError::TooFewSamples { got: data.len() });
    }
    let mut results = Vec::with_capacity(data.len());
    results.push(first_pixel(&data[0].ratios, cfg)?);
    for record in &data[1..] {
        let prev: &ReconstructionResult = results.last().expect("nonempty");
        results.push(reconstruct_pixel(&record.ratios, &prev.canonical, cfg)?);
    }
    finish_zone(data, results)
}

/// Segment-parallel variant of [`reconstruct_bz`].
///
/// The zone is split into `segments` contiguous runs solved in parallel;
/// each segment's first pixel cold-starts exactly like pixel 0 of the
/// sequential sweep, later pixels warm start within the segment.  After
/// stitching and sign alignment the noiseless result matches the
/// sequential sweep to solver precision.
pub fn reconstruct_bz_parallel(
    data: &[DatasetRecord],
    cfg: &SolverConfig,
    segments: usize,
) -> Result<ZoneReconstruction, TomographyError> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(TomographyError::TooFewSamples { got: data.len() });
    }
    let segments = segments.clamp(1, data.len());
    let chunk = data.len().div_ceil(segments);
    let pieces: Vec<Result<Vec<ReconstructionResult>, TomographyError>> = data
        .par_chunks(chunk)
        .map(|records| {
            let mut out = Vec::with_capacity(records.len());
            out.push(first_pixel(&records[0].ratios, cfg)?);
            for record in &records[1..] {
                let prev = out.last().expect("nonempty");
                out.push(reconstruct_pixel(&record.ratios, &prev.canonical, cfg)?);
            }
            Ok(out)
        })
        .collect();
    let mut results = Vec::with_capacity(data.len());
    for piece in pieces {
        results.extend(piece?);
    }
    finish_zone(data, results)
}

fn finish_zone(
    data: &[DatasetRecord],
    results: Vec<ReconstructionResult>,
) -> Result<ZoneReconstruction, TomographyError> {
    let aligned = branch_align(&results.iter().map(|r| r.canonical).collect::<Vec<_>>());
    let mut results: Vec<ReconstructionResult> = results
        .into_iter()
        .zip(aligned.iter())
        .map(|(mut res, cs)| {
            res.canonical = *cs;
            res
        })
        .collect();
    let infidelity: Vec<f64> = aligned
        .iter()
        .map(|cs| {
            crate::spectral::eigensystem(cs)
                .map(|e| e.infidelity())
                .unwrap_or(1.0)
        })
        .collect();
    for k in ep_suspect_pixels(&infidelity) {
        results[k].flags.ep_suspect = true;
    }
    let bands = match lift_bands(&aligned) {
        Ok(bands) => bands.into_iter().map(Some).collect(),
        Err(_) => aligned
            .iter()
            .map(|cs| crate::spectral::bloch_from_canonical(cs).ok())
            .collect(),
    };
    Ok(ZoneReconstruction {
        q: data.iter().map(|r| r.q).collect(),
        results,
        bands,
        infidelity,
    })
}

fn continuity_signs(steps: &[CanonicalStep]) -> Vec<f64> {
    let mut signs = Vec::with_capacity(steps.len());
    let mut prev_sign = 1.0_f64;
    let mut prev = steps[0].matrix();
    signs.push(prev_sign);
    for cs in &steps[1..] {
        let m = cs.matrix();
        let overlap = crate::mat::trace_inner(&prev, &m).re;
        let sign = if overlap < 0.0 { -prev_sign } else { prev_sign };
        signs.push(sign);
        prev = m;
        prev_sign = sign;
    }
    signs
}

fn apply_signs(steps: &[CanonicalStep], signs: &[f64], flip_all: bool) -> Vec<CanonicalStep> {
    steps
        .iter()
        .zip(signs.iter())
        .map(|(cs, &s)| {
            if (s < 0.0) != flip_all {
                cs.flipped()
            } else {
                *cs
            }
        })
        .collect()
}

/// Resolves the per-pixel `±M` sign ambiguity of a zone sweep.
///
/// Consecutive pixels are chained to maximize continuity (the sign of
/// `Re tr(M_{k−1}† M_k)` decides each flip); the leftover global sign is
/// chosen by majority, so an already-continuous sweep is returned
/// unchanged and the map is idempotent.
pub fn branch_align(steps: &[CanonicalStep]) -> Vec<CanonicalStep> {
    if steps.len() < 2 {
        return steps.to_vec();
    }
    let signs = continuity_signs(steps);
    let flipped = signs.iter().filter(|&&s| s < 0.0).count();
    apply_signs(steps, &signs, 2 * flipped > steps.len())
}

/// Sign-aligns a zone sweep to an external reference for pixel 0.
///
/// The first pixel's sign is chosen so `Re tr(anchor† M₀) > 0`, then
/// continuity chains the rest — the alignment used when comparing a
/// reconstruction against a reference forward model.
pub fn branch_align_to(steps: &[CanonicalStep], anchor: &CMat2) -> Vec<CanonicalStep> {
    if steps.is_empty() {
        return Vec::new();
    }
    let signs = continuity_signs(steps);
    let first_overlap = crate::mat::trace_inner(anchor, &steps[0].matrix()).re;
    apply_signs(steps, &signs, first_overlap < 0.0)
}
