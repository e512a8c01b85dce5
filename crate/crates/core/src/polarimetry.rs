//! Polarimetric measurement model: projective intensities and 18-ratio sets.
//!
//! The lattice basis `(|A⟩, |B⟩)` is the circular-polarization pair
//! `(|L⟩, |R⟩)`.  Measurements prepare one of three inputs, propagate it
//! through a single step `U(q)`, and analyze in the three mutually unbiased
//! polarization bases:
//!
//! ```text
//! |L⟩ = (1, 0) ,        |R⟩ = (0, 1) ,
//! |H⟩ = (1, 1)/√2 ,     |V⟩ = (−i, i)/√2 ,
//! |D⟩ = (1, i)/√2 ,     |A⟩ = (1, −i)/√2 ,
//!
//! I_ij(q) = I₀ |⟨j| U(q) |i⟩|² ,  i ∈ {L, H, D} ,  j ∈ {L,R,H,V,D,A} ,
//! r_ij    = I_ij / (I_ij + I_ij̄) ,          j̄ = basis partner of j.
//! ```
//!
//! Each analysis basis is complete, so `I_ij + I_ij̄ = I₀ ‖U|i⟩‖²` for every
//! pair: the 18 ratios are invariant under `U → cU` for any complex `c ≠ 0`.
//! The overall scale of the operator — in particular its sign — is therefore
//! unmeasurable, which is why downstream consumers work with unit-determinant
//! representatives and repair the sign by continuity.
//!
//! Synthetic datasets can be degraded by detector noise: an optional Poisson
//! stage (`counts ~ Poisson(I·budget)`, rescaled back) models shot noise at a
//! finite photon budget, and an optional additive Gaussian stage models
//! readout noise.  Noise draws come from a counter-based RNG with one stream
//! per measurement channel, so a dataset is a pure function of `(model, grid,
//! noise config, seed)`.

use crate::spectral::{step_operator, ModelParams, Quasimomentum};
use crate::mat::{C64, CMat2, CVec2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Errors from measurement synthesis and ratio formation.
#[derive(Debug, Error)]
pub enum PolarimetryError {
    /// The propagated input has numerically zero norm: every ratio of that
    /// input row is undefined.
    #[error("input {input:?} is annihilated by the operator; its ratios are undefined")]
    DarkInput { input: InputState },
    /// Gaussian noise level must be a finite, non-negative number.
    #[error("gaussian noise sigma must be finite and >= 0, got {sigma}")]
    InvalidSigma { sigma: f64 },
    /// Photon budget must be a finite, positive count.
    #[error("photon budget must be finite and > 0, got {budget}")]
    InvalidBudget { budget: f64 },
    /// A dataset needs at least one momentum sample.
    #[error("dataset synthesis needs at least 1 sample, got 0")]
    EmptyGrid,
}

/// Prepared input polarizations (rows of the ratio set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputState {
    /// Left-circular `(1, 0)` — the first lattice basis state.
    L,
    /// Horizontal `(1, 1)/√2`.
    H,
    /// Diagonal `(1, i)/√2`.
    D,
}

impl InputState {
    /// The normalized input spinor.
    pub fn spinor(&self) -> CVec2 {
        match self {
            InputState::L => CVec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            InputState::H => CVec2::new(
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(FRAC_1_SQRT_2, 0.0),
            ),
            InputState::D => CVec2::new(
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(0.0, FRAC_1_SQRT_2),
            ),
        }
    }
}

/// Analyzer projections (columns of the ratio set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjectionState {
    /// Left-circular `(1, 0)`.
    L,
    /// Right-circular `(0, 1)`.
    R,
    /// Horizontal `(1, 1)/√2`.
    H,
    /// Vertical `(−i, i)/√2`.
    V,
    /// Diagonal `(1, i)/√2`.
    D,
    /// Antidiagonal `(1, −i)/√2`.
    A,
}

impl ProjectionState {
    /// The normalized analyzer spinor.
    pub fn spinor(&self) -> CVec2 {
        match self {
            ProjectionState::L => CVec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            ProjectionState::R => CVec2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            ProjectionState::H => CVec2::new(
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(FRAC_1_SQRT_2, 0.0),
            ),
            ProjectionState::V => CVec2::new(
                C64::new(0.0, -FRAC_1_SQRT_2),
                C64::new(0.0, FRAC_1_SQRT_2),
            ),
            ProjectionState::D => CVec2::new(
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(0.0, FRAC_1_SQRT_2),
            ),
            ProjectionState::A => CVec2::new(
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(0.0, -FRAC_1_SQRT_2),
            ),
        }
    }

    /// The orthogonal partner completing the analysis basis
    /// (`L↔R`, `H↔V`, `D↔A`).
    pub fn partner(&self) -> ProjectionState {
        match self {
            ProjectionState::L => ProjectionState::R,
            ProjectionState::R => ProjectionState::L,
            ProjectionState::H => ProjectionState::V,
            ProjectionState::V => ProjectionState::H,
            ProjectionState::D => ProjectionState::A,
            ProjectionState::A => ProjectionState::D,
        }
    }
}

/// The 18 measurement channels in canonical order: for each input `L, H, D`,
/// the projections `L,R,H,V,D,A`.
pub const CHANNELS: [(InputState, ProjectionState); 18] = [
    (InputState::L, ProjectionState::L),
    (InputState::L, ProjectionState::R),
    (InputState::L, ProjectionState::H),
    (InputState::L, ProjectionState::V),
    (InputState::L, ProjectionState::D),
    (InputState::L, ProjectionState::A),
    (InputState::H, ProjectionState::L),
    (InputState::H, ProjectionState::R),
    (InputState::H, ProjectionState::H),
    (InputState::H, ProjectionState::V),
    (InputState::H, ProjectionState::D),
    (InputState::H, ProjectionState::A),
    (InputState::D, ProjectionState::L),
    (InputState::D, ProjectionState::R),
    (InputState::D, ProjectionState::H),
    (InputState::D, ProjectionState::V),
    (InputState::D, ProjectionState::D),
    (InputState::D, ProjectionState::A),
];

/// Channel names in canonical order (file stems, JSON keys, CSV columns).
pub const CHANNEL_NAMES: [&str; 18] = [
    "LL", "LR", "LH", "LV", "LD", "LA", "HL", "HR", "HH", "HV", "HD", "HA", "DL", "DR", "DH",
    "DV", "DD", "DA",
];

/// Projective intensity `I₀ |⟨j|U|i⟩|²`.
pub fn intensity(u: &CMat2, input: InputState, projection: ProjectionState, i0: f64) -> f64 {
    let psi = u * input.spinor();
    i0 * projection.spinor().dotc(&psi).norm_sqr()
}

/// All 18 raw intensities at unit source intensity, in canonical order.
pub fn intensity_set(u: &CMat2) -> [f64; 18] {
    let mut out = [0.0; 18];
    for (slot, (input, projection)) in out.iter_mut().zip(CHANNELS) {
        *slot = intensity(u, input, projection, 1.0);
    }
    out
}

/// One pair-normalized 18-ratio measurement set.
///
/// JSON keys follow the canonical channel order; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioSet {
    #[serde(rename = "LL")]
    pub ll: f64,
    #[serde(rename = "LR")]
    pub lr: f64,
    #[serde(rename = "LH")]
    pub lh: f64,
    #[serde(rename = "LV")]
    pub lv: f64,
    #[serde(rename = "LD")]
    pub ld: f64,
    #[serde(rename = "LA")]
    pub la: f64,
    #[serde(rename = "HL")]
    pub hl: f64,
    #[serde(rename = "HR")]
    pub hr: f64,
    #[serde(rename = "HH")]
    pub hh: f64,
    #[serde(rename = "HV")]
    pub hv: f64,
    #[serde(rename = "HD")]
    pub hd: f64,
    #[serde(rename = "HA")]
    pub ha: f64,
    #[serde(rename = "DL")]
    pub dl: f64,
    #[serde(rename = "DR")]
    pub dr: f64,
    #[serde(rename = "DH")]
    pub dh: f64,
    #[serde(rename = "DV")]
    pub dv: f64,
    #[serde(rename = "DD")]
    pub dd: f64,
    #[serde(rename = "DA")]
    pub da: f64,
}

impl RatioSet {
    /// The ratios as an array in canonical channel order.
    pub fn as_array(&self) -> [f64; 18] {
        [
            self.ll, self.lr, self.lh, self.lv, self.ld, self.la, self.hl, self.hr, self.hh,
            self.hv, self.hd, self.ha, self.dl, self.dr, self.dh, self.dv, self.dd, self.da,
        ]
    }

    /// Builds a set from an array in canonical channel order.
    pub fn from_array(r: [f64; 18]) -> Self {
        Self {
            ll: r[0],
            lr: r[1],
            lh: r[2],
            lv: r[3],
            ld: r[4],
            la: r[5],
            hl: r[6],
            hr: r[7],
            hh: r[8],
            hv: r[9],
            hd: r[10],
            ha: r[11],
            dl: r[12],
            dr: r[13],
            dh: r[14],
            dv: r[15],
            dd: r[16],
            da: r[17],
        }
    }
}

/// Pair-normalizes 18 raw intensities (canonical order) into ratios.
///
/// A pair whose intensities sum to zero carries no information; both of its
/// ratios are set to `1/2`.
pub fn ratios_from_intensities(raw: &[f64; 18]) -> RatioSet {
    let mut out = [0.0; 18];
    for pair in 0..9 {
        let (a, b) = (raw[2 * pair], raw[2 * pair + 1]);
        let sum = a + b;
        if sum > 0.0 {
            out[2 * pair] = a / sum;
            out[2 * pair + 1] = b / sum;
        } else {
            out[2 * pair] = 0.5;
            out[2 * pair + 1] = 0.5;
        }
    }
    RatioSet::from_array(out)
}

/// Noiseless 18-ratio set of an operator.
///
/// Fails with [`PolarimetryError::DarkInput`] when some `U|i⟩` is numerically
/// zero relative to the operator scale (every ratio of that row would be
/// `0/0`).
pub fn normalized_set(u: &CMat2) -> Result<RatioSet, PolarimetryError> {
    let scale_sq: f64 = u.iter().map(|e| e.norm_sqr()).sum();
    for input in [InputState::L, InputState::H, InputState::D] {
        let psi = u * input.spinor();
        if psi.norm_squared() <= 1e-12 * scale_sq {
            return Err(PolarimetryError::DarkInput { input });
        }
    }
    Ok(ratios_from_intensities(&intensity_set(u)))
}

/// Detector noise model for synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Relative standard deviation of multiplicative Gaussian gain noise on
    /// each raw intensity (`I → I·(1 + σξ)`).  Zero disables the stage.
    #[serde(default)]
    pub gaussian_sigma: f64,
    /// Expected photon count at unit intensity; enables Poisson shot noise.
    #[serde(default)]
    pub photon_budget: Option<f64>,
    /// RNG seed; channel index selects the stream.
    #[serde(default)]
    pub seed: u64,
}

impl NoiseConfig {
    /// Noise-free configuration (seed kept for provenance).
    pub fn noiseless(seed: u64) -> Self {
        Self {
            gaussian_sigma: 0.0,
            photon_budget: None,
            seed,
        }
    }

    /// Validates noise magnitudes.
    pub fn validate(&self) -> Result<(), PolarimetryError> {
        if !self.gaussian_sigma.is_finite() || self.gaussian_sigma < 0.0 {
            return Err(PolarimetryError::InvalidSigma {
                sigma: self.gaussian_sigma,
            });
        }
        if let Some(budget) = self.photon_budget {
            if !budget.is_finite() || budget <= 0.0 {
                return Err(PolarimetryError::InvalidBudget { budget });
            }
        }
        Ok(())
    }

    fn is_noiseless(&self) -> bool {
        self.gaussian_sigma == 0.0 && self.photon_budget.is_none()
    }
}

/// One momentum pixel of a measurement dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    /// Pixel index within the Brillouin zone.
    pub k: usize,
    /// Quasimomentum of the pixel, `2πk/n`.
    pub q: f64,
    /// Pair-normalized measurement ratios.
    pub ratios: RatioSet,
}

/// Synthesizes a full-zone measurement dataset on `n_samples` momenta.
///
/// Raw intensities are degraded per the noise model (Poisson stage first,
/// then Gaussian, each clipped at zero) and pair-normalized afterwards, so
/// noisy ratios still sum to one within each analysis pair.  Channel `c`
/// consumes only RNG stream `c`: the dataset is a pure function of the
/// arguments.
pub fn synthesize_dataset(
    params: &ModelParams,
    n_samples: usize,
    noise: &NoiseConfig,
) -> Result<Vec<DatasetRecord>, PolarimetryError> {
    if n_samples == 0 {
        return Err(PolarimetryError::EmptyGrid);
    }
    noise.validate()?;
    let mut channel_rngs: Vec<ChaCha12Rng> = (0..18)
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
            rng.set_stream(c as u64);
            rng
        })
        .collect();
    let gaussian = if noise.gaussian_sigma > 0.0 {
        Some(Normal::new(0.0, noise.gaussian_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut records = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let q = Quasimomentum::new(2.0 * std::f64::consts::PI * k as f64 / n_samples as f64);
        let u = step_operator(params, q);
        if noise.is_noiseless() {
            let ratios = normalized_set(u.matrix())?;
            records.push(DatasetRecord {
                k,
                q: q.value(),
                ratios,
            });
            continue;
        }
        let mut raw = intensity_set(u.matrix());
        for (c, value) in raw.iter_mut().enumerate() {
            let rng = &mut channel_rngs[c];
            if let Some(budget) = noise.photon_budget {
                let lam = (*value * budget).max(0.0);
                if lam > 0.0 {
                    let counts = Poisson::new(lam).expect("positive mean").sample(rng);
                    *value = counts / budget;
                } else {
                    *value = 0.0;
                }
            }
            if let Some(normal) = &gaussian {
                *value *= 1.0 + normal.sample(rng);
            }
            *value = value.max(0.0);
        }
        records.push(DatasetRecord {
            k,
            q: q.value(),
            ratios: ratios_from_intensities(&raw),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::SIGMA_0;
    use approx::assert_abs_diff_eq;

    fn golden_operator() -> CMat2 {
        let p = ModelParams::new(std::f64::consts::FRAC_PI_4, 0.9).unwrap();
        *step_operator(&p, Quasimomentum::new(0.7)).matrix()
    }

    #[test]
    fn ratio_set_golden_values() {
        let r = normalized_set(&golden_operator()).unwrap();
        let expected = [
            0.37088699552109433,
            0.6291130044789056,
            0.22716797096412494,
            0.772832029035875,
            0.8986132411330531,
            0.1013867588669469,
            0.14849024283058046,
            0.8515097571694195,
            0.7675072328251673,
            0.23249276717483272,
            0.7342664529993946,
            0.2657335470006055,
            0.25329233870116097,
            0.746707661298839,
            0.06713914611912104,
            0.9328608538808789,
            0.5420334513688049,
            0.45796654863119507,
        ];
        for (k, (got, want)) in r.as_array().iter().zip(expected).enumerate() {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-13);
            assert!(want >= 0.0, "channel {k}");
        }
    }

    #[test]
    fn pairs_sum_to_one() {
        let r = normalized_set(&golden_operator()).unwrap().as_array();
        for pair in 0..9 {
            assert_abs_diff_eq!(r[2 * pair] + r[2 * pair + 1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let u = golden_operator();
        let scaled = u * C64::new(0.0, 3.7);
        let a = normalized_set(&u).unwrap().as_array();
        let b = normalized_set(&scaled).unwrap().as_array();
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn identity_operator_keeps_like_channels() {
        let r = normalized_set(&SIGMA_0).unwrap();
        assert_abs_diff_eq!(r.ll, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.hh, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.dd, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn golden_intensity_value() {
        let p = ModelParams::new(1.3, 1.4).unwrap();
        let u = step_operator(&p, Quasimomentum::new(2.0));
        let i_da = intensity(u.matrix(), InputState::D, ProjectionState::A, 1.0);
        assert_abs_diff_eq!(i_da, 0.009170159766254356, epsilon = 1e-14);
    }

    #[test]
    fn dark_input_is_detected() {
        // This operator annihilates |L⟩ (first column is zero).
        let u = CMat2::new(
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        );
        assert!(matches!(
            normalized_set(&u),
            Err(PolarimetryError::DarkInput {
                input: InputState::L
            })
        ));
    }

    #[test]
    fn dataset_is_deterministic_in_seed() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let noise = NoiseConfig {
            gaussian_sigma: 0.01,
            photon_budget: Some(1e5),
            seed: 42,
        };
        let a = synthesize_dataset(&p, 30, &noise).unwrap();
        let b = synthesize_dataset(&p, 30, &noise).unwrap();
        assert_eq!(a, b);
        let other = synthesize_dataset(
            &p,
            30,
            &NoiseConfig {
                seed: 43,
                ..noise
            },
        )
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn noiseless_dataset_matches_direct_ratios() {
        let p = ModelParams::new(1.3, 1.4).unwrap();
        let records = synthesize_dataset(&p, 90, &NoiseConfig::noiseless(7)).unwrap();
        assert_eq!(records.len(), 90);
        let k = 20;
        let u = step_operator(&p, Quasimomentum::new(records[k].q));
        let direct = normalized_set(u.matrix()).unwrap().as_array();
        for (got, want) in records[k].ratios.as_array().iter().zip(direct) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn large_photon_budget_approaches_noiseless_ratios() {
        let p = ModelParams::new(1.3, 0.3).unwrap();
        let noisy = synthesize_dataset(
            &p,
            10,
            &NoiseConfig {
                gaussian_sigma: 0.0,
                photon_budget: Some(1e9),
                seed: 5,
            },
        )
        .unwrap();
        let clean = synthesize_dataset(&p, 10, &NoiseConfig::noiseless(5)).unwrap();
        for (a, b) in noisy.iter().zip(&clean) {
            for (x, y) in a.ratios.as_array().iter().zip(b.ratios.as_array()) {
                assert_abs_diff_eq!(*x, y, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn noisy_pairs_still_sum_to_one() {
        let p = ModelParams::new(std::f64::consts::FRAC_PI_4, 0.9).unwrap();
        let records = synthesize_dataset(
            &p,
            30,
            &NoiseConfig {
                gaussian_sigma: 0.05,
                photon_budget: None,
                seed: 11,
            },
        )
        .unwrap();
        for rec in &records {
            let r = rec.ratios.as_array();
            for pair in 0..9 {
                assert_abs_diff_eq!(r[2 * pair] + r[2 * pair + 1], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn record_json_uses_uppercase_channel_keys() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let records = synthesize_dataset(&p, 3, &NoiseConfig::noiseless(0)).unwrap();
        let text = serde_json::to_string(&records[1]).unwrap();
        assert!(text.contains("\"k\":1"));
        assert!(text.contains("\"LL\":"));
        assert!(text.contains("\"DA\":"));
        let back: DatasetRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, records[1]);
    }

    #[test]
    fn unknown_ratio_keys_are_rejected() {
        let text = r#"{"LL":0.5,"LR":0.5,"LH":0.5,"LV":0.5,"LD":0.5,"LA":0.5,
                       "HL":0.5,"HR":0.5,"HH":0.5,"HV":0.5,"HD":0.5,"HA":0.5,
                       "DL":0.5,"DR":0.5,"DH":0.5,"DV":0.5,"DD":0.5,"DA":0.5,
                       "XX":1.0}"#;
        assert!(serde_json::from_str::<RatioSet>(text).is_err());
    }

    #[test]
    fn invalid_noise_magnitudes_are_rejected() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let bad_sigma = NoiseConfig {
            gaussian_sigma: -0.1,
            photon_budget: None,
            seed: 0,
        };
        assert!(matches!(
            synthesize_dataset(&p, 3, &bad_sigma),
            Err(PolarimetryError::InvalidSigma { .. })
        ));
        let bad_budget = NoiseConfig {
            gaussian_sigma: 0.0,
            photon_budget: Some(0.0),
            seed: 0,
        };
        assert!(matches!(
            synthesize_dataset(&p, 3, &bad_budget),
            Err(PolarimetryError::InvalidBudget { .. })
        ));
    }
}
