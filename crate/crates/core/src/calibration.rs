//! Extraction of the walk parameters from photometric bench readings.
//!
//! A calibration reading consists of four intensities taken on the coin
//! element alone: the like- and cross-circular outputs for a left-circular
//! probe, and the transmitted powers along the ordinary and extraordinary
//! axes of the dichroic element:
//!
//! ```text
//! I_LL = I₀ |α|² = I₀ (cosh η + cos δ)/2 ,
//! I_LR = I₀ |β|² = I₀ (cosh η − cos δ)/2 ,
//! I_ord / I_ext = e^{2η} .
//! ```
//!
//! Three estimators recover the parameters:
//!
//! * `η = ½ ln(I_ord / I_ext)` — always valid;
//! * `δ = 2 arctan √(I_LR / I_LL)` — exact only for a lossless coin
//!   (`η = 0`), giving `δ ∈ [0, π)`;
//! * `δ = arccos[ (I_LL − I_LR)/(I_LL + I_LR) · cosh η ]` — the
//!   dichroic-aware estimator, giving `δ ∈ [0, π]`.
//!
//! Splitting angles above `π` are indistinguishable from their mirror
//! `2π − δ` at this bench (only `cos δ` enters the intensities).

use crate::spectral::{hopping_from_params, ModelParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from calibration estimators.
#[derive(Debug, Error)]
pub enum CalibrationError {
    /// An intensity was missing its physical range (positive where required,
    /// non-negative otherwise, always finite).
    #[error("calibration reading field {field} = {value} is outside its physical range")]
    InvalidReading { field: &'static str, value: f64 },
    /// The dichroic estimator's arccos argument left `[-1, 1]`: the readings
    /// are mutually inconsistent at this precision.
    #[error("dichroic splitting argument {value:.6} lies outside [-1, 1]")]
    OutOfDomain { value: f64 },
}

/// One photometric calibration reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationReading {
    /// Like-circular output power for a left-circular probe.
    pub i_ll: f64,
    /// Cross-circular output power for a left-circular probe.
    pub i_lr: f64,
    /// Transmitted power along the ordinary (gain) axis.
    pub i_ord: f64,
    /// Transmitted power along the extraordinary (loss) axis.
    pub i_ext: f64,
}

fn require(field: &'static str, value: f64, strictly_positive: bool) -> Result<(), CalibrationError> {
    let ok = value.is_finite() && if strictly_positive { value > 0.0 } else { value >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(CalibrationError::InvalidReading { field, value })
    }
}

/// Gain/loss strength `η = ½ ln(I_ord / I_ext)`.
pub fn calibrate_eta(reading: &CalibrationReading) -> Result<f64, CalibrationError> {
    require("i_ord", reading.i_ord, true)?;
    require("i_ext", reading.i_ext, true)?;
    Ok(0.5 * (reading.i_ord / reading.i_ext).ln())
}

/// Lossless-coin splitting estimator `δ = 2 arctan √(I_LR / I_LL) ∈ [0, π)`.
///
/// Exact when `η = 0`; biased otherwise (use the dichroic estimator then).
pub fn calibrate_delta_plain(reading: &CalibrationReading) -> Result<f64, CalibrationError> {
    require("i_ll", reading.i_ll, true)?;
    require("i_lr", reading.i_lr, false)?;
    Ok(2.0 * (reading.i_lr / reading.i_ll).sqrt().atan())
}

/// Dichroic-aware splitting estimator
/// `δ = arccos[ (I_LL − I_LR)/(I_LL + I_LR) · cosh η ] ∈ [0, π]`.
pub fn calibrate_delta_dichroic(reading: &CalibrationReading) -> Result<f64, CalibrationError> {
    require("i_ll", reading.i_ll, false)?;
    require("i_lr", reading.i_lr, false)?;
    if reading.i_ll + reading.i_lr <= 0.0 {
        return Err(CalibrationError::InvalidReading {
            field: "i_ll + i_lr",
            value: reading.i_ll + reading.i_lr,
        });
    }
    let eta = calibrate_eta(reading)?;
    let contrast = (reading.i_ll - reading.i_lr) / (reading.i_ll + reading.i_lr);
    let arg = contrast * eta.cosh();
    if arg.abs() > 1.0 {
        return Err(CalibrationError::OutOfDomain { value: arg });
    }
    Ok(arg.acos())
}

/// Forward model of the bench: the noiseless reading produced by a coin with
/// the given parameters at unit probe intensity (`I_ord = e^{η}`,
/// `I_ext = e^{−η}`).
pub fn synthesize_reading(params: &ModelParams) -> CalibrationReading {
    let coeffs = hopping_from_params(params);
    CalibrationReading {
        i_ll: coeffs.alpha.norm_sqr(),
        i_lr: coeffs.beta.norm_sqr(),
        i_ord: params.eta().exp(),
        i_ext: (-params.eta()).exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn synthesized_reading_golden_values() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let r = synthesize_reading(&p);
        assert_abs_diff_eq!(r.i_ll, 0.7264820234334277, epsilon = 1e-14);
        assert_abs_diff_eq!(r.i_lr, 0.45898319480884003, epsilon = 1e-14);
    }

    #[test]
    fn eta_round_trips_exactly() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let r = synthesize_reading(&p);
        assert_abs_diff_eq!(calibrate_eta(&r).unwrap(), 0.6, epsilon = 1e-13);
    }

    #[test]
    fn dichroic_delta_round_trips() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let r = synthesize_reading(&p);
        assert_abs_diff_eq!(calibrate_delta_dichroic(&r).unwrap(), 1.3, epsilon = 1e-13);
    }

    #[test]
    fn plain_delta_is_exact_without_gain_loss() {
        let p = ModelParams::new(1.3, 0.0).unwrap();
        let r = synthesize_reading(&p);
        assert_abs_diff_eq!(calibrate_delta_plain(&r).unwrap(), 1.3, epsilon = 1e-13);
    }

    #[test]
    fn plain_delta_stays_in_half_open_interval() {
        for delta in [0.0, 0.4, 1.9, 3.0] {
            let p = ModelParams::new(delta, 0.0).unwrap();
            let d = calibrate_delta_plain(&synthesize_reading(&p)).unwrap();
            assert!((0.0..std::f64::consts::PI).contains(&d), "delta = {d}");
        }
    }

    #[test]
    fn inconsistent_reading_is_out_of_domain() {
        // Perfect polarization contrast with strong dichroism cannot come
        // from any splitting angle: arccos argument = cosh(1) > 1.
        let r = CalibrationReading {
            i_ll: 1.0,
            i_lr: 0.0,
            i_ord: (2.0_f64).exp(),
            i_ext: 1.0,
        };
        assert!(matches!(
            calibrate_delta_dichroic(&r),
            Err(CalibrationError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn unphysical_intensities_are_rejected() {
        let good = CalibrationReading {
            i_ll: 1.0,
            i_lr: 0.2,
            i_ord: 1.0,
            i_ext: 1.0,
        };
        for (field, bad) in [
            ("i_ll", CalibrationReading { i_ll: 0.0, ..good }),
            ("i_lr", CalibrationReading { i_lr: -0.1, ..good }),
            ("i_ord", CalibrationReading { i_ord: 0.0, ..good }),
            ("i_ext", CalibrationReading { i_ext: f64::NAN, ..good }),
        ] {
            let failed = calibrate_delta_plain(&bad).is_err() || calibrate_eta(&bad).is_err();
            assert!(failed, "field {field} should invalidate some estimator");
        }
    }
}
