//! Randomized structural invariants of the forward model, the measurement
//! map, and the symmetry layer.  Each suite draws 1000 cases.

use blochtomo::mat::{frobenius_dist, C64, CMat2, CVec2};
use blochtomo::polarimetry::normalized_set;
use blochtomo::ptsym::{order_parameter, vk_apply};
use blochtomo::spectral::{
    bloch_closed_form, eigensystem, hopping_from_params, step_operator, CanonicalStep,
    ModelParams, Quasimomentum,
};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn params(delta: f64, eta: f64) -> ModelParams {
    ModelParams::new(delta, eta).expect("finite parameters")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// The single-step operator is special: `det U(q) = 1` for all
    /// parameters, lossy or not.
    #[test]
    fn determinant_is_one(
        delta in 0.0..TAU,
        eta in -1.8_f64..1.8,
        q in 0.0..TAU,
    ) {
        let u = step_operator(&params(delta, eta), Quasimomentum::new(q));
        let det = u.det();
        prop_assert!((det - C64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    /// The complex hopping amplitudes obey the bilinear identity
    /// `α² + β² = 1` (not a modulus-square sum).
    #[test]
    fn hopping_bilinear_identity(delta in 0.0..TAU, eta in -1.8_f64..1.8) {
        let coeffs = hopping_from_params(&params(delta, eta));
        prop_assert!(coeffs.bilinear_residual().norm() <= 1e-12);
    }

    /// The closed-form Bloch vector lies in the sublattice-symmetric plane:
    /// its y and z components coincide at every momentum.
    #[test]
    fn bloch_vector_sublattice_plane(
        delta in 0.0..TAU,
        eta in -1.8_f64..1.8,
        q in 0.0..TAU,
    ) {
        let result = bloch_closed_form(&params(delta, eta), Quasimomentum::new(q));
        prop_assume!(result.is_ok()); // discard exact exceptional points
        let bloch = result.unwrap();
        prop_assert!((bloch.n.y - bloch.n.z).norm() <= 1e-10);
    }

    /// Quasi-energies come in a `±E` pair: `λ₁ + λ₂ = 0`.
    #[test]
    fn quasienergies_sum_to_zero(
        delta in 0.0..TAU,
        eta in -1.8_f64..1.8,
        q in 0.0..TAU,
    ) {
        let cs = CanonicalStep::closed_form(&params(delta, eta), Quasimomentum::new(q));
        let eigen = eigensystem(&cs).expect("unit-determinant step");
        prop_assert!((eigen.lambda1 + eigen.lambda2).norm() <= 1e-10);
    }

    /// Measured ratios are projective: rescaling the operator by any
    /// nonzero complex number leaves every ratio unchanged.
    #[test]
    fn ratios_are_scale_invariant(
        delta in 0.0..TAU,
        eta in -1.8_f64..1.8,
        q in 0.0..TAU,
        modulus in 0.1_f64..10.0,
        phase in 0.0..TAU,
    ) {
        let u = *step_operator(&params(delta, eta), Quasimomentum::new(q)).matrix();
        let scale = C64::from_polar(modulus, phase);
        let scaled: CMat2 = u * scale;
        let base = normalized_set(&u);
        let rescaled = normalized_set(&scaled);
        prop_assume!(base.is_ok() && rescaled.is_ok());
        let (base, rescaled) = (base.unwrap().as_array(), rescaled.unwrap().as_array());
        for (a, b) in base.iter().zip(rescaled.iter()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    /// The symmetry-breaking order parameter is gauge invariant:
    /// `ψ → cψ` changes nothing for any complex `c ≠ 0`.
    #[test]
    fn order_parameter_gauge_invariance(
        re1 in -1.0_f64..1.0, im1 in -1.0_f64..1.0,
        re2 in -1.0_f64..1.0, im2 in -1.0_f64..1.0,
        phi in 0.0..TAU,
        modulus in 0.2_f64..5.0,
        phase in 0.0..TAU,
    ) {
        let psi = CVec2::new(C64::new(re1, im1), C64::new(re2, im2));
        prop_assume!(psi.norm() > 1e-3);
        let scaled: CVec2 = psi * C64::from_polar(modulus, phase);
        let a = order_parameter(&psi, phi).unwrap();
        let b = order_parameter(&scaled, phi).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
    }

    /// The antiunitary symmetry is an involution: applying `VK` twice
    /// returns the original spinor.
    #[test]
    fn antiunitary_symmetry_is_an_involution(
        re1 in -1.0_f64..1.0, im1 in -1.0_f64..1.0,
        re2 in -1.0_f64..1.0, im2 in -1.0_f64..1.0,
        phi in 0.0..TAU,
    ) {
        let psi = CVec2::new(C64::new(re1, im1), C64::new(re2, im2));
        let twice = vk_apply(&vk_apply(&psi, phi), phi);
        prop_assert!((twice - psi).norm() <= 1e-12);
    }

    /// Without gain/loss the walk is unitary: `U†U = 𝟙` at `η = 0`.
    #[test]
    fn vanishing_gain_loss_is_unitary(delta in 0.0..TAU, q in 0.0..TAU) {
        let u = step_operator(&params(delta, 0.0), Quasimomentum::new(q));
        let gram = u.matrix().adjoint() * u.matrix();
        prop_assert!(frobenius_dist(&gram, &CMat2::identity()) <= 1e-12);
    }
}
