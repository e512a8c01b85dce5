//! Complex 2×2 matrix helpers and the Pauli basis.
//!
//! Every operator in this crate lives in the span of `{σ₀, σₓ, σ_y, σ_z}`
//! with complex coefficients:
//!
//! ```text
//! M = m₀ σ₀ + m · σ ,   m₀ = tr(M)/2 ,
//! mₓ = (M₀₁ + M₁₀)/2 ,  m_y = i (M₀₁ − M₁₀)/2 ,  m_z = (M₀₀ − M₁₁)/2 ,
//! det M = m₀² − m · m   (bilinear, unconjugated dot product).
//! ```
//!
//! The helpers here are deliberately bilinear: for non-Hermitian operators the
//! coefficients `m₀`, `m` are genuinely complex and no conjugation may sneak
//! into the algebra.

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;

/// Complex double-precision scalar.
pub type C64 = Complex64;
/// Complex 2×2 matrix (one-step operators, Hamiltonians, symmetries).
pub type CMat2 = Matrix2<C64>;
/// Complex two-spinor (lattice-site amplitudes in the circular basis).
pub type CVec2 = Vector2<C64>;
/// Complex 3-vector (Bloch vectors of non-Hermitian operators).
pub type CVec3 = Vector3<C64>;
/// Real 3-vector (Stokes vectors, winding-plane normals).
pub type RVec3 = Vector3<f64>;

const C0: C64 = C64::new(0.0, 0.0);
const C1: C64 = C64::new(1.0, 0.0);
const CI: C64 = C64::new(0.0, 1.0);

/// Identity `σ₀`.
pub const SIGMA_0: CMat2 = CMat2::new(C1, C0, C0, C1);
/// Pauli `σₓ`.
pub const SIGMA_X: CMat2 = CMat2::new(C0, C1, C1, C0);
/// Pauli `σ_y`.
pub const SIGMA_Y: CMat2 = CMat2::new(C0, C64::new(0.0, -1.0), CI, C0);
/// Pauli `σ_z`.
pub const SIGMA_Z: CMat2 = CMat2::new(C1, C0, C0, C64::new(-1.0, 0.0));

/// Splits `M` into its Pauli coefficients `(m₀, m)` with `M = m₀σ₀ + m·σ`.
pub fn pauli_decompose(m: &CMat2) -> (C64, CVec3) {
    let m0 = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let mx = (m[(0, 1)] + m[(1, 0)]) * 0.5;
    let my = CI * (m[(0, 1)] - m[(1, 0)]) * 0.5;
    let mz = (m[(0, 0)] - m[(1, 1)]) * 0.5;
    (m0, CVec3::new(mx, my, mz))
}

/// Rebuilds the matrix `m₀σ₀ + m·σ` from Pauli coefficients.
pub fn from_pauli(m0: C64, m: &CVec3) -> CMat2 {
    CMat2::new(
        m0 + m.z,
        m.x - CI * m.y,
        m.x + CI * m.y,
        m0 - m.z,
    )
}

/// Bilinear cross product of complex 3-vectors (no conjugation).
pub fn cross3(a: &CVec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Frobenius norm `‖M‖_F = √Σ|Mᵢⱼ|²`.
pub fn frobenius_norm(m: &CMat2) -> f64 {
    m.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance `‖A − B‖_F`.
pub fn frobenius_dist(a: &CMat2, b: &CMat2) -> f64 {
    frobenius_norm(&(a - b))
}

/// Hilbert–Schmidt inner product `⟨A, B⟩ = tr(A† B)`.
pub fn trace_inner(a: &CMat2, b: &CMat2) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Unit-norm, phase-gauged copy of `v`: the first component of modulus
/// above `1e−9` is rotated to the positive real axis.  Returns `None` for a
/// (numerically) zero vector.
pub fn gauge_normalize(v: &CVec2) -> Option<CVec2> {
    let norm = v.norm();
    if norm <= 1e-290 {
        return None;
    }
    let mut u = v / C64::new(norm, 0.0);
    for k in 0..2 {
        if u[k].norm() > 1e-9 {
            let phase = u[k] / u[k].norm();
            u /= phase;
            return Some(u);
        }
    }
    Some(u)
}

/// Unit vector spanning the kernel of a (numerically) singular 2×2 matrix.
///
/// Both rows furnish a candidate null vector, `(M₀₁, −M₀₀)` and
/// `(M₁₁, −M₁₀)`; the larger one is kept.  Returns `None` when the matrix is
/// numerically zero relative to its own scale, in which case the kernel is the
/// whole space and the caller must pick a basis itself.
pub fn kernel_unit_vector(m: &CMat2) -> Option<CVec2> {
    let scale = m.iter().map(|e| e.norm()).fold(0.0_f64, f64::max).max(1.0);
    let cand_a = CVec2::new(m[(0, 1)], -m[(0, 0)]);
    let cand_b = CVec2::new(m[(1, 1)], -m[(1, 0)]);
    let pick = if cand_a.norm() >= cand_b.norm() {
        cand_a
    } else {
        cand_b
    };
    if pick.norm() <= 1e-13 * scale {
        return None;
    }
    gauge_normalize(&pick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pauli_matrices_square_to_identity() {
        for s in [SIGMA_X, SIGMA_Y, SIGMA_Z] {
            assert!(frobenius_dist(&(s * s), &SIGMA_0) < 1e-15);
        }
    }

    #[test]
    fn pauli_algebra_cyclic_products() {
        // σₓ σ_y = i σ_z and cyclic permutations.
        assert!(frobenius_dist(&(SIGMA_X * SIGMA_Y), &(SIGMA_Z * CI)) < 1e-15);
        assert!(frobenius_dist(&(SIGMA_Y * SIGMA_Z), &(SIGMA_X * CI)) < 1e-15);
        assert!(frobenius_dist(&(SIGMA_Z * SIGMA_X), &(SIGMA_Y * CI)) < 1e-15);
    }

    #[test]
    fn decompose_then_rebuild_is_identity() {
        let m = CMat2::new(
            C64::new(0.3, -1.1),
            C64::new(2.0, 0.7),
            C64::new(-0.4, 0.2),
            C64::new(1.5, 0.9),
        );
        let (m0, mv) = pauli_decompose(&m);
        assert!(frobenius_dist(&from_pauli(m0, &mv), &m) < 1e-14);
    }

    #[test]
    fn determinant_equals_pauli_quadratic_form() {
        let m = CMat2::new(
            C64::new(0.3, -1.1),
            C64::new(2.0, 0.7),
            C64::new(-0.4, 0.2),
            C64::new(1.5, 0.9),
        );
        let (m0, mv) = pauli_decompose(&m);
        let quad = m0 * m0 - mv.dot(&mv); // bilinear dot
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        assert_abs_diff_eq!(quad.re, det.re, epsilon = 1e-13);
        assert_abs_diff_eq!(quad.im, det.im, epsilon = 1e-13);
    }

    #[test]
    fn cross3_matches_real_cross_product() {
        let a = CVec3::new(C1, C0, C0);
        let b = CVec3::new(C0, C1, C0);
        let c = cross3(&a, &b);
        assert!((c - CVec3::new(C0, C0, C1)).norm() < 1e-15);
    }

    #[test]
    fn cross3_is_bilinear_not_sesquilinear() {
        // Scaling one argument by i scales the result by i (no conjugation).
        let a = CVec3::new(C64::new(0.2, 0.5), C64::new(-1.0, 0.1), C64::new(0.0, 0.9));
        let b = CVec3::new(C64::new(1.2, -0.3), C64::new(0.4, 0.4), C64::new(-0.7, 0.0));
        let lhs = cross3(&(a * CI), &b);
        let rhs = cross3(&a, &b) * CI;
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn kernel_vector_annihilates_singular_matrix() {
        // σ_z − σ₀ has kernel spanned by (0, 1).
        let m = SIGMA_Z - SIGMA_0;
        let v = kernel_unit_vector(&m).expect("kernel exists");
        assert!((m * v).norm() < 1e-14);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_vector_of_zero_matrix_is_none() {
        let z = CMat2::zeros();
        assert!(kernel_unit_vector(&z).is_none());
    }

    #[test]
    fn gauge_normalize_fixes_global_phase() {
        let v = CVec2::new(C64::new(0.0, 0.6), C64::new(-0.8, 0.0));
        let u = gauge_normalize(&v).unwrap();
        assert!(u[0].im.abs() < 1e-14);
        assert!(u[0].re > 0.0);
        assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-14);
    }
}
