//! Filter quality measures.

use nalgebra::DMatrix;

use super::filter::TrueFilter;

/// Reported in place of `−∞` when the estimate is exact.
pub const MISALIGNMENT_FLOOR_DB: f64 = -300.0;

/// Default relative threshold for [`rank_estimate`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// `10 log₁₀(‖Ŵ − H‖_F² / ‖H‖_F²)` in dB. The zero estimate scores exactly 0 dB.
pub fn misalignment(w_hat: &DMatrix<f64>, tf: &TrueFilter) -> f64 {
    assert_eq!(w_hat.shape(), tf.h_mat.shape(), "estimate and true filter differ in shape");
    let ratio = (w_hat - &tf.h_mat).norm_squared() / tf.h_mat.norm_squared();
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(MISALIGNMENT_FLOOR_DB)
    } else {
        MISALIGNMENT_FLOOR_DB
    }
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn rank_estimate(w: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = w.singular_values();
    let top = s.max();
    if !(top > 0.0) {
        return 0;
    }
    s.iter().filter(|v| **v > rel_tol * top).count()
}

/// Sum of singular values.
pub fn nuclear_norm(w: &DMatrix<f64>) -> f64 {
    w.singular_values().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tf(h: DMatrix<f64>) -> TrueFilter {
        TrueFilter::from_matrix(h).unwrap()
    }

    #[test]
    fn misalignment_reference_points() {
        let h = dmatrix![1.0, -2.0; 0.5, 3.0];
        let t = tf(h.clone());
        assert_eq!(misalignment(&DMatrix::zeros(2, 2), &t), 0.0);
        assert_eq!(misalignment(&h, &t), MISALIGNMENT_FLOOR_DB);
        assert!(misalignment(&(&h * 2.0), &t).abs() < 1e-15);
        assert!((misalignment(&(&h * 0.9), &t) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn rank_cases() {
        assert_eq!(rank_estimate(&DMatrix::identity(3, 3), 1e-6), 3);
        assert_eq!(rank_estimate(&dmatrix![1.0, 0.0; 0.0, 1e-12], 1e-6), 1);
        assert_eq!(rank_estimate(&DMatrix::zeros(3, 4), 1e-6), 0);
    }

    #[test]
    fn nuclear_cases() {
        assert!((nuclear_norm(&DMatrix::identity(2, 2)) - 2.0).abs() < 1e-15);
        let a = DVector::from_vec(vec![1.0, 2.0, -2.0]);
        let b = DVector::from_vec(vec![3.0, 4.0]);
        assert!((nuclear_norm(&(&a * b.transpose())) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn nuclear_matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = DMatrix::from_fn(4, 5, |_, _| rng.random_range(-1.0f64..1.0));
        // Independent route: σᵢ = √λᵢ(WWᵀ) from the symmetric eigensolver.
        let oracle: f64 = (&w * w.transpose())
            .symmetric_eigenvalues()
            .iter()
            .map(|l: &f64| l.max(0.0).sqrt())
            .sum();
        assert!((nuclear_norm(&w) - oracle).abs() < 1e-10);
    }
}
