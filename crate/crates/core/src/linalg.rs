//! Small dense helpers on top of `nalgebra` used by the estimators and the
//! stability analysis. Everything here works on `DMatrix`/`DVector` because
//! the plant orders are only known at runtime.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Condition number above which a Gram matrix is treated as singular.
pub const CONDITION_CUTOFF: f64 = 1e12;

/// Largest eigenvalue modulus. The 0x0 matrix has spectral radius 0.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 2-norm (largest singular value).
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `true` when a symmetric PSD matrix is numerically invertible, i.e. its
/// smallest eigenvalue is positive and the eigenvalue ratio stays below
/// [`CONDITION_CUTOFF`].
pub fn is_invertible_spd(m: &DMatrix<f64>) -> bool {
    let ev = symmetric_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => lo > 0.0 && hi / lo <= CONDITION_CUTOFF,
        _ => false,
    }
}

/// Solves `m x = rhs` for symmetric positive definite `m`, returning `None`
/// when the matrix fails the invertibility cutoff.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if !is_invertible_spd(m) {
        return None;
    }
    let chol = m.clone().cholesky()?;
    Some(chol.solve(rhs))
}

/// Inverse of a symmetric positive definite matrix, `None` under the cutoff.
pub fn invert_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if !is_invertible_spd(m) {
        return None;
    }
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(inv))
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Sherman-Morrison rank-one downdate of an inverse: given `p = X^{-1}`,
/// returns `(X + v v')^{-1}` and the gain vector `p v / (1 + v' p v)`.
pub fn rank_one_inverse_update(p: &DMatrix<f64>, v: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let pv = p * v;
    let denom = 1.0 + v.dot(&pv);
    let gain = &pv / denom;
    let next = p - &gain * pv.transpose();
    (symmetrize(next), gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radius_of_rotation_scaled() {
        // eigenvalues 0.6 * exp(+-i pi/2)
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.6, 0.6, 0.0]);
        assert_relative_eq!(spectral_radius(&m), 0.6, epsilon = 1e-12);
        assert_eq!(spectral_radius(&DMatrix::zeros(0, 0)), 0.0);
    }

    #[test]
    fn sherman_morrison_matches_direct_inverse() {
        let x = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let v = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let p = invert_spd(&x).unwrap();
        let (next, _) = rank_one_inverse_update(&p, &v);
        let direct = invert_spd(&(&x + &v * v.transpose())).unwrap();
        assert_relative_eq!(next, direct, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_is_not_invertible() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let g = &v * v.transpose();
        assert!(!is_invertible_spd(&g));
        assert!(solve_spd(&g, &v).is_none());
    }
}
