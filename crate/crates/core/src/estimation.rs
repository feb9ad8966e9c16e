//! Online identification: full-sample and exploration-only least squares,
//! the `b1`-protected exploration estimate, and the recursive estimator of
//! the minimum-variance gain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arx::{ArxParams, MvGain};
use crate::linalg;

/// Initial regularisation of the gain-estimator information matrix.
pub const DEFAULT_LAMBDA_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("Gram matrix is singular")]
    Singular,
    #[error("estimate not available yet")]
    Unavailable,
}

/// Solves `V theta = xy` when `V` passes the invertibility cutoff.
pub fn lse_batch(gram: &DMatrix<f64>, cross: &DVector<f64>) -> Result<DVector<f64>, EstimationError> {
    linalg::solve_spd(gram, cross).ok_or(EstimationError::Singular)
}

/// Least squares that keeps exact Gram sums and, once the Gram matrix is
/// invertible, propagates the solution with rank-one updates.
#[derive(Debug, Clone)]
pub struct RecursiveLs {
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    count: usize,
    inverse: Option<DMatrix<f64>>,
    theta: Option<DVector<f64>>,
}

impl RecursiveLs {
    pub fn new(dim: usize) -> Self {
        Self { gram: DMatrix::zeros(dim, dim), cross: DVector::zeros(dim), count: 0, inverse: None, theta: None }
    }

    pub fn push(&mut self, phi: &DVector<f64>, y: f64) {
        self.gram += phi * phi.transpose();
        self.cross += phi * y;
        self.count += 1;
        match (&self.inverse, &self.theta) {
            (Some(inv), Some(theta)) => {
                let (next, gain) = linalg::rank_one_inverse_update(inv, phi);
                let innovation = y - phi.dot(theta);
                self.theta = Some(theta + gain * innovation);
                self.inverse = Some(next);
            }
            _ => {
                if let Some(inv) = linalg::invert_spd(&self.gram) {
                    self.theta = Some(&inv * &self.cross);
                    self.inverse = Some(inv);
                }
            }
        }
    }

    pub fn estimate(&self) -> Option<&DVector<f64>> {
        self.theta.as_ref()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn cross(&self) -> &DVector<f64> {
        &self.cross
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    /// Smallest eigenvalue of the Gram matrix, clamped at zero since
    /// rounding can push it slightly negative while the matrix is singular.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.gram).max(0.0)
    }
}

/// How the next output enters the gain innovation
/// `u_t - scale(y_{t+1}) - lambda' psi_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationScaling {
    /// `y_{t+1} / b1`, consistent with `y_{t+1} = b1 (u_t - lambda' psi_t) + w`.
    #[default]
    Divide,
    /// `b1 * y_{t+1}`.
    Multiply,
}

impl InnovationScaling {
    fn apply(self, y: f64, b1: f64) -> f64 {
        match self {
            InnovationScaling::Divide => y / b1,
            InnovationScaling::Multiply => b1 * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// Least squares over every sample.
    Full,
    /// The `b1`-protected exploration-only estimate.
    Exploration,
}

/// Everything a controller learns during a run.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    p: usize,
    q: usize,
    full: RecursiveLs,
    explore: RecursiveLs,
    theta_i_tilde: Option<DVector<f64>>,
    lambda_i_tilde: Option<MvGain>,
    lambda_rec: DVector<f64>,
    info_lambda: DMatrix<f64>,
    p_lambda: DMatrix<f64>,
    scaling: InnovationScaling,
}

impl EstimatorState {
    pub fn new(p: usize, q: usize, scaling: InnovationScaling) -> Self {
        Self::with_epsilon(p, q, scaling, DEFAULT_LAMBDA_EPSILON)
    }

    pub fn with_epsilon(p: usize, q: usize, scaling: InnovationScaling, epsilon: f64) -> Self {
        let d = p + q;
        Self {
            p,
            q,
            full: RecursiveLs::new(d),
            explore: RecursiveLs::new(d),
            theta_i_tilde: None,
            lambda_i_tilde: None,
            lambda_rec: DVector::zeros(d - 1),
            info_lambda: DMatrix::identity(d - 1, d - 1) * epsilon,
            p_lambda: DMatrix::identity(d - 1, d - 1) / epsilon,
            scaling,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Feeds `(phi_t, y_{t+1})`; exploration samples also enter the
    /// exploration-only estimator.
    pub fn rls_update(&mut self, phi: &DVector<f64>, y_next: f64, in_exploration: bool) {
        self.full.push(phi, y_next);
        if in_exploration {
            self.explore.push(phi, y_next);
            if let Some(theta) = self.explore.estimate() {
                if let Ok(gain) = MvGain::from_theta(theta.as_slice(), self.p) {
                    self.theta_i_tilde = Some(theta.clone());
                    self.lambda_i_tilde = Some(gain);
                }
            }
        }
    }

    /// One step of the recursive gain estimator,
    /// `lambda_t = lambda_{t-1} + P_t psi_t (u_t - scale(y_{t+1}) - lambda_{t-1}' psi_t)`
    /// with `P_t^{-1} = P_{t-1}^{-1} + psi_t psi_t'`.
    ///
    /// Does nothing until a protected `b1` estimate exists: updating `P`
    /// alone would act as zero-target pseudo-observations and bias `lambda`.
    /// `P` is recomputed from the accumulated information matrix by Cholesky
    /// rather than by the Sherman-Morrison downdate, which loses about two
    /// digits at the step where the information matrix first gains full rank.
    pub fn lambda_recursive_update(&mut self, psi: &DVector<f64>, u: f64, y_next: f64) {
        let Some(b1) = self.b1_tilde() else {
            return;
        };
        self.info_lambda += psi * psi.transpose();
        self.p_lambda = match self.info_lambda.clone().cholesky() {
            Some(chol) => linalg::symmetrize(chol.inverse()),
            None => linalg::rank_one_inverse_update(&self.p_lambda, psi).0,
        };
        let innovation = u - self.scaling.apply(y_next, b1) - self.lambda_rec.dot(psi);
        self.lambda_rec += &self.p_lambda * psi * innovation;
    }

    /// Full update for one closed-loop step, gain estimator first so it sees
    /// the `b1` estimate from the previous step.
    pub fn observe(&mut self, phi: &DVector<f64>, psi: &DVector<f64>, u: f64, y_next: f64, in_exploration: bool) {
        self.lambda_recursive_update(psi, u, y_next);
        self.rls_update(phi, y_next, in_exploration);
    }

    pub fn theta_full(&self) -> Option<&DVector<f64>> {
        self.full.estimate()
    }

    /// Raw exploration-only estimate (may have `b1 = 0`).
    pub fn theta_i(&self) -> Option<&DVector<f64>> {
        self.explore.estimate()
    }

    pub fn theta_i_tilde(&self) -> Option<&DVector<f64>> {
        self.theta_i_tilde.as_ref()
    }

    pub fn lambda_i_tilde(&self) -> Option<&MvGain> {
        self.lambda_i_tilde.as_ref()
    }

    pub fn b1_tilde(&self) -> Option<f64> {
        self.lambda_i_tilde.as_ref().map(|g| g.b1)
    }

    pub fn lambda_rec(&self) -> &DVector<f64> {
        &self.lambda_rec
    }

    pub fn p_lambda(&self) -> &DMatrix<f64> {
        &self.p_lambda
    }

    /// `P_t^{-1} = epsilon I + sum psi psi'` over the updates applied so far.
    pub fn info_lambda(&self) -> &DMatrix<f64> {
        &self.info_lambda
    }

    pub fn full(&self) -> &RecursiveLs {
        &self.full
    }

    pub fn exploration(&self) -> &RecursiveLs {
        &self.explore
    }

    pub fn n_explore(&self) -> usize {
        self.explore.count()
    }

    /// Minimum-variance gain implied by the full-sample estimate.
    pub fn full_gain(&self) -> Option<MvGain> {
        self.theta_full().and_then(|t| MvGain::from_theta(t.as_slice(), self.p).ok())
    }

    /// `||estimate - theta||^2`.
    pub fn estimation_error(&self, truth: &ArxParams, which: Which) -> Result<f64, EstimationError> {
        let est = match which {
            Which::Full => self.theta_full(),
            Which::Exploration => self.theta_i_tilde(),
        }
        .ok_or(EstimationError::Unavailable)?;
        Ok((est - truth.theta()).norm_squared())
    }

    #[cfg(test)]
    pub(crate) fn force_theta_i_tilde(&mut self, theta: DVector<f64>) {
        self.lambda_i_tilde = MvGain::from_theta(theta.as_slice(), self.p).ok();
        self.theta_i_tilde = Some(theta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arx::{plant_step, RegressorWindow};
    use crate::presets::Preset;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batch_identity() {
        let theta = lse_batch(&DMatrix::identity(3, 3), &DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(theta.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn batch_recovers_noiseless_parameters() {
        let truth = DVector::from_vec(vec![0.4, -1.3, 2.2, 0.05]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut gram = DMatrix::zeros(4, 4);
        let mut cross = DVector::zeros(4);
        for _ in 0..200 {
            let phi = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let y = phi.dot(&truth);
            gram += &phi * phi.transpose();
            cross += &phi * y;
        }
        let est = lse_batch(&gram, &cross).unwrap();
        assert!((est - truth).norm() < 1e-8);
    }

    #[test]
    fn batch_singular_on_repeated_regressor() {
        let phi = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let gram = (&phi * phi.transpose()) * 3.0;
        assert_eq!(lse_batch(&gram, &(&phi * 3.0)), Err(EstimationError::Singular));
    }

    /// Drives Example II with uniform probing inputs and no noise.
    fn noiseless_exploration(steps: usize, seed: u64) -> EstimatorState {
        let theta = Preset::Example2.params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut win = RegressorWindow::new(theta.p(), theta.q());
        let mut est = EstimatorState::new(theta.p(), theta.q(), InnovationScaling::Divide);
        for _ in 0..steps {
            let u = rng.gen_range(-1.0..1.0);
            let phi = win.phi(u);
            let psi = win.psi();
            let y = plant_step(&theta, &mut win, u, 0.0).unwrap();
            est.observe(&phi, &psi, u, y, true);
        }
        est
    }

    #[test]
    fn recursive_matches_batch_on_every_prefix() {
        let theta = Preset::Example2.params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut win = RegressorWindow::new(theta.p(), theta.q());
        let mut est = EstimatorState::new(theta.p(), theta.q(), InnovationScaling::Divide);
        for _ in 0..300 {
            let u = rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(-0.5..0.5);
            let phi = win.phi(u);
            let y = plant_step(&theta, &mut win, u, w).unwrap();
            est.rls_update(&phi, y, true);
            if let Some(rec) = est.theta_full() {
                let batch = lse_batch(est.full().gram(), est.full().cross()).unwrap();
                assert!((rec - &batch).norm() <= 1e-6 * batch.norm());
            }
        }
    }

    #[test]
    fn noiseless_identification() {
        let est = noiseless_exploration(50, 3);
        let truth = Preset::Example2.params().theta();
        assert!((est.theta_i().unwrap() - &truth).norm() <= 1e-8);
        assert_eq!(est.n_explore(), 50);
    }

    #[test]
    fn fallback_keeps_previous_estimate() {
        let mut est = EstimatorState::new(1, 1, InnovationScaling::Divide);
        est.force_theta_i_tilde(DVector::from_vec(vec![0.5, 2.0]));
        // y = 0.5 * y_prev + 0 * u makes the exploration LSE report b1 = 0 exactly
        est.rls_update(&DVector::from_vec(vec![1.0, 0.0]), 0.5, true);
        est.rls_update(&DVector::from_vec(vec![0.0, 1.0]), 0.0, true);
        assert_eq!(est.theta_i().unwrap()[1], 0.0);
        assert_eq!(est.theta_i_tilde().unwrap().as_slice(), &[0.5, 2.0]);
        assert_eq!(est.b1_tilde(), Some(2.0));
    }

    #[test]
    fn zero_innovation_leaves_gain() {
        let mut est = EstimatorState::new(1, 2, InnovationScaling::Divide);
        est.force_theta_i_tilde(DVector::from_vec(vec![0.5, 2.0, 0.1]));
        let before_p = est.p_lambda().clone();
        let psi = DVector::from_vec(vec![1.0, -1.0]);
        // lambda = 0, so innovation = u - y / b1 = 0 when y = 2 u
        est.lambda_recursive_update(&psi, 0.7, 1.4);
        assert_eq!(est.lambda_rec().as_slice(), &[0.0, 0.0]);
        assert!(est.p_lambda() != &before_p);
    }

    #[test]
    fn gain_estimator_consistent_without_noise() {
        let est = noiseless_exploration(500, 9);
        let truth = Preset::Example2.params().mv_gain();
        assert!((est.lambda_rec() - &truth.lambda).norm() <= 1e-3, "{}", est.lambda_rec());
    }

    #[test]
    fn multiply_scaling_is_inconsistent_when_b1_is_not_unit() {
        let theta = Preset::Example2.params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut win = RegressorWindow::new(theta.p(), theta.q());
        let mut est = EstimatorState::new(theta.p(), theta.q(), InnovationScaling::Multiply);
        for _ in 0..500 {
            let u = rng.gen_range(-1.0..1.0);
            let phi = win.phi(u);
            let psi = win.psi();
            let y = plant_step(&theta, &mut win, u, 0.0).unwrap();
            est.observe(&phi, &psi, u, y, true);
        }
        assert!((est.lambda_rec() - theta.mv_gain().lambda).norm() > 1e-1);
    }

    #[test]
    fn information_matrix_consistency() {
        let eps = DEFAULT_LAMBDA_EPSILON;
        let mut est = EstimatorState::new(2, 3, InnovationScaling::Divide);
        est.force_theta_i_tilde(DVector::from_vec(vec![0.1, 0.2, 1.0, 0.3, 0.1]));
        let mut info = DMatrix::identity(4, 4) * eps;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let psi = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
            est.lambda_recursive_update(&psi, 0.0, 0.0);
            info += &psi * psi.transpose();
            let residual = est.p_lambda() * &info - DMatrix::identity(4, 4);
            assert!(residual.amax() <= 1e-8, "{}", residual.amax());
            assert!((est.info_lambda() - &info).amax() <= 1e-10 * info.amax());
        }
    }

    #[test]
    fn gain_estimator_waits_for_b1() {
        let mut est = EstimatorState::new(1, 2, InnovationScaling::Divide);
        est.lambda_recursive_update(&DVector::from_vec(vec![1.0, 2.0]), 1.0, 3.0);
        assert_eq!(est.info_lambda(), &(DMatrix::identity(2, 2) * DEFAULT_LAMBDA_EPSILON));
        assert_eq!(est.lambda_rec().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn estimation_error_values() {
        let truth = Preset::Example2.params();
        let mut est = EstimatorState::new(2, 3, InnovationScaling::Divide);
        assert_eq!(est.estimation_error(&truth, Which::Exploration), Err(EstimationError::Unavailable));
        est.force_theta_i_tilde(truth.theta());
        assert_eq!(est.estimation_error(&truth, Which::Exploration), Ok(0.0));
        let mut shifted = truth.theta();
        shifted[0] += 1.0;
        est.force_theta_i_tilde(shifted);
        assert_relative_eq!(est.estimation_error(&truth, Which::Exploration).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exploration_excitation_is_monotone() {
        let theta = Preset::Example2.params();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut win = RegressorWindow::new(theta.p(), theta.q());
        let mut est = EstimatorState::new(theta.p(), theta.q(), InnovationScaling::Divide);
        let mut last = 0.0;
        for t in 0..200 {
            let u = rng.gen_range(-1.0..1.0);
            let phi = win.phi(u);
            let psi = win.psi();
            let y = plant_step(&theta, &mut win, u, rng.gen_range(-0.3..0.3)).unwrap();
            est.observe(&phi, &psi, u, y, t % 3 != 0);
            let now = est.exploration().min_eigenvalue();
            assert!(now >= last - 1e-9 * (1.0 + last));
            last = now;
        }
    }
}
