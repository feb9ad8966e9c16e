//! ARX plant model: parameter algebra, companion-matrix stability analysis
//! and the regressor bookkeeping shared by every controller.
//!
//! The plant is
//!
//! ```text
//! y_{t+1} = a_1 y_t + ... + a_p y_{t-p+1} + b_1 u_t + ... + b_q u_{t-q+1} + w_{t+1}
//! ```
//!
//! which can be rewritten as `y_{t+1} = b_1 (u_t - lambda' psi_t) + w_{t+1}`,
//! where `psi_t` drops the current input from the regressor and `lambda` is the
//! minimum-variance gain.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Number of matrix powers inspected when estimating the decay constant.
pub const DEFAULT_N_CHECK: usize = 500;
/// Relative inflation of the spectral radius used as the decay rate.
pub const DEFAULT_RHO_MARGIN: f64 = 0.01;
/// Decay rate used when both companion matrices are nilpotent.
pub const MIN_RHO: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArxError {
    #[error("plant orders must be positive (p = {p}, q = {q})")]
    EmptyOrder { p: usize, q: usize },
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("leading input coefficient b1 is zero")]
    DivisorZero,
    #[error("{which} companion matrix has spectral radius {radius} >= 1")]
    Unstable { which: Companion, radius: f64 },
    #[error("inflated decay rate {rho} is not below 1")]
    MarginOverflow { rho: f64 },
    #[error("plant output became non-finite at step {step}")]
    NonFinite { step: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Companion {
    /// Output polynomial (open-loop stability).
    A,
    /// Input polynomial (minimum phase).
    B,
}

impl std::fmt::Display for Companion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Companion::A => f.write_str("output (A)"),
            Companion::B => f.write_str("input (B)"),
        }
    }
}

/// Plant coefficients `theta = (a_1..a_p, b_1..b_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArxParams {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ArxParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ArxError> {
        if a.is_empty() || b.is_empty() {
            return Err(ArxError::EmptyOrder { p: a.len(), q: b.len() });
        }
        if let Some(index) = a.iter().chain(b.iter()).position(|c| !c.is_finite()) {
            return Err(ArxError::NonFiniteCoefficient { index });
        }
        if b[0] == 0.0 {
            return Err(ArxError::DivisorZero);
        }
        Ok(Self { a, b })
    }

    /// Splits a stacked parameter vector of length `p + q`.
    pub fn from_theta(theta: &[f64], p: usize) -> Result<Self, ArxError> {
        if p == 0 || theta.len() <= p {
            return Err(ArxError::EmptyOrder { p, q: theta.len().saturating_sub(p) });
        }
        Self::new(theta[..p].to_vec(), theta[p..].to_vec())
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.q()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b1(&self) -> f64 {
        self.b[0]
    }

    pub fn theta(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.a.iter().chain(self.b.iter()).copied())
    }

    pub fn sum_abs_a(&self) -> f64 {
        self.a.iter().map(|x| x.abs()).sum()
    }

    pub fn sum_abs_b(&self) -> f64 {
        self.b.iter().map(|x| x.abs()).sum()
    }

    pub fn mv_gain(&self) -> MvGain {
        MvGain::from_theta(self.theta().as_slice(), self.p()).expect("b1 != 0 by construction")
    }

    /// Companion matrices `(A, B)`. `A` is `p x p` with first row `a`; `B` is
    /// `(q-1) x (q-1)` with first row `-b_l / b_1`, empty when `q = 1`.
    pub fn companion_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let b1 = self.b1();
        let normalized: Vec<f64> = self.b[1..].iter().map(|bl| -bl / b1).collect();
        (companion(&self.a), companion(&normalized))
    }

    /// Open-loop stability and minimum phase.
    pub fn check_assumptions(&self) -> Result<(), ArxError> {
        let (a, b) = self.companion_matrices();
        let ra = linalg::spectral_radius(&a);
        if ra >= 1.0 {
            return Err(ArxError::Unstable { which: Companion::A, radius: ra });
        }
        let rb = linalg::spectral_radius(&b);
        if rb >= 1.0 {
            return Err(ArxError::Unstable { which: Companion::B, radius: rb });
        }
        Ok(())
    }

    /// Decay pair `(rho, C1)` and the bound constant `M`.
    ///
    /// `rho` is the larger spectral radius inflated by `margin`; `C1` is the
    /// worst ratio `||M^n|| / rho^n` over `n <= n_check` for both companion
    /// matrices, floored at 1.
    pub fn spectral_profile(&self, margin: f64, n_check: usize) -> Result<SpectralProfile, ArxError> {
        let (a, b) = self.companion_matrices();
        let spec_radius_a = linalg::spectral_radius(&a);
        let spec_radius_b = linalg::spectral_radius(&b);
        if spec_radius_a >= 1.0 {
            return Err(ArxError::Unstable { which: Companion::A, radius: spec_radius_a });
        }
        if spec_radius_b >= 1.0 {
            return Err(ArxError::Unstable { which: Companion::B, radius: spec_radius_b });
        }
        let radius = spec_radius_a.max(spec_radius_b);
        let rho = if radius > 0.0 { radius * (1.0 + margin) } else { MIN_RHO };
        if rho >= 1.0 {
            return Err(ArxError::MarginOverflow { rho });
        }
        let c1 = decay_constant(&a, rho, n_check).max(decay_constant(&b, rho, n_check)).max(1.0);
        let m_theta = c1 / (1.0 - rho) * (1.0 + self.sum_abs_b());
        Ok(SpectralProfile { rho, c1, spec_radius_a, spec_radius_b, m_theta })
    }
}

fn companion(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            first_row[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// `max_{1<=n<=n_check} ||(M / rho)^n||`, computed on the scaled matrix so the
/// powers never under- or overflow through `rho^n`.
fn decay_constant(m: &DMatrix<f64>, rho: f64, n_check: usize) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let scaled = m / rho;
    let mut power = scaled.clone();
    let mut worst = 0.0_f64;
    for _ in 0..n_check {
        worst = worst.max(linalg::operator_norm(&power));
        power = &power * &scaled;
    }
    worst
}

/// Minimum-variance gain `lambda = -(1/b_1)(a_1..a_p, b_2..b_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvGain {
    pub lambda: DVector<f64>,
    pub b1: f64,
}

impl MvGain {
    pub fn from_theta(theta: &[f64], p: usize) -> Result<Self, ArxError> {
        if theta.len() <= p {
            return Err(ArxError::Dimension { expected: p + 1, got: theta.len() });
        }
        let b1 = theta[p];
        if b1 == 0.0 {
            return Err(ArxError::DivisorZero);
        }
        let lambda =
            DVector::from_iterator(theta.len() - 1, theta[..p].iter().chain(theta[p + 1..].iter()).map(|c| -c / b1));
        Ok(Self { lambda, b1 })
    }

    pub fn norm(&self) -> f64 {
        self.lambda.norm()
    }

    /// Predicted minimum-variance input `lambda' psi`.
    pub fn input(&self, psi: &DVector<f64>) -> f64 {
        self.lambda.dot(psi)
    }

    /// Inverse map back to `(a_1..a_p, b_1..b_q)`.
    pub fn reconstruct(&self, p: usize) -> Vec<f64> {
        let scaled: Vec<f64> = self.lambda.iter().map(|l| -l * self.b1).collect();
        let mut theta = scaled[..p].to_vec();
        theta.push(self.b1);
        theta.extend_from_slice(&scaled[p..]);
        theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralProfile {
    pub rho: f64,
    pub c1: f64,
    pub spec_radius_a: f64,
    pub spec_radius_b: f64,
    /// `C1 / (1 - rho) * (1 + sum |b_l|)`.
    pub m_theta: f64,
}

impl SpectralProfile {
    pub fn spectral_radius(&self) -> f64 {
        self.spec_radius_a.max(self.spec_radius_b)
    }
}

/// Sliding record of recent outputs and inputs.
///
/// Between steps the window holds `Y_t = (y_t..y_{t-p+1})` and the past inputs
/// `(u_{t-1}..u_{t-q+1})`; the current input `u_t` is supplied when forming
/// `phi_t` and pushed by [`RegressorWindow::advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorWindow {
    outputs: Vec<f64>,
    past_inputs: Vec<f64>,
}

impl RegressorWindow {
    /// Zero initial condition.
    pub fn new(p: usize, q: usize) -> Self {
        Self { outputs: vec![0.0; p], past_inputs: vec![0.0; q.saturating_sub(1)] }
    }

    /// `outputs` newest first (`y_t, y_{t-1}, ...`), `past_inputs` newest
    /// first (`u_{t-1}, u_{t-2}, ...`).
    pub fn from_history(outputs: Vec<f64>, past_inputs: Vec<f64>) -> Self {
        Self { outputs, past_inputs }
    }

    pub fn p(&self) -> usize {
        self.outputs.len()
    }

    pub fn q(&self) -> usize {
        self.past_inputs.len() + 1
    }

    /// `Y_t`.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// `(u_{t-1}, ..., u_{t-q+1})`.
    pub fn past_inputs(&self) -> &[f64] {
        &self.past_inputs
    }

    pub fn latest_output(&self) -> f64 {
        self.outputs[0]
    }

    pub fn state_norm(&self) -> f64 {
        self.outputs.iter().map(|y| y * y).sum::<f64>().sqrt()
    }

    /// `psi_t = (y_t..y_{t-p+1}, u_{t-1}..u_{t-q+1})`.
    pub fn psi(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.outputs.len() + self.past_inputs.len(),
            self.outputs.iter().chain(self.past_inputs.iter()).copied(),
        )
    }

    /// `phi_t = (y_t..y_{t-p+1}, u_t, u_{t-1}..u_{t-q+1})`.
    pub fn phi(&self, u: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.outputs.len() + self.past_inputs.len() + 1,
            self.outputs.iter().copied().chain(std::iter::once(u)).chain(self.past_inputs.iter().copied()),
        )
    }

    /// Shifts in the applied input `u_t` and the new output `y_{t+1}`.
    pub fn advance(&mut self, u: f64, y_next: f64) {
        self.outputs.rotate_right(1);
        self.outputs[0] = y_next;
        if !self.past_inputs.is_empty() {
            self.past_inputs.rotate_right(1);
            self.past_inputs[0] = u;
        }
    }
}

/// One step of the plant: returns `y_{t+1} = phi_t' theta + w_{t+1}` and
/// advances the window. A non-finite output leaves the window untouched.
pub fn plant_step(theta: &ArxParams, window: &mut RegressorWindow, u: f64, w: f64) -> Result<f64, ArxError> {
    let noiseless = noiseless_output(theta, window, u);
    let y = noiseless + w;
    if !y.is_finite() {
        return Err(ArxError::NonFinite { step: 0 });
    }
    window.advance(u, y);
    Ok(y)
}

/// `phi_t' theta`, the predictable part of the next output.
pub fn noiseless_output(theta: &ArxParams, window: &RegressorWindow, u: f64) -> f64 {
    let ar: f64 = theta.a().iter().zip(window.outputs()).map(|(a, y)| a * y).sum();
    let exo: f64 = theta.b()[1..].iter().zip(window.past_inputs()).map(|(b, u)| b * u).sum();
    ar + theta.b1() * u + exo
}

/// `r = b_1^2 (u - lambda' psi)^2`, the excess output energy caused by
/// applying `u` instead of the minimum-variance input.
pub fn instantaneous_regret(gain: &MvGain, psi: &DVector<f64>, u: f64) -> f64 {
    let gap = u - gain.input(psi);
    gain.b1 * gain.b1 * gap * gap
}
