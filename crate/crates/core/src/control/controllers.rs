//! Closed-loop input laws: PIECE, the Lai-Wei probing baseline, certainty
//! equivalence and the minimum-variance oracle.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arx::{ArxParams, MvGain};
use crate::estimation::{EstimatorState, RecursiveLs, Which};
use crate::noise::ExplorationInput;

use super::hyper::HyperParams;
use super::schedule::{ExplorationSchedule, LAI_WEI_DELTA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Piece,
    Lw,
    Ce,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Piece, Algorithm::Lw, Algorithm::Ce, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Piece => "piece",
            Algorithm::Lw => "lw",
            Algorithm::Ce => "ce",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Which law produced an input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Explore,
    /// Recursive gain estimate passed the diagnostic test.
    ExploitLambdaRec,
    /// Fell back to the exploration-only gain.
    ExploitLambdaTilde,
    /// Certainty equivalence on the full-sample estimate.
    ExploitFull,
    Oracle,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Explore => "explore",
            Mode::ExploitLambdaRec => "exploit_rec",
            Mode::ExploitLambdaTilde => "exploit_tilde",
            Mode::ExploitFull => "exploit_full",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerDecision {
    pub u: f64,
    /// Unclipped exploitation input, absent while exploring.
    pub raw_z: Option<f64>,
    pub mode: Mode,
    pub clipped: bool,
}

impl ControllerDecision {
    fn explore(u: f64) -> Self {
        Self { u, raw_z: None, mode: Mode::Explore, clipped: false }
    }
}

pub trait Controller: Send {
    fn algorithm(&self) -> Algorithm;

    /// Input `u_t` given the regressor `psi_t`.
    fn decide(&mut self, t: usize, psi: &DVector<f64>) -> ControllerDecision;

    /// Learns from `(phi_t, psi_t, u_t, y_{t+1})`.
    fn observe(&mut self, t: usize, phi: &DVector<f64>, psi: &DVector<f64>, decision: &ControllerDecision, y_next: f64);

    fn n_explore(&self) -> usize {
        0
    }

    /// `||theta_hat - theta||^2` for the estimate the controller acts on.
    fn estimation_error(&self, _truth: &ArxParams) -> Option<f64> {
        None
    }

    /// Smallest eigenvalue of the exploration-only Gram matrix.
    fn lambda_min_exploration(&self) -> Option<f64> {
        None
    }

    fn schedule(&self) -> Option<&ExplorationSchedule> {
        None
    }
}

/// Diagnostic switch followed by clipping: keep `lambda_rec' psi` when it is
/// within `B2 log(N)/sqrt(N) ||psi||` of `lambda_tilde' psi`, then clamp to
/// `[-B_u, B_u]`.
pub fn exploit_decision(
    lambda_rec: &DVector<f64>,
    lambda_tilde: &MvGain,
    psi: &DVector<f64>,
    n_explore: usize,
    b2: f64,
    b_u: f64,
) -> ControllerDecision {
    let n = n_explore.max(2) as f64;
    let z_rec = lambda_rec.dot(psi);
    let z_tilde = lambda_tilde.input(psi);
    let threshold = b2 * n.ln() / n.sqrt() * psi.norm();
    let (z, mode) = if (z_rec - z_tilde).abs() <= threshold {
        (z_rec, Mode::ExploitLambdaRec)
    } else {
        (z_tilde, Mode::ExploitLambdaTilde)
    };
    let u = z.clamp(-b_u, b_u);
    ControllerDecision { u, raw_z: Some(z), mode, clipped: u != z }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationBound {
    Fixed(f64),
    /// `B_w max(1, log log t)`.
    LogLog(f64),
}

impl ExplorationBound {
    pub fn at(self, t: usize) -> f64 {
        match self {
            ExplorationBound::Fixed(b) => b,
            ExplorationBound::LogLog(b) => b * (t as f64).ln().ln().max(1.0),
        }
    }
}

/// Episodic explore/exploit controller shared by PIECE and Lai-Wei.
#[derive(Debug, Clone)]
pub struct ProbingController {
    algorithm: Algorithm,
    schedule: ExplorationSchedule,
    est: EstimatorState,
    explorer: ExplorationInput,
    bound: ExplorationBound,
    h1: usize,
    b2: f64,
    b_u: f64,
    /// Cached, since `V_I` only changes on exploration steps.
    lambda_min_i: f64,
}

impl ProbingController {
    pub fn piece(p: usize, q: usize, hp: &HyperParams, explorer: ExplorationInput) -> Self {
        Self {
            algorithm: Algorithm::Piece,
            schedule: ExplorationSchedule::piece(hp.h, hp.unbounded_mode, hp.horizon),
            est: EstimatorState::new(p, q, hp.lambda_scaling),
            explorer,
            bound: ExplorationBound::Fixed(hp.b_w),
            h1: hp.h1,
            b2: hp.b2,
            b_u: hp.b_u,
            lambda_min_i: 0.0,
        }
    }

    pub fn lai_wei(p: usize, q: usize, hp: &HyperParams, explorer: ExplorationInput) -> Self {
        Self {
            algorithm: Algorithm::Lw,
            schedule: ExplorationSchedule::lai_wei(LAI_WEI_DELTA, hp.horizon),
            est: EstimatorState::new(p, q, hp.lambda_scaling),
            explorer,
            bound: ExplorationBound::LogLog(hp.b_w),
            h1: 1,
            b2: hp.b2,
            b_u: hp.b_u,
            lambda_min_i: 0.0,
        }
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.est
    }

    fn warmup_done(&self, t: usize) -> bool {
        let p = self.est.p();
        t >= self.h1 && self.est.full().is_invertible() && self.est.theta_i().is_some_and(|theta| theta[p] != 0.0)
    }
}

impl Controller for ProbingController {
    fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    fn decide(&mut self, t: usize, psi: &DVector<f64>) -> ControllerDecision {
        if !self.schedule.is_exploration(t) {
            if let Some(tilde) = self.est.lambda_i_tilde() {
                return exploit_decision(self.est.lambda_rec(), tilde, psi, self.est.n_explore(), self.b2, self.b_u);
            }
        }
        ControllerDecision::explore(self.explorer.sample(self.bound.at(t)))
    }

    fn observe(
        &mut self,
        t: usize,
        phi: &DVector<f64>,
        psi: &DVector<f64>,
        decision: &ControllerDecision,
        y_next: f64,
    ) {
        let explored = decision.mode == Mode::Explore;
        self.est.observe(phi, psi, decision.u, y_next, explored);
        if explored {
            self.lambda_min_i = self.est.exploration().min_eigenvalue();
        }
        if self.schedule.warmup_open() && self.warmup_done(t) {
            self.schedule.close_warmup(t);
        }
    }

    fn n_explore(&self) -> usize {
        self.est.n_explore()
    }

    fn estimation_error(&self, truth: &ArxParams) -> Option<f64> {
        self.est.estimation_error(truth, Which::Exploration).ok()
    }

    fn lambda_min_exploration(&self) -> Option<f64> {
        Some(self.lambda_min_i)
    }

    fn schedule(&self) -> Option<&ExplorationSchedule> {
        Some(&self.schedule)
    }
}

/// Unit-scale probing amplitude used by certainty equivalence before its
/// estimate exists.
pub const CE_EXPLORATION_SCALE: f64 = 1.0;

/// Certainty equivalence: white noise until the full-sample estimate exists
/// with `b1 != 0`, then the unclipped input `lambda_hat' psi`.
#[derive(Debug, Clone)]
pub struct CertaintyEquivalence {
    p: usize,
    ls: RecursiveLs,
    explorer: ExplorationInput,
    gain: Option<MvGain>,
    n_explore: usize,
}

impl CertaintyEquivalence {
    pub fn new(p: usize, q: usize, explorer: ExplorationInput) -> Self {
        Self { p, ls: RecursiveLs::new(p + q), explorer, gain: None, n_explore: 0 }
    }
}

impl Controller for CertaintyEquivalence {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ce
    }

    fn decide(&mut self, _t: usize, psi: &DVector<f64>) -> ControllerDecision {
        match &self.gain {
            Some(gain) => {
                let z = gain.input(psi);
                ControllerDecision { u: z, raw_z: Some(z), mode: Mode::ExploitFull, clipped: false }
            }
            None => ControllerDecision::explore(self.explorer.sample(CE_EXPLORATION_SCALE)),
        }
    }

    fn observe(
        &mut self,
        _t: usize,
        phi: &DVector<f64>,
        _psi: &DVector<f64>,
        decision: &ControllerDecision,
        y_next: f64,
    ) {
        if decision.mode == Mode::Explore {
            self.n_explore += 1;
        }
        self.ls.push(phi, y_next);
        if let Some(theta) = self.ls.estimate() {
            // a zero b1 estimate keeps the previous gain
            if let Ok(g) = MvGain::from_theta(theta.as_slice(), self.p) {
                self.gain = Some(g);
            }
        }
    }

    fn n_explore(&self) -> usize {
        self.n_explore
    }

    fn estimation_error(&self, truth: &ArxParams) -> Option<f64> {
        self.ls.estimate().map(|theta| (theta - truth.theta()).norm_squared())
    }
}

/// Applies the true minimum-variance input; its regret is identically zero.
#[derive(Debug, Clone)]
pub struct Oracle {
    gain: MvGain,
}

impl Oracle {
    pub fn new(truth: &ArxParams) -> Self {
        Self { gain: truth.mv_gain() }
    }
}

impl Controller for Oracle {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Oracle
    }

    fn decide(&mut self, _t: usize, psi: &DVector<f64>) -> ControllerDecision {
        let z = self.gain.input(psi);
        ControllerDecision { u: z, raw_z: Some(z), mode: Mode::Oracle, clipped: false }
    }

    fn observe(&mut self, _t: usize, _phi: &DVector<f64>, _psi: &DVector<f64>, _d: &ControllerDecision, _y: f64) {}
}

/// Builds a controller for a plant of known order.
pub fn build_controller(
    algorithm: Algorithm,
    truth: &ArxParams,
    hp: &HyperParams,
    explorer: ExplorationInput,
) -> Box<dyn Controller> {
    let (p, q) = (truth.p(), truth.q());
    match algorithm {
        Algorithm::Piece => Box::new(ProbingController::piece(p, q, hp, explorer)),
        Algorithm::Lw => Box::new(ProbingController::lai_wei(p, q, hp, explorer)),
        Algorithm::Ce => Box::new(CertaintyEquivalence::new(p, q, explorer)),
        Algorithm::Oracle => Box::new(Oracle::new(truth)),
    }
}
