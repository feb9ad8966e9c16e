//! Hyper-parameters of the probing controllers: the clipping threshold
//! `B_u`, the stability slack `delta1`, the episode length `H` and the
//! warm-up length `H1`, all derived from a prior parameter set `Theta`.

use serde::{Deserialize, Serialize};

use crate::arx::{ArxError, ArxParams, SpectralProfile, DEFAULT_N_CHECK, DEFAULT_RHO_MARGIN};
use crate::estimation::InnovationScaling;
use crate::noise::{ExplorationDistribution, NoiseModel};

use super::ControlError;

/// Default diagnostic-switch scale.
pub const DEFAULT_B2: f64 = 1.0;
/// Default confidence level for the sub-Gaussian noise proxy.
pub const DEFAULT_DELTA_CONF: f64 = 0.05;
const BISECTION_TOL: f64 = 1e-12;

/// How the decay pair `(rho, C1)` is obtained for each member of `Theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRule {
    pub rho_margin: f64,
    pub n_check: usize,
    /// Replaces the empirical `C1` when set.
    pub c1: Option<f64>,
}

impl Default for ConstantsRule {
    fn default() -> Self {
        Self { rho_margin: DEFAULT_RHO_MARGIN, n_check: DEFAULT_N_CHECK, c1: None }
    }
}

impl ConstantsRule {
    pub fn profile(&self, theta: &ArxParams) -> Result<SpectralProfile, ArxError> {
        let mut prof = theta.spectral_profile(self.rho_margin, self.n_check)?;
        if let Some(c1) = self.c1 {
            prof.c1 = c1;
            prof.m_theta = c1 / (1.0 - prof.rho) * (1.0 + theta.sum_abs_b());
        }
        Ok(prof)
    }
}

/// Prior knowledge of where the plant lives.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSet {
    Singleton(ArxParams),
    /// Axis-aligned box sampled on a regular grid with `points` values per
    /// non-degenerate axis.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        p: usize,
        points: usize,
    },
}

/// Upper limit on the number of grid members a box may expand to.
pub const MAX_GRID_MEMBERS: usize = 100_000;

impl ThetaSet {
    pub fn members(&self) -> Result<Vec<ArxParams>, ControlError> {
        match self {
            ThetaSet::Singleton(theta) => Ok(vec![theta.clone()]),
            ThetaSet::Box { lower, upper, p, points } => {
                if lower.len() != upper.len() || lower.len() <= *p {
                    return Err(ControlError::InvalidThetaSet("box bounds must have length p + q".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(ControlError::InvalidThetaSet("box lower bound exceeds upper bound".into()));
                }
                let axes: Vec<Vec<f64>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| {
                        if l == u || *points < 2 {
                            vec![0.5 * (l + u)]
                        } else {
                            (0..*points).map(|k| l + (u - l) * k as f64 / (*points - 1) as f64).collect()
                        }
                    })
                    .collect();
                let count = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
                match count {
                    Some(c) if c <= MAX_GRID_MEMBERS => {}
                    _ => return Err(ControlError::InvalidThetaSet("box grid is too large".into())),
                }
                let mut out = vec![Vec::with_capacity(axes.len())];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            axis.iter().map(move |v| {
                                let mut next = prefix.clone();
                                next.push(*v);
                                next
                            })
                        })
                        .collect();
                }
                out.into_iter().map(|theta| ArxParams::from_theta(&theta, *p).map_err(ControlError::from)).collect()
            }
        }
    }

    pub fn summary(&self, rule: &ConstantsRule) -> Result<ThetaSummary, ControlError> {
        let members = self.members()?;
        let mut entries = Vec::with_capacity(members.len());
        for theta in &members {
            entries.push(MemberConstants {
                profile: rule.profile(theta)?,
                sum_abs_b: theta.sum_abs_b(),
                sum_abs_a: theta.sum_abs_a(),
                b1: theta.b1(),
                mv_norm: theta.mv_gain().norm(),
            });
        }
        ThetaSummary::from_members(entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberConstants {
    pub profile: SpectralProfile,
    pub sum_abs_b: f64,
    pub sum_abs_a: f64,
    pub b1: f64,
    pub mv_norm: f64,
}

/// Sups and infs over `Theta` that enter the hyper-parameter formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSummary {
    pub sup_norm_lambda: f64,
    pub m_theta: f64,
    pub sup_sum_abs_a: f64,
    /// `inf |b1| (1 - rho) / C1`.
    pub inf_b1_scale: f64,
    pub sup_rho: f64,
    pub sup_c1: f64,
    pub members: Vec<MemberConstants>,
}

impl ThetaSummary {
    pub fn from_members(members: Vec<MemberConstants>) -> Result<Self, ControlError> {
        if members.is_empty() {
            return Err(ControlError::InvalidThetaSet("empty parameter set".into()));
        }
        let fold_max = |f: &dyn Fn(&MemberConstants) -> f64| members.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let fold_min = |f: &dyn Fn(&MemberConstants) -> f64| members.iter().map(f).fold(f64::INFINITY, f64::min);
        Ok(Self {
            sup_norm_lambda: fold_max(&|m| m.mv_norm),
            m_theta: fold_max(&|m| m.profile.m_theta),
            sup_sum_abs_a: fold_max(&|m| m.sum_abs_a),
            inf_b1_scale: fold_min(&|m| m.b1.abs() * (1.0 - m.profile.rho) / m.profile.c1),
            sup_rho: fold_max(&|m| m.profile.rho),
            sup_c1: fold_max(&|m| m.profile.c1),
            members,
        })
    }

    /// Summary with no member data, for evaluating the `delta1` inequalities
    /// on hand-picked quantities.
    pub fn bare(sup_norm_lambda: f64, m_theta: f64, sup_sum_abs_a: f64, inf_b1_scale: f64) -> Self {
        Self {
            sup_norm_lambda,
            m_theta,
            sup_sum_abs_a,
            inf_b1_scale,
            sup_rho: f64::NAN,
            sup_c1: f64::NAN,
            members: Vec::new(),
        }
    }
}

/// The three constraints on `delta1` and the value chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta1Solution {
    pub delta1: f64,
    /// `1 / ((p + q)(1 + sup ||lambda||))`.
    pub order_bound: f64,
    /// `1 / ((sup ||lambda|| + 1)(M + q))`.
    pub gain_bound: f64,
    /// Fixed point of `delta = (kappa / 3) [delta^2 / (2 B_w M) + sup sum |a|]^{-1}`.
    pub decay_bound: f64,
}

/// Evaluates the three `delta1` inequalities by substitution.
pub fn delta1_inequalities(s: &ThetaSummary, b_w: f64, p: usize, q: usize, delta1: f64) -> [bool; 3] {
    let slack = 1e-12 * delta1.abs().max(1e-300);
    let order = delta1 <= 1.0 / ((p + q) as f64 * (1.0 + s.sup_norm_lambda)) + slack;
    let rhs = s.inf_b1_scale / 3.0 / (delta1 * delta1 / (2.0 * b_w * s.m_theta) + s.sup_sum_abs_a);
    let decay = delta1 <= rhs + slack;
    let gain = (s.sup_norm_lambda + 1.0) * (s.m_theta + q as f64) * delta1 <= 1.0 + 1e-12;
    [order, decay, gain]
}

/// Largest `delta1` satisfying all three inequalities.
pub fn solve_delta1(s: &ThetaSummary, b_w: f64, p: usize, q: usize) -> Result<Delta1Solution, ControlError> {
    let finite_positive = |x: f64| x.is_finite() && x > 0.0;
    if !(finite_positive(s.m_theta) && finite_positive(s.inf_b1_scale) && finite_positive(b_w)) {
        return Err(ControlError::InvalidSummary(format!(
            "M = {}, inf b1(1-rho)/C1 = {}, B_w = {} must be finite and positive",
            s.m_theta, s.inf_b1_scale, b_w
        )));
    }
    if !(s.sup_norm_lambda.is_finite()
        && s.sup_norm_lambda >= 0.0
        && s.sup_sum_abs_a.is_finite()
        && s.sup_sum_abs_a >= 0.0)
    {
        return Err(ControlError::InvalidSummary("sup ||lambda|| and sup sum |a| must be finite".into()));
    }
    let order_bound = 1.0 / ((p + q) as f64 * (1.0 + s.sup_norm_lambda));
    let gain_bound = 1.0 / ((s.sup_norm_lambda + 1.0) * (s.m_theta + q as f64));

    // g(d) = d (d^2 / (2 B_w M) + S_a) - kappa / 3 is strictly increasing on
    // d > 0 with g(0) < 0, so its root is the largest admissible d.
    let target = s.inf_b1_scale / 3.0;
    let g = |d: f64| d * (d * d / (2.0 * b_w * s.m_theta) + s.sup_sum_abs_a) - target;
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut expansions = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(ControlError::NoSolution);
        }
    }
    while hi - lo > BISECTION_TOL * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    if lo <= 0.0 && g(hi) > 0.0 && hi <= f64::MIN_POSITIVE {
        return Err(ControlError::NoSolution);
    }
    let decay_bound = lo;
    let delta1 = order_bound.min(gain_bound).min(decay_bound);
    if !(delta1 > 0.0) {
        return Err(ControlError::NoSolution);
    }
    let checks = delta1_inequalities(s, b_w, p, q, delta1);
    assert!(checks.iter().all(|ok| *ok), "delta1 = {delta1} violates {checks:?}");
    Ok(Delta1Solution { delta1, order_bound, gain_bound, decay_bound })
}

/// `B_u = (B_w / delta1^2)(1 + M)`.
pub fn compute_bu(b_w: f64, delta1: f64, m_theta: f64) -> f64 {
    b_w / (delta1 * delta1) * (1.0 + m_theta)
}

/// `(m_star, H)`: the settling time after which a probing episode forgets
/// its initial state, and the resulting episode length.
pub fn compute_episode_constants(s: &ThetaSummary, b_w: f64, b_u: f64, y0_norm: f64, q: usize) -> (usize, usize) {
    let denom = s
        .members
        .iter()
        .map(|m| {
            let c1 = m.profile.c1;
            c1 * (c1 * y0_norm + b_u * c1 / (1.0 - m.profile.rho) * (1.0 + m.sum_abs_b))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let log_rho = s.sup_rho.ln();
    let m_star = ((b_w / denom).ln() / log_rho).ceil().max(0.0);
    let h = (m_star + (1.0 / (3.0 * s.sup_c1 * q as f64)).ln() / log_rho).ceil().max(1.0);
    (m_star as usize, h as usize)
}

/// Warm-up length target `ceil(||lambda||^3)` unless overridden.
pub fn first_episode_target(mv_norm: f64, h1_override: Option<usize>) -> usize {
    h1_override.unwrap_or_else(|| (mv_norm.powi(3).ceil() as usize).max(1))
}

/// Knobs that feed [`solve_hyperparams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(alias = "B2")]
    pub b2: f64,
    pub delta1: Option<f64>,
    #[serde(alias = "H1")]
    pub h1: Option<usize>,
    pub exploration: ExplorationDistribution,
    pub lambda_scaling: InnovationScaling,
    pub unbounded_mode: bool,
    pub delta_conf: f64,
    pub rho_margin: f64,
    pub n_check: usize,
    pub c1: Option<f64>,
    pub y0_norm: f64,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            b2: DEFAULT_B2,
            delta1: None,
            h1: None,
            exploration: ExplorationDistribution::Uniform,
            lambda_scaling: InnovationScaling::Divide,
            unbounded_mode: false,
            delta_conf: DEFAULT_DELTA_CONF,
            rho_margin: DEFAULT_RHO_MARGIN,
            n_check: DEFAULT_N_CHECK,
            c1: None,
            y0_norm: 0.0,
        }
    }
}

impl HyperConfig {
    pub fn constants_rule(&self) -> ConstantsRule {
        ConstantsRule { rho_margin: self.rho_margin, n_check: self.n_check, c1: self.c1 }
    }
}

/// Solved hyper-parameters, shared by PIECE and the Lai-Wei baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub b_w: f64,
    pub b_u: f64,
    pub b2: f64,
    pub delta1: f64,
    pub m_star: usize,
    pub h: usize,
    pub h1: usize,
    /// Standard deviation of one probing input.
    pub sigma_e: f64,
    pub unbounded_mode: bool,
    pub horizon: usize,
    pub delta_conf: f64,
    pub exploration: ExplorationDistribution,
    pub lambda_scaling: InnovationScaling,
    pub rho: f64,
    pub c1: f64,
    pub m_theta: f64,
    pub sup_norm_lambda: f64,
    pub y0_norm: f64,
}

/// Solves every hyper-parameter for a plant prior and a noise model.
pub fn solve_hyperparams(
    set: &ThetaSet,
    noise: &NoiseModel,
    horizon: usize,
    cfg: &HyperConfig,
) -> Result<HyperParams, ControlError> {
    if !(cfg.b2.is_finite() && cfg.b2 > 0.0) {
        return Err(ControlError::InvalidSummary(format!("B2 must be positive, got {}", cfg.b2)));
    }
    if !(cfg.delta_conf > 0.0 && cfg.delta_conf < 1.0) {
        return Err(ControlError::InvalidSummary(format!("delta_conf must lie in (0, 1), got {}", cfg.delta_conf)));
    }
    let summary = set.summary(&cfg.constants_rule())?;
    let (p, q) = match set {
        ThetaSet::Singleton(t) => (t.p(), t.q()),
        ThetaSet::Box { lower, p, .. } => (*p, lower.len() - p),
    };
    let b_w = if cfg.unbounded_mode { noise.sub_gaussian_bound(horizon, cfg.delta_conf) } else { noise.bound };
    if !(b_w.is_finite() && b_w > 0.0) {
        return Err(ControlError::InvalidSummary(format!("noise bound B_w = {b_w} must be positive")));
    }
    let delta1 = match cfg.delta1 {
        Some(d) if d > 0.0 && d < 1.0 => d,
        Some(d) => return Err(ControlError::InvalidSummary(format!("delta1 override {d} must lie in (0, 1)"))),
        None => solve_delta1(&summary, b_w, p, q)?.delta1,
    };
    let b_u = compute_bu(b_w, delta1, summary.m_theta);
    let (m_star, h) = compute_episode_constants(&summary, b_w, b_u, cfg.y0_norm, q);
    let h1 = first_episode_target(summary.sup_norm_lambda, cfg.h1);
    Ok(HyperParams {
        b_w,
        b_u,
        b2: cfg.b2,
        delta1,
        m_star,
        h,
        h1,
        sigma_e: cfg.exploration.variance(b_w).sqrt(),
        unbounded_mode: cfg.unbounded_mode,
        horizon,
        delta_conf: cfg.delta_conf,
        exploration: cfg.exploration,
        lambda_scaling: cfg.lambda_scaling,
        rho: summary.sup_rho,
        c1: summary.sup_c1,
        m_theta: summary.m_theta,
        sup_norm_lambda: summary.sup_norm_lambda,
        y0_norm: cfg.y0_norm,
    })
}
