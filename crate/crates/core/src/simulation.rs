//! Closed-loop simulation, per-step metrics and seeded multi-run batches.
//!
//! Step `t` of a run: the controller picks `u_t` from data through `y_t`, the
//! disturbance `w_{t+1}` is drawn, the plant emits `y_{t+1}`, the controller
//! learns from `(phi_t, y_{t+1})`, then row `t` is recorded. A row therefore
//! holds `u_t` next to the outcome `y_{t+1}, w_{t+1}` and the regret it
//! incurred. The plant starts at rest, so `y_1 = w_1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arx::{plant_step, ArxParams, RegressorWindow};
use crate::control::{build_controller, Algorithm, Controller, Episode, HyperParams, Mode};
use crate::noise::{ExplorationInput, NoiseModel, NoiseStream, StreamFactory, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// `y_{t+1}`.
    pub y: f64,
    /// `u_t`.
    pub u: f64,
    /// `w_{t+1}`.
    pub w: f64,
    /// `(y_{t+1} - w_{t+1})^2`.
    pub r_inst: f64,
    pub regret_cum: f64,
    pub est_err: Option<f64>,
    pub n_explore: usize,
    pub lambda_min_i: Option<f64>,
    pub mode: Mode,
    pub clipped: bool,
    /// `||Y_{t+1}||`.
    pub state_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Diverged { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub run_id: u64,
    /// `y_1`, produced before the first decision.
    pub initial_output: f64,
    pub steps: Vec<StepRecord>,
    pub status: RunStatus,
    /// Exploration episodes as realized (warm-up first); empty for
    /// controllers without a schedule.
    pub episodes: Vec<Episode>,
}

impl RunTrace {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Cumulative regret at the horizon, `None` if the run diverged.
    pub fn terminal_regret(&self) -> Option<f64> {
        if self.is_completed() {
            self.steps.last().map(|s| s.regret_cum)
        } else {
            None
        }
    }
}

/// Everything that determines a batch apart from the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: ArxParams,
    pub noise: NoiseModel,
    pub hp: HyperParams,
    pub horizon: usize,
}

/// Runs `controller` against `plant` for `horizon` steps.
pub fn run_controller(
    plant: &ArxParams,
    controller: &mut dyn Controller,
    disturbance: &mut NoiseStream,
    horizon: usize,
    run_id: u64,
) -> RunTrace {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut window = RegressorWindow::new(plant.p(), plant.q());
    let initial_output = disturbance.sample();
    window.advance(0.0, initial_output);

    let mut steps = Vec::with_capacity(horizon);
    let mut regret_cum = 0.0;
    let mut status = RunStatus::Completed;
    for t in 1..=horizon {
        let psi = window.psi();
        let decision = controller.decide(t, &psi);
        let phi = window.phi(decision.u);
        let w = disturbance.sample();
        let y = match plant_step(plant, &mut window, decision.u, w) {
            Ok(y) => y,
            Err(_) => {
                status = RunStatus::Diverged { step: t };
                break;
            }
        };
        let r_inst = (y - w) * (y - w);
        if !r_inst.is_finite() {
            status = RunStatus::Diverged { step: t };
            break;
        }
        controller.observe(t, &phi, &psi, &decision, y);
        regret_cum += r_inst;
        steps.push(StepRecord {
            t,
            y,
            u: decision.u,
            w,
            r_inst,
            regret_cum,
            est_err: controller.estimation_error(plant),
            n_explore: controller.n_explore(),
            lambda_min_i: controller.lambda_min_exploration(),
            mode: decision.mode,
            clipped: decision.clipped,
            state_norm: window.state_norm(),
        });
    }
    let episodes = controller.schedule().map(|s| s.realized()).unwrap_or_default();
    RunTrace { algorithm: controller.algorithm(), run_id, initial_output, steps, status, episodes }
}

/// One seeded run. Disturbance and exploration draws come from separate
/// streams keyed by `(master_seed, run_id)`, so every algorithm in a run
/// faces the same disturbance sequence.
pub fn run_single(scenario: &Scenario, algorithm: Algorithm, master_seed: u64, run_id: u64) -> RunTrace {
    let streams = StreamFactory::new(master_seed);
    let explorer = ExplorationInput::new(scenario.hp.exploration, streams.rng(run_id, StreamPurpose::Exploration));
    let mut controller = build_controller(algorithm, &scenario.plant, &scenario.hp, explorer);
    let mut disturbance = scenario.noise.stream(streams.rng(run_id, StreamPurpose::Disturbance));
    run_controller(&scenario.plant, controller.as_mut(), &mut disturbance, scenario.horizon, run_id)
}

/// Mean and standard-error curves over completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub n_runs: usize,
    pub divergences: usize,
    pub master_seed: u64,
    pub mean_regret: Vec<f64>,
    pub se_regret: Vec<f64>,
    /// `None` at steps where no completed run has an estimate yet.
    pub mean_est_err: Vec<Option<f64>>,
    pub se_est_err: Vec<Option<f64>>,
    /// One entry per run, `None` for diverged runs.
    pub terminal_regrets: Vec<Option<f64>>,
    pub mean_terminal_regret: Option<f64>,
    pub se_terminal_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub traces: Vec<RunTrace>,
    pub aggregate: AggregateResult,
}

fn mean_se(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

/// Reduces traces, taken in `run_id` order, to mean curves.
pub fn aggregate(algorithm: Algorithm, horizon: usize, master_seed: u64, traces: &[RunTrace]) -> AggregateResult {
    let completed: Vec<&RunTrace> = traces.iter().filter(|t| t.is_completed()).collect();
    let mut mean_regret = Vec::with_capacity(horizon);
    let mut se_regret = Vec::with_capacity(horizon);
    let mut mean_est_err = Vec::with_capacity(horizon);
    let mut se_est_err = Vec::with_capacity(horizon);
    let mut buf = Vec::with_capacity(completed.len());
    for i in 0..horizon {
        buf.clear();
        buf.extend(completed.iter().map(|t| t.steps[i].regret_cum));
        let (m, s) = mean_se(&buf).unwrap_or((f64::NAN, f64::NAN));
        mean_regret.push(m);
        se_regret.push(s);
        buf.clear();
        buf.extend(completed.iter().filter_map(|t| t.steps[i].est_err));
        let est = mean_se(&buf);
        mean_est_err.push(est.map(|e| e.0));
        se_est_err.push(est.map(|e| e.1));
    }
    let terminal_regrets: Vec<Option<f64>> = traces.iter().map(RunTrace::terminal_regret).collect();
    let finished: Vec<f64> = terminal_regrets.iter().flatten().copied().collect();
    let terminal = mean_se(&finished);
    AggregateResult {
        algorithm,
        horizon,
        n_runs: traces.len(),
        divergences: traces.len() - completed.len(),
        master_seed,
        mean_regret,
        se_regret,
        mean_est_err,
        se_est_err,
        terminal_regrets,
        mean_terminal_regret: terminal.map(|t| t.0),
        se_terminal_regret: terminal.map(|t| t.1),
    }
}

/// `n_runs` seeded runs. `jobs = Some(1)` runs serially; otherwise a rayon
/// pool of the requested size (default: all cores) is used. Results do not
/// depend on the execution mode.
pub fn run_batch(
    scenario: &Scenario,
    algorithm: Algorithm,
    n_runs: usize,
    master_seed: u64,
    jobs: Option<usize>,
) -> BatchResult {
    assert!(n_runs >= 1, "n_runs must be at least 1");
    let one = |run_id: usize| run_single(scenario, algorithm, master_seed, run_id as u64);
    let traces: Vec<RunTrace> = match jobs {
        Some(1) => (0..n_runs).map(one).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| (0..n_runs).into_par_iter().map(one).collect()),
        None => (0..n_runs).into_par_iter().map(one).collect(),
    };
    let aggregate = aggregate(algorithm, scenario.horizon, master_seed, &traces);
    BatchResult { traces, aggregate }
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared, n_points: n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_state_norm: f64,
    /// `C1 ||Y_0|| + B_u C1 / (1 - rho) (1 + sum |b|)`.
    pub state_bound: f64,
    pub state_violations: usize,
    /// `lambda_min(V_I)` against the exploration count, over exploration
    /// steps after the warm-up at which `V_I` is invertible.
    pub excitation_fit: Option<LinearFit>,
    pub clipped_fraction: f64,
    pub episodes: Vec<Episode>,
}

/// Runtime checks on a finished trace.
pub fn diagnostics_sweep(trace: &RunTrace, plant: &ArxParams, hp: &HyperParams) -> Diagnostics {
    let state_bound = hp.c1 * hp.y0_norm + hp.b_u * hp.c1 / (1.0 - hp.rho) * (1.0 + plant.sum_abs_b());
    let norms = std::iter::once(trace.initial_output.abs()).chain(trace.steps.iter().map(|s| s.state_norm));
    let (mut max_state_norm, mut state_violations) = (0.0_f64, 0);
    for n in norms {
        max_state_norm = max_state_norm.max(n);
        if !(n <= state_bound) {
            state_violations += 1;
        }
    }

    let warmup_end = trace.episodes.first().map(|e| e.end()).unwrap_or(0);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut last_count = 0;
    for s in &trace.steps {
        // one point per new exploration sample
        if s.n_explore > last_count && s.t > warmup_end {
            if let Some(l) = s.lambda_min_i {
                xs.push(s.n_explore as f64);
                ys.push(l);
            }
        }
        last_count = s.n_explore;
    }
    let clipped = trace.steps.iter().filter(|s| s.clipped).count();
    Diagnostics {
        max_state_norm,
        state_bound,
        state_violations,
        excitation_fit: fit_line(&xs, &ys),
        clipped_fraction: if trace.steps.is_empty() { 0.0 } else { clipped as f64 / trace.steps.len() as f64 },
        episodes: trace.episodes.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{solve_hyperparams, HyperConfig, ThetaSet};
    use crate::presets::Preset;

    fn scenario(preset: Preset, horizon: usize) -> Scenario {
        let plant = preset.params();
        let noise = NoiseModel::truncated_gaussian(0.6, 1.8);
        let hp =
            solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &HyperConfig::default()).unwrap();
        Scenario { plant, noise, hp, horizon }
    }

    #[test]
    fn oracle_has_no_regret() {
        let s = scenario(Preset::Example1, 1000);
        let trace = run_single(&s, Algorithm::Oracle, 4, 0);
        assert!(trace.is_completed());
        assert!(trace.terminal_regret().unwrap() <= 1e-10);
        let d = diagnostics_sweep(&trace, &s.plant, &s.hp);
        assert_eq!(d.state_violations, 0);
        assert_eq!(d.clipped_fraction, 0.0);
    }

    #[test]
    fn regret_accumulates() {
        let s = scenario(Preset::Example2, 300);
        let trace = run_single(&s, Algorithm::Piece, 1, 2);
        let mut acc = 0.0;
        for st in &trace.steps {
            assert!(st.r_inst >= 0.0);
            assert!(((st.y - st.w).powi(2) - st.r_inst).abs() <= 1e-10);
            acc += st.r_inst;
            assert_eq!(acc, st.regret_cum);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let s = scenario(Preset::Example2, 200);
        assert_eq!(run_single(&s, Algorithm::Piece, 9, 3), run_single(&s, Algorithm::Piece, 9, 3));
        assert_ne!(run_single(&s, Algorithm::Piece, 9, 3), run_single(&s, Algorithm::Piece, 9, 4));
    }

    #[test]
    fn common_disturbances_across_algorithms() {
        let s = scenario(Preset::Example2, 100);
        let a = run_single(&s, Algorithm::Ce, 5, 1);
        let b = run_single(&s, Algorithm::Oracle, 5, 1);
        assert_eq!(a.initial_output, b.initial_output);
        assert!(a.steps.iter().zip(&b.steps).all(|(x, y)| x.w == y.w));
    }

    #[test]
    fn single_run_batch_matches_trace() {
        let s = scenario(Preset::Example2, 100);
        let batch = run_batch(&s, Algorithm::Lw, 1, 8, Some(1));
        let trace = run_single(&s, Algorithm::Lw, 8, 0);
        let curve: Vec<f64> = trace.steps.iter().map(|x| x.regret_cum).collect();
        assert_eq!(batch.aggregate.mean_regret, curve);
        assert!(batch.aggregate.se_regret.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = scenario(Preset::Example2, 150);
        let a = run_batch(&s, Algorithm::Piece, 6, 11, Some(1));
        let b = run_batch(&s, Algorithm::Piece, 6, 11, Some(3));
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_recorded() {
        // an explosive plant with the noise law at its largest
        let plant = ArxParams::new(vec![1e200], vec![1.0]).unwrap();
        let mut s = scenario(Preset::Example2, 10);
        s.plant = plant;
        let trace = run_single(&s, Algorithm::Ce, 1, 0);
        assert!(matches!(trace.status, RunStatus::Diverged { .. }));
        assert_eq!(trace.terminal_regret(), None);
        let agg = aggregate(Algorithm::Ce, 10, 1, &[trace]);
        assert_eq!(agg.divergences, 1);
        assert_eq!(agg.mean_terminal_regret, None);
    }

    #[test]
    fn line_fit() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
