use proptest::prelude::*;

use piece::arx::{plant_step, RegressorWindow};
use piece::control::{solve_hyperparams, Algorithm, HyperConfig, Mode, ThetaSet};
use piece::noise::{NoiseKind, NoiseModel};
use piece::presets::Preset;
use piece::simulation::{run_batch, run_single, Scenario};

fn scenario(preset: Preset, noise: NoiseModel, horizon: usize) -> Scenario {
    let plant = preset.params();
    let hp = solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &HyperConfig::default()).unwrap();
    Scenario { plant, noise, hp, horizon }
}

#[test]
fn logged_outputs_replay_through_the_plant() {
    let s = scenario(Preset::Example1, NoiseModel::truncated_gaussian(0.6, 1.8), 400);
    for alg in [Algorithm::Piece, Algorithm::Lw, Algorithm::Ce] {
        let trace = run_single(&s, alg, 3, 1);
        let mut window = RegressorWindow::new(s.plant.p(), s.plant.q());
        window.advance(0.0, trace.initial_output);
        for step in &trace.steps {
            let y = plant_step(&s.plant, &mut window, step.u, step.w).unwrap();
            assert_eq!(y, step.y, "{alg} t = {}", step.t);
        }
    }
}

#[test]
fn algorithms_share_disturbances() {
    let s = scenario(Preset::Example2, NoiseModel::gaussian(0.6), 200);
    let w: Vec<Vec<f64>> =
        Algorithm::ALL.iter().map(|&a| run_single(&s, a, 5, 2).steps.iter().map(|r| r.w).collect()).collect();
    assert!(w.windows(2).all(|p| p[0] == p[1]));
}

#[test]
fn piece_inputs_respect_clip_and_schedule() {
    let s = scenario(Preset::Example2, NoiseModel::truncated_gaussian(0.6, 1.8), 1000);
    let batch = run_batch(&s, Algorithm::Piece, 10, 9, Some(1));
    for trace in &batch.traces {
        let warmup = trace.episodes[0];
        assert_eq!(warmup.start, 1);
        assert!(warmup.len >= s.hp.h1);
        for step in &trace.steps {
            assert!(step.u.abs() <= s.hp.b_u);
            let exploring = step.mode == Mode::Explore;
            assert_eq!(exploring, trace.episodes.iter().any(|e| e.contains(step.t)), "t = {}", step.t);
            if exploring {
                assert!(step.u.abs() <= s.hp.b_w);
            }
        }
        // the exploration count only moves inside episodes
        let explored = trace.steps.iter().filter(|r| r.mode == Mode::Explore).count();
        assert_eq!(trace.steps.last().unwrap().n_explore, explored);
    }
}

#[test]
fn ce_estimates_improve() {
    let s = scenario(Preset::Example2, NoiseModel::truncated_gaussian(0.6, 1.8), 2000);
    let batch = run_batch(&s, Algorithm::Ce, 20, 1, None);
    let err = &batch.aggregate.mean_est_err;
    let early = err[99].unwrap();
    let late = err[1999].unwrap();
    assert!(late < early, "{late} vs {early}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regret_is_nonnegative_and_monotone(seed in 0u64..1000, preset in 0usize..3, alg in 0usize..4, kind in 0usize..4) {
        let s = scenario(Preset::ALL[preset], NoiseModel::with_default_bound(NoiseKind::ALL[kind], 0.6), 150);
        let trace = run_single(&s, Algorithm::ALL[alg], seed, 0);
        let mut prev = 0.0;
        for r in &trace.steps {
            prop_assert!(r.r_inst >= 0.0);
            prop_assert!(r.regret_cum >= prev);
            prop_assert!((r.r_inst - (r.y - r.w).powi(2)).abs() <= 1e-12 * (1.0 + r.r_inst));
            prev = r.regret_cum;
        }
    }

    #[test]
    fn runs_depend_only_on_seed_and_run_id(seed in 0u64..1000, run_id in 0u64..50) {
        let s = scenario(Preset::Example3, NoiseModel::truncated_gaussian(0.6, 1.8), 120);
        let a = run_single(&s, Algorithm::Piece, seed, run_id);
        let b = run_single(&s, Algorithm::Piece, seed, run_id);
        prop_assert_eq!(a, b);
    }
}
