//! Driving the closed loop by hand: build controllers from their parts,
//! change the probing distribution and feed them a shared disturbance
//! stream through `run_controller`.
//!
//! `cargo run --example manual_loop`

use piece::control::{
    solve_hyperparams, CertaintyEquivalence, Controller, HyperConfig, Oracle, ProbingController, ThetaSet,
};
use piece::noise::{ExplorationDistribution, ExplorationInput, NoiseModel, StreamFactory, StreamPurpose};
use piece::presets::Preset;
use piece::simulation::run_controller;

fn main() {
    let plant = Preset::Example1.params();
    let noise = NoiseModel::truncated_gaussian(0.6, 1.8);
    let horizon = 1000;
    let streams = StreamFactory::new(11);

    for distribution in [ExplorationDistribution::Uniform, ExplorationDistribution::Rademacher] {
        let cfg = HyperConfig { exploration: distribution, ..HyperConfig::default() };
        let hp = solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &cfg).unwrap();
        let probe = || ExplorationInput::new(distribution, streams.rng(0, StreamPurpose::Exploration));
        let mut controllers: Vec<(&str, Box<dyn Controller>)> = vec![
            ("piece", Box::new(ProbingController::piece(plant.p(), plant.q(), &hp, probe()))),
            ("lw", Box::new(ProbingController::lai_wei(plant.p(), plant.q(), &hp, probe()))),
            ("ce", Box::new(CertaintyEquivalence::new(plant.p(), plant.q(), probe()))),
            ("oracle", Box::new(Oracle::new(&plant))),
        ];
        println!("probing distribution {distribution:?}");
        for (name, c) in controllers.iter_mut() {
            let mut disturbance = noise.stream(streams.rng(0, StreamPurpose::Disturbance));
            let trace = run_controller(&plant, c.as_mut(), &mut disturbance, horizon, 0);
            println!(
                "  {name:<7} regret {:>12.4e}  explored {:>4} steps",
                trace.terminal_regret().unwrap_or(f64::NAN),
                c.n_explore()
            );
        }
    }
}
