//! One PIECE run on Example II: the first steps of the trace, the episode
//! list and the mix of input laws.
//!
//! `cargo run --example single_run [seed]`

use std::collections::BTreeMap;

use piece::control::{solve_hyperparams, Algorithm, HyperConfig, ThetaSet};
use piece::noise::NoiseModel;
use piece::presets::Preset;
use piece::simulation::{run_single, Scenario};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let plant = Preset::Example2.params();
    let noise = NoiseModel::truncated_gaussian(0.6, 1.8);
    let horizon = 1000;
    let hp = solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &HyperConfig::default()).unwrap();
    let scenario = Scenario { plant, noise, hp, horizon };

    let trace = run_single(&scenario, Algorithm::Piece, seed, 0);
    println!("{:>4} {:>10} {:>10} {:>10} {:>12}  mode", "t", "u", "y", "r_inst", "regret");
    for s in trace.steps.iter().take(8) {
        println!(
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>12.4}  {}",
            s.t,
            s.u,
            s.y,
            s.r_inst,
            s.regret_cum,
            s.mode.as_str()
        );
    }
    println!("episodes: {:?}", trace.episodes);

    let mut modes: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &trace.steps {
        *modes.entry(s.mode.as_str()).or_default() += 1;
    }
    println!("input laws: {modes:?}");
    let clipped = trace.steps.iter().filter(|s| s.clipped).count();
    println!("clipped steps: {clipped}");
    println!("status {:?}, terminal regret {:.4e}", trace.status, trace.terminal_regret().unwrap_or(f64::NAN));
}
