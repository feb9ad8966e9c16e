//! PIECE against the Lai-Wei and certainty-equivalence baselines on all
//! three plants, with means, medians and the number of runs whose regret
//! exceeds ten times the median.
//!
//! `cargo run --release --example compare_algorithms [sigma] [n_runs]`

use piece::control::{solve_hyperparams, Algorithm, HyperConfig, ThetaSet};
use piece::noise::NoiseModel;
use piece::presets::Preset;
use piece::simulation::{run_batch, Scenario};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.6);
    let n_runs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let noise = NoiseModel::truncated_gaussian(sigma, 3.0 * sigma);
    let horizon = 1000;

    println!("truncated Gaussian sigma = {sigma}, T = {horizon}, {n_runs} runs");
    println!("{:<9} {:<6} {:>12} {:>12} {:>12} {:>8}", "plant", "alg", "mean", "se", "median", "outliers");
    for preset in Preset::ALL {
        let plant = preset.params();
        let hp =
            solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &HyperConfig::default()).unwrap();
        let scenario = Scenario { plant, noise, hp, horizon };
        for alg in [Algorithm::Piece, Algorithm::Lw, Algorithm::Ce] {
            let agg = run_batch(&scenario, alg, n_runs, 2024, None).aggregate;
            let finished: Vec<f64> = agg.terminal_regrets.iter().flatten().copied().collect();
            let med = median(finished.clone());
            let outliers = finished.iter().filter(|&&r| r > 10.0 * med).count();
            println!(
                "{:<9} {:<6} {:>12.4e} {:>12.4e} {:>12.4e} {:>8}",
                preset.name(),
                alg.name(),
                agg.mean_terminal_regret.unwrap_or(f64::NAN),
                agg.se_terminal_regret.unwrap_or(f64::NAN),
                med,
                outliers
            );
        }
    }
}
