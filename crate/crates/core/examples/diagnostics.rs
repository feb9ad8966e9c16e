//! Per-run diagnostics: the worst state norm against its theoretical bound,
//! the clipping rate, and the growth of the exploration Gram matrix.
//!
//! `cargo run --release --example diagnostics`

use piece::control::{solve_hyperparams, Algorithm, HyperConfig, ThetaSet};
use piece::noise::NoiseModel;
use piece::presets::Preset;
use piece::simulation::{diagnostics_sweep, run_batch, Scenario};

fn main() {
    let plant = Preset::Example2.params();
    let noise = NoiseModel::truncated_gaussian(0.6, 1.8);
    // long enough for one exploration episode after the warm-up
    let horizon = 10_000;
    let hp = solve_hyperparams(&ThetaSet::Singleton(plant.clone()), &noise, horizon, &HyperConfig::default()).unwrap();
    let scenario = Scenario { plant: plant.clone(), noise, hp: hp.clone(), horizon };
    let batch = run_batch(&scenario, Algorithm::Piece, 10, 7, None);

    println!("{:>3} {:>11} {:>11} {:>8} {:>9} {:>7}  episodes", "run", "max|Y|", "bound", "clipped", "slope", "R^2");
    for trace in &batch.traces {
        let d = diagnostics_sweep(trace, &plant, &hp);
        let (slope, r2) = d.excitation_fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
        let eps: Vec<String> = d.episodes.iter().map(|e| format!("{}+{}", e.start, e.len)).collect();
        println!(
            "{:>3} {:>11.3e} {:>11.3e} {:>7.1}% {:>9.3} {:>7.3}  {}",
            trace.run_id,
            d.max_state_norm,
            d.state_bound,
            100.0 * d.clipped_fraction,
            slope,
            r2,
            eps.join(" ")
        );
    }
}
