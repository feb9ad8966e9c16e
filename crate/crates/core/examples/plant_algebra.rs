//! Benchmark plants: companion spectra, minimum-variance gains and a few
//! open-loop steps.
//!
//! `cargo run --example plant_algebra`

use piece::arx::{plant_step, ArxParams, RegressorWindow};
use piece::presets::Preset;

fn main() {
    for preset in Preset::ALL {
        let plant = preset.params();
        let profile = plant.spectral_profile(0.0, 500).expect("presets are stable and minimum phase");
        let gain = plant.mv_gain();
        println!("{preset}: p = {}, q = {}", plant.p(), plant.q());
        println!("  spectral radius A {:.4}, B {:.4}", profile.spec_radius_a, profile.spec_radius_b);
        println!("  ||lambda||_2 = {:.4}, b1 = {}", gain.norm(), gain.b1);
        println!("  lambda = {:.3?}", gain.lambda.as_slice());
    }

    // y_{t+1} = 0.5 y_t + u_t + 0.2 u_{t-1} + w_{t+1}
    let plant = ArxParams::new(vec![0.5], vec![1.0, 0.2]).unwrap();
    let mut window = RegressorWindow::new(1, 2);
    for (t, (u, w)) in [(1.0, 0.0), (0.0, 0.1), (-0.5, 0.0)].into_iter().enumerate() {
        let y = plant_step(&plant, &mut window, u, w).unwrap();
        println!("t = {}: u = {u:5.2}, w = {w:4.2} -> y = {y:.4}", t + 1);
    }

    let unstable = ArxParams::new(vec![1.1], vec![1.0]).unwrap();
    println!("open-loop unstable plant: {}", unstable.check_assumptions().unwrap_err());
}
