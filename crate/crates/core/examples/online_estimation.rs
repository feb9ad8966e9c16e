//! Recursive least squares against batch least squares, and the recursive
//! minimum-variance gain estimate, on open-loop data from Example II.
//!
//! `cargo run --example online_estimation`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use piece::arx::{plant_step, RegressorWindow};
use piece::estimation::{lse_batch, EstimatorState, InnovationScaling, Which};
use piece::presets::Preset;

fn main() {
    let plant = Preset::Example2.params();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut window = RegressorWindow::new(plant.p(), plant.q());
    let mut est = EstimatorState::new(plant.p(), plant.q(), InnovationScaling::Divide);
    let truth = plant.mv_gain();

    for t in 1..=5000 {
        let psi = window.psi();
        let u: f64 = rng.gen_range(-1.8..1.8);
        let phi = window.phi(u);
        let w: f64 = rng.gen_range(-0.6..0.6);
        let y = plant_step(&plant, &mut window, u, w).unwrap();
        est.observe(&phi, &psi, u, y, true);
        if [10, 100, 1000, 5000].contains(&t) {
            let err = est.estimation_error(&plant, Which::Exploration).unwrap();
            let gain_err = (est.lambda_rec() - &truth.lambda).norm();
            println!("t = {t:>4}: ||theta_I - theta||^2 = {err:.3e}, ||lambda_rec - lambda|| = {gain_err:.3e}");
        }
    }

    let rec = est.theta_i().unwrap();
    let batch = lse_batch(est.exploration().gram(), est.exploration().cross()).unwrap();
    println!("recursive vs batch: {:.2e}", (rec - &batch).norm() / batch.norm());
    println!("theta       = {:.4?}", plant.theta().as_slice());
    println!("theta_hat   = {:.4?}", rec.as_slice());
    let lmin = est.exploration().min_eigenvalue();
    println!("lambda_min(V) = {lmin:.1} after {} samples", est.n_explore());
}
