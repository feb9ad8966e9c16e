//! The four disturbance laws and the reproducible stream layout.
//!
//! `cargo run --example noise_processes`

use piece::noise::{NoiseKind, NoiseModel, StreamFactory, StreamPurpose};

fn main() {
    let streams = StreamFactory::new(42);
    for kind in NoiseKind::ALL {
        let model = NoiseModel::with_default_bound(kind, 0.6);
        let mut s = model.stream(streams.rng(0, StreamPurpose::Disturbance));
        let draws: Vec<f64> = (0..20_000).map(|_| s.sample()).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        let max = draws.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        println!(
            "{kind:?}: design bound {:.2}, sample mean {mean:+.3}, sd {:.3}, max |w| {max:.2}",
            model.bound,
            var.sqrt()
        );
    }

    // each (run, purpose) pair has its own stream: run 7 is the same
    // whether or not runs 0..7 were ever drawn
    let model = NoiseModel::truncated_gaussian(0.6, 1.8);
    let first: Vec<f64> = {
        let mut s = model.stream(streams.rng(7, StreamPurpose::Disturbance));
        (0..3).map(|_| s.sample()).collect()
    };
    let again: Vec<f64> = {
        let mut s = model.stream(StreamFactory::new(42).rng(7, StreamPurpose::Disturbance));
        (0..3).map(|_| s.sample()).collect()
    };
    println!("run 7 draws {first:.4?} reproduce: {}", first == again);
}
