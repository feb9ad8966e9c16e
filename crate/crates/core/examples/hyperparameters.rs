//! Solving `delta1`, `B_u`, `H` and `H1` for the presets, for the nominal
//! constants rule and for a box-shaped prior.
//!
//! `cargo run --example hyperparameters`

use piece::control::{solve_hyperparams, HyperConfig, ThetaSet};
use piece::noise::NoiseModel;
use piece::presets::Preset;

fn main() {
    let noise = NoiseModel::truncated_gaussian(0.6, 1.8);
    let horizon = 1000;
    let nominal = HyperConfig { rho_margin: 0.0, c1: Some(1.0), ..HyperConfig::default() };

    println!("{:<9} {:>10} {:>8} {:>11} {:>5} {:>5} {:>4}", "", "rule", "rho", "B_u", "m*", "H", "H1");
    for preset in Preset::ALL {
        let set = ThetaSet::Singleton(preset.params());
        for (rule, cfg) in [("default", HyperConfig::default()), ("nominal", nominal.clone())] {
            let hp = solve_hyperparams(&set, &noise, horizon, &cfg).unwrap();
            println!(
                "{:<9} {:>10} {:>8.4} {:>11.4e} {:>5} {:>5} {:>4}",
                preset.name(),
                rule,
                hp.rho,
                hp.b_u,
                hp.m_star,
                hp.h,
                hp.h1
            );
        }
    }

    // a prior box of +-0.005 around every Example II coefficient
    let theta = Preset::Example2.params().theta();
    let lower: Vec<f64> = theta.iter().map(|c| c - 0.005).collect();
    let upper: Vec<f64> = theta.iter().map(|c| c + 0.005).collect();
    let set = ThetaSet::Box { lower, upper, p: 2, points: 2 };
    let hp = solve_hyperparams(&set, &noise, horizon, &HyperConfig::default()).unwrap();
    println!(
        "example2 with a box prior: sup||lambda|| {:.3}, B_u {:.4e}, H {}, H1 {}",
        hp.sup_norm_lambda, hp.b_u, hp.h, hp.h1
    );

    // unbounded noise uses a horizon-dependent bound proxy
    let cfg = HyperConfig { unbounded_mode: true, ..HyperConfig::default() };
    let hp =
        solve_hyperparams(&ThetaSet::Singleton(Preset::Example2.params()), &NoiseModel::gaussian(0.6), horizon, &cfg)
            .unwrap();
    println!("example2, gaussian noise, unbounded mode: B_w {:.4}, B_u {:.4e}", hp.b_w, hp.b_u);
}
