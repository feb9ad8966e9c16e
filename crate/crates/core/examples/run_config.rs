//! Loads a JSON experiment, runs it and writes the CSV and summary files,
//! the same path the `piece run` command takes.
//!
//! `cargo run --release --example run_config [config.json] [out_dir]`

use std::path::PathBuf;

use piece::experiment::{write_outputs, Experiment};

const DEFAULT: &str = r#"{
  "plant": "example2",
  "algorithms": ["piece", "lw", "ce", "oracle"],
  "noise": {"kind": "truncated_gaussian", "sigma": 0.6},
  "T": 1000,
  "n_runs": 10,
  "master_seed": 2024,
  "overrides": {"B2": 1.0}
}"#;

fn main() {
    let mut args = std::env::args().skip(1);
    let exp = match args.next() {
        Some(path) => Experiment::load(path.as_ref()),
        None => Experiment::from_json(DEFAULT),
    }
    .unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    });
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("piece-example"));

    println!("fingerprint {}", exp.fingerprint);
    println!("{}", exp.hyper_report().unwrap());
    let batches = exp.run(None);
    let files = write_outputs(&out, &exp, &batches, 10).unwrap();
    for b in &batches {
        println!(
            "{:<7} mean terminal regret {:.4e}",
            b.aggregate.algorithm,
            b.aggregate.mean_terminal_regret.unwrap_or(f64::NAN)
        );
    }
    for f in files.csv.iter().chain(std::iter::once(&files.summary)) {
        println!("wrote {}", f.display());
    }
}
