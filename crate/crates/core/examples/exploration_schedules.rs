//! Exploration timetables of PIECE (bounded and unbounded noise) and the
//! Lai-Wei baseline, and how a warm-up of unknown length reshapes them.
//!
//! `cargo run --example exploration_schedules`

use piece::control::schedule::LAI_WEI_DELTA;
use piece::control::{Episode, ExplorationSchedule};

fn show(label: &str, episodes: &[Episode]) {
    let list: Vec<String> = episodes.iter().map(|e| format!("{}..={}", e.start, e.end())).collect();
    println!("{label:<28} {}", list.join(", "));
}

fn main() {
    let horizon = 100_000;
    show("piece, bounded, H = 47", &ExplorationSchedule::piece(47, false, horizon).episodes());
    show("piece, unbounded, H = 47", &ExplorationSchedule::piece(47, true, horizon).episodes());
    let lw = ExplorationSchedule::lai_wei(LAI_WEI_DELTA, 2000);
    let lw = lw.episodes();
    show("lai-wei (first 6)", &lw[..lw.len().min(6)]);

    // the warm-up ends once enough probing data has been collected; any
    // later episode that starts inside it is dropped
    let mut s = ExplorationSchedule::piece(47, true, 2000);
    s.close_warmup(103);
    show("unbounded after warm-up 103", &s.realized());
    let explored = (1..=2000).filter(|&t| s.is_exploration(t)).count();
    println!("{explored} of 2000 steps explore");
}
