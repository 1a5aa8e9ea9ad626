//! Solver scaling probe: places the benchmark request stream, then solves
//! one reconfiguration round and prints model size and solver statistics.
//!
//! Usage: cargo run --release --example probe [targets] [wall-seconds]

use placesim::experiment::baseline_scenario;
use placesim::reconfig::{build_model, select_targets, trial_reconfigure};
use placesim::solver::SolveBudget;
use placesim::topology::build_topology;
use placesim::workload::generate_requests;
use placesim::SystemState;
use std::time::{Duration, Instant};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let wall: u64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(30);

    let config = baseline_scenario();
    let topology = build_topology(&config.topology, &config.hardware).unwrap();
    let inputs: Vec<_> = topology.input_nodes().collect();
    let requests =
        generate_requests(&config.apps, &inputs, config.run.total, config.run.rng, 1).unwrap();
    let catalog: Vec<_> = config.apps.iter().map(|e| e.profile.clone()).collect();
    let mut state = SystemState::new(topology, catalog).unwrap();
    let mut placed = 0;
    let mut rejected = 0;
    for request in &requests {
        match state.place(request).unwrap() {
            placesim::placement::PlaceOutcome::Placed(_) => placed += 1,
            placesim::placement::PlaceOutcome::Rejected(_) => rejected += 1,
        }
    }
    println!("placed {placed}, rejected {rejected}");

    let targets = select_targets(&state, n);
    let (model, _) = build_model(&state, &targets).unwrap();
    let rows = model.resources.len();
    let cands: usize = model.apps.iter().map(|a| a.candidates.len()).sum();
    let max_c = model.apps.iter().map(|a| a.candidates.len()).max().unwrap_or(0);
    println!("model: {} apps, {rows} rows, {cands} candidates (max {max_c} per app)", model.apps.len());

    let budget = SolveBudget { max_nodes: u64::MAX, max_wall: Some(Duration::from_secs(wall)) };
    let started = Instant::now();
    match trial_reconfigure(&state, &targets, &budget) {
        Ok(plan) => println!(
            "n={n}: certified={} s_before={} s_after={} moves={} nodes={} lp={} in {:.2?}",
            plan.certified,
            plan.s_before,
            plan.s_after,
            plan.moved_count(),
            plan.stats.nodes,
            plan.stats.lp_solves,
            started.elapsed()
        ),
        Err(e) => println!("n={n}: error {e} after {:.2?}", started.elapsed()),
    }
}
