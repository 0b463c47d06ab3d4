//! Planning cost against task value at the Four Rooms start as lambda varies.
//!
//! Usage: cargo run --release --example pareto_frontier [-- POINTS [ITERS]]

use metaplan::maze::four_rooms;
use metaplan::meta::{pareto_sweep, MetaPlanConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let points: usize = args.first().map_or(5, |a| a.parse().expect("points"));
    let iters = args.get(1).map_or(200, |a| a.parse().expect("iterations"));

    let world = four_rooms();
    // Log-spaced in [1e-3, 1].
    let lambdas: Vec<f64> = (0..points).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / (points - 1) as f64)).collect();
    let config = MetaPlanConfig { outer_iterations: iters, ..Default::default() };
    let frontier = pareto_sweep(&world.mdp, &lambdas, world.start_state(), &config).unwrap();

    println!("{:>10} {:>14} {:>14}", "lambda", "cost (nats)", "value");
    for p in &frontier {
        println!("{:>10.4} {:>14.5} {:>14.4}", p.lambda, p.planning_cost, p.expected_value);
    }
}
