//! Generate a batch of mazes, keep a few spanning the planning-cost range,
//! and tabulate every predictor for them.
//!
//! Usage: cargo run --release --example exp1_predictors [-- BATCH KEEP ITERS]

use metaplan::analysis::ols_fit;
use metaplan::meta::MetaPlanConfig;
use metaplan::stimuli::{compute_all_predictors, generate_mazes, select_spanning_costs, PredictorConfig};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let batch = args.first().copied().unwrap_or(12);
    let keep = args.get(1).copied().unwrap_or(6);
    let iters = args.get(2).copied().unwrap_or(40);

    let mazes = generate_mazes(7, 7, batch, 1, (0.1, 0.4)).unwrap();
    let meta = MetaPlanConfig { outer_iterations: iters, horizon: 50, ..Default::default() };
    let grids: Vec<_> = mazes.iter().map(|m| m.maze.clone()).collect();
    let selection = select_spanning_costs(&grids, &meta, keep, 1).unwrap();
    println!("start-state costs of the batch:");
    for (m, c) in mazes.iter().zip(&selection.costs) {
        println!("  {} {c:.4}", m.id);
    }

    let chosen: Vec<_> = selection.indices.iter().map(|&i| mazes[i].clone()).collect();
    let config = PredictorConfig { meta, ..Default::default() };
    let records = compute_all_predictors(&chosen, &config).unwrap();
    println!("\n{:<10} {:>8} {:>5} {:>5} {:>4} {:>7} {:>7} {:>7} {:>5} {:>6}", "maze", "cost", "A*", "ins", "len", "itbr", "H_sm", "H_sb", "VI", "turns");
    for r in &records {
        println!(
            "{:<10} {:>8.4} {:>5} {:>5} {:>4} {:>7.4} {:>7.4} {:>7.4} {:>5} {:>6.2}",
            r.maze_id,
            r.partial_plan_cost,
            r.astar_expanded,
            r.astar_inserted,
            r.optimal_plan_length,
            r.itbr_cost,
            r.softmax_entropy,
            r.soft_bellman_entropy,
            r.vi_iterations,
            r.trajectory_turns
        );
    }

    let x: Vec<f64> = records.iter().map(|r| r.astar_expanded as f64).collect();
    let y: Vec<f64> = records.iter().map(|r| r.partial_plan_cost).collect();
    match ols_fit(&x, &y) {
        Ok(fit) => println!("\ncost ~ A* nodes: slope {:.5}, intercept {:.4}, R^2 {:.3}", fit.slope, fit.intercept, fit.r_squared),
        Err(e) => println!("\nno fit: {e}"),
    }
}
