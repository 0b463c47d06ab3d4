//! Meta-planning on Four Rooms: where does the plan built at the start state spend its bits?
//!
//! Usage: cargo run --release --example four_rooms_metaplan [-- LAMBDA [ITERS]]

use metaplan::maze::{four_rooms, Cell};
use metaplan::meta::{optimize, task_value, MetaPlanConfig};
use metaplan::mdp::value_iteration;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda = args.first().map_or(0.01, |a| a.parse().expect("lambda"));
    let iters = args.get(1).map_or(200, |a| a.parse().expect("iterations"));

    let world = four_rooms();
    let config = MetaPlanConfig { lambda, outer_iterations: iters, ..Default::default() };
    println!("Four Rooms: {} states, lambda = {lambda}, H = {}, N = {iters}", world.mdp.n_states(), config.horizon);

    let result = optimize(&world.mdp, &config).unwrap();
    println!(
        "loss {:.3} -> {:.3} in {:.1}s",
        result.loss_history[0],
        result.loss_history.last().unwrap(),
        result.wall_time
    );

    let start = world.start_state();
    let kl = result.kl_map(start);
    println!("\nKL per simulated state from the start (blank below 0.005, x100):");
    for row in 0..world.maze.height() {
        let line: String = (0..world.maze.width())
            .map(|col| match world.state(Cell::new(row, col)) {
                None => "  ##".to_string(),
                Some(s) if kl[s] < 0.005 => "   .".to_string(),
                Some(s) => format!("{:4.0}", kl[s] * 100.0),
            })
            .collect();
        println!("{line}");
    }
    let below = kl.iter().filter(|&&k| k < 0.005).count();
    println!("{below}/{} simulated states below 0.005", kl.len());
    println!("plan cost at start: {:.4} nats", result.costs[start]);

    let acted = task_value(&world.mdp, &result.acted_policy()).unwrap();
    let vstar = value_iteration(&world.mdp, 1e-10).unwrap().values;
    println!("value of acting on the plans: {:.3} (optimal {:.3})", acted[start], vstar[start]);
}
