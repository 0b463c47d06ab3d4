//! Teleport the agent around Four Rooms and measure how much the plan has to change.
//!
//! Usage: cargo run --release --example teleport_probes [-- EVENTS ITERS]

use metaplan::baselines::{astar, astar_node_difference};
use metaplan::maze::four_rooms;
use metaplan::meta::{optimize, MetaPlanConfig};
use metaplan::probes::{partial_plan_divergence, simulate_teleport_events, teleport_distance};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let count = args.first().copied().unwrap_or(8);
    let iters = args.get(1).copied().unwrap_or(200);

    let world = four_rooms();
    let result = optimize(&world.mdp, &MetaPlanConfig { outer_iterations: iters, ..Default::default() }).unwrap();
    let events = simulate_teleport_events(&world.maze, "four_rooms", count, 42).unwrap();

    println!("{:>4} {:>9} {:>9} {:>11} {:>6} {:>6} {:>6}", "n", "pre", "post", "divergence", "A*", "diff", "dist");
    for e in &events {
        let pre = world.state(e.pre_state).unwrap();
        let post = world.state(e.post_state).unwrap();
        let div = partial_plan_divergence(&result.plans, &world.mdp, pre, post).unwrap();
        let nodes = astar(&world.maze, e.post_state, world.maze.goal()).unwrap().expanded_count;
        let diff = astar_node_difference(&world.maze, e.pre_state, e.post_state, world.maze.goal()).unwrap();
        println!(
            "{:>4} {:>9} {:>9} {:>11.4} {:>6} {:>6} {:>6.2}",
            e.step_index,
            e.pre_state.to_string(),
            e.post_state.to_string(),
            div,
            nodes,
            diff,
            teleport_distance(e.pre_state, e.post_state)
        );
    }
}
