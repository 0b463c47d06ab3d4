//! The alternative planning metrics on Four Rooms.

use metaplan::baselines::{
    astar, itbr_first_step_cost, optimal_plan_length, search, soft_bellman_entropy, softmax_entropy, trajectory_turns,
    vi_iterations, Heuristic,
};
use metaplan::maze::four_rooms;
use metaplan::mdp::value_iteration;

fn main() {
    let world = four_rooms();
    let (maze, mdp) = (&world.maze, &world.mdp);
    let s0 = world.start_state();

    let a = astar(maze, maze.start(), maze.goal()).unwrap();
    let d = search(maze, maze.start(), maze.goal(), Heuristic::Zero).unwrap();
    println!("A*:       path {} steps, {} expanded, {} inserted", a.path_length().unwrap(), a.expanded_count, a.inserted_count);
    println!("Dijkstra: path {} steps, {} expanded, {} inserted", d.path_length().unwrap(), d.expanded_count, d.inserted_count);

    for row in 0..maze.height() {
        let line: String = (0..maze.width())
            .map(|col| {
                let c = metaplan::maze::Cell::new(row, col);
                if maze.is_wall(c) {
                    '#'
                } else if a.path.as_ref().unwrap().contains(&c) {
                    '*'
                } else if a.expanded.contains(&c) {
                    'o'
                } else {
                    '.'
                }
            })
            .collect();
        println!("  {line}");
    }

    let vi = value_iteration(mdp, 1e-6).unwrap();
    println!("optimal plan length   {}", optimal_plan_length(maze).unwrap());
    println!("VI iterations         {}", vi_iterations(mdp, 1e-6).unwrap());
    for alpha in [0.01, 1.0, 100.0] {
        println!("ITBR cost, alpha {alpha:<6} {:.5}", itbr_first_step_cost(mdp, alpha, s0).unwrap());
    }
    println!("softmax entropy       {:.5}", softmax_entropy(&vi.q, 4, s0, 1.0));
    println!("soft-Bellman entropy  {:.5}", soft_bellman_entropy(mdp, s0, 1.0, 1e-10).unwrap());
    println!("trajectory turns      {:.2}", trajectory_turns(mdp, &vi.q, s0, 100, 0).unwrap());
}
