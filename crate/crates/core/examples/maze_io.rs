//! Parse a maze, look at it under the eight symmetries, and solve it with value iteration.

use metaplan::maze::{apply_symmetry, parse_maze, serialize_maze, GridWorld, MazeRewards, Symmetry, ACTION_NAMES};
use metaplan::mdp::{greedy_path, value_iteration};

const MAZE: &str = "\
// small demo maze
G..#.
.#...
.#.#.
...#S
";

fn main() {
    let maze = parse_maze(MAZE).expect("valid maze");
    println!("{}x{} maze, {} walls, comment {:?}", maze.width(), maze.height(), maze.wall_count(), maze.comment());
    assert_eq!(serialize_maze(&maze), MAZE);

    let world = GridWorld::new(maze.clone(), MazeRewards::default()).unwrap();
    let vi = value_iteration(&world.mdp, 1e-10).unwrap();
    println!("value iteration: {} sweeps, V*(start) = {:.4}", vi.iterations, vi.values[world.start_state()]);

    let path = greedy_path(&world.mdp, &vi.q, world.start_state(), 0).unwrap();
    let moves: Vec<&str> = path.actions.iter().map(|&a| ACTION_NAMES[a]).collect();
    println!("greedy path ({} steps): {}", path.len(), moves.join(" "));

    // Transposes need a square grid.
    let square = parse_maze("G..\n.#.\n..S\n").unwrap();
    for sym in Symmetry::ALL {
        let image = apply_symmetry(&square, sym).unwrap();
        println!("{}:", sym.name());
        print!("{}", serialize_maze(&image));
    }
}
