//! Cluster Four Rooms states by how similar their partial plans are.
//!
//! Usage: cargo run --release --example option_clusters [-- K]

use metaplan::analysis::{best_overlap, planning_distance_matrix, ward_cluster};
use metaplan::maze::{four_rooms, four_rooms_goal_room, Cell};
use metaplan::meta::{optimize, MetaPlanConfig};

fn main() {
    let k = std::env::args().nth(1).map_or(3, |a| a.parse().expect("k"));
    let world = four_rooms();
    let result = optimize(&world.mdp, &MetaPlanConfig::gentle()).unwrap();
    let distances = planning_distance_matrix(&result.plans).unwrap();
    let dendrogram = ward_cluster(&distances);
    let labels = dendrogram.cut(k).unwrap();

    println!("last merges:");
    for m in dendrogram.merges.iter().rev().take(5) {
        println!("  {} + {} at height {:.2} (size {})", m.a, m.b, m.height, m.size);
    }

    println!("\n{k} clusters (a = largest):");
    for row in 0..world.maze.height() {
        let line: String = (0..world.maze.width())
            .map(|col| match world.state(Cell::new(row, col)) {
                None => '#',
                Some(s) => (b'a' + labels[s] as u8) as char,
            })
            .collect();
        println!("  {line}");
    }

    let goal_room: Vec<usize> = four_rooms_goal_room().iter().map(|&c| world.state(c).unwrap()).collect();
    let o = best_overlap(&labels, &goal_room).unwrap();
    println!(
        "\ngoal room: cluster {} holds {}/{} of its states; {:.0}% of that cluster lies in the room",
        (b'a' + o.label as u8) as char,
        o.intersection,
        o.target_size,
        100.0 * o.purity()
    );
}
