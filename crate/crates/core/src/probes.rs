//! Teleportation probes: simulated teleport events and the divergence between
//! the partial plans before and after a teleport.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maze::{Cell, GridMaze, GridWorld, MazeRewards};
use crate::mdp::{discounted_occupancy, greedy_path, value_iteration, TabularMdp};
use crate::planner::PartialPlan;

/// Weight of the uniform distribution mixed into occupancies and plan rows.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeleportEvent {
    pub maze_id: String,
    pub pre_state: Cell,
    pub post_state: Cell,
    /// Steps taken along the optimal path before the teleport, in 1..=path length.
    pub step_index: usize,
    /// Seed of the greedy path that located `pre_state`.
    pub seed: u64,
}

/// Draws `count` teleports. For each, a step count n is uniform on
/// 1..=L (L the optimal path length), the agent stands at the n-th state
/// (start = first) of a seeded greedy optimal path, and reappears at a uniform
/// open non-goal cell. Cells walled off from the goal are never destinations.
pub fn simulate_teleport_events(maze: &GridMaze, maze_id: &str, count: usize, seed: u64) -> Result<Vec<TeleportEvent>> {
    if count == 0 {
        return Err(Error::Config("count must be >= 1".into()));
    }
    let targets: Vec<Cell> = maze.connected_cells(maze.goal()).into_iter().filter(|&c| c != maze.goal()).collect();
    if targets.len() <= 1 {
        return Err(Error::InvalidMaze("no open non-goal cell besides the start".into()));
    }
    let world = GridWorld::new(maze.clone(), MazeRewards::default())?;
    let vi = value_iteration(&world.mdp, 1e-10)?;
    let length = greedy_path(&world.mdp, &vi.q, world.start_state(), seed)?.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let step_index = rng.gen_range(1..=length);
            let path_seed: u64 = rng.gen();
            let path = greedy_path(&world.mdp, &vi.q, world.start_state(), path_seed)?;
            let pre_state = world.cell(path.states[step_index - 1]);
            let post_state = targets[rng.gen_range(0..targets.len())];
            Ok(TeleportEvent { maze_id: maze_id.to_string(), pre_state, post_state, step_index, seed: path_seed })
        })
        .collect()
}

/// D_KL[p_post || p_pre] between state-action joints p(a, x) = pi(a|x) rho(x),
/// each plan's occupancy rolled out from its own ground state.
pub fn partial_plan_divergence(plans: &PartialPlan, mdp: &TabularMdp, pre: usize, post: usize) -> Result<f64> {
    partial_plan_divergence_with(plans, mdp, pre, post, DEFAULT_SMOOTHING)
}

pub fn partial_plan_divergence_with(
    plans: &PartialPlan,
    mdp: &TabularMdp,
    pre: usize,
    post: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Config(format!("smoothing must be in [0, 1), got {epsilon}")));
    }
    let n = mdp.n_states();
    for s in [pre, post] {
        if s >= n || s >= plans.n_states() {
            return Err(Error::Dimension(format!("state {s} out of range")));
        }
    }
    let joint = |ground: usize| -> Result<Vec<f64>> {
        let slice = plans.slice(ground);
        let policy = slice.policy();
        let rho = discounted_occupancy(mdp, &policy, ground)?;
        let na = slice.n_actions;
        let mut p = Vec::with_capacity(n * na);
        for (x, r) in rho.iter().enumerate() {
            let r = (1.0 - epsilon) * r + epsilon / n as f64;
            for &a in policy.row(x) {
                p.push(r * ((1.0 - epsilon) * a + epsilon / na as f64));
            }
        }
        Ok(p)
    };
    let p_post = joint(post)?;
    let p_pre = joint(pre)?;
    let kl: f64 = p_post
        .iter()
        .zip(&p_pre)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Euclidean distance between cell centres.
pub fn teleport_distance(pre: Cell, post: Cell) -> f64 {
    let dr = pre.row as f64 - post.row as f64;
    let dc = pre.col as f64 - post.col as f64;
    dr.hypot(dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{four_rooms, parse_maze};
    use crate::mdp::Policy;
    use crate::planner::{partial_plan, TemperatureField};

    #[test]
    fn distances() {
        assert_eq!(teleport_distance(Cell::new(2, 2), Cell::new(2, 2)), 0.0);
        assert_eq!(teleport_distance(Cell::new(2, 2), Cell::new(2, 3)), 1.0);
        assert_eq!(teleport_distance(Cell::new(0, 0), Cell::new(3, 4)), 5.0);
    }

    #[test]
    fn unit_path_always_first_step() {
        let m = parse_maze("GS.\n").unwrap();
        let events = simulate_teleport_events(&m, "m", 50, 3).unwrap();
        assert!(events.iter().all(|e| e.step_index == 1 && e.pre_state == m.start()));
        assert!(events.iter().all(|e| e.post_state != m.goal()));
    }

    #[test]
    fn needs_somewhere_to_land() {
        let m = parse_maze("GS\n").unwrap();
        assert!(simulate_teleport_events(&m, "m", 1, 0).is_err());
        assert!(simulate_teleport_events(&parse_maze("GS.\n").unwrap(), "m", 0, 0).is_err());
    }

    #[test]
    fn events_are_seeded() {
        let m = four_rooms().maze;
        let a = simulate_teleport_events(&m, "fr", 20, 9).unwrap();
        assert_eq!(a, simulate_teleport_events(&m, "fr", 20, 9).unwrap());
        assert_ne!(a, simulate_teleport_events(&m, "fr", 20, 10).unwrap());
        assert!(a.iter().all(|e| (1..=20).contains(&e.step_index)));
    }

    #[test]
    fn uniform_plans_reduce_to_occupancy_kl() {
        let w = four_rooms();
        let n = w.mdp.n_states();
        let plans = partial_plan(&w.mdp, &TemperatureField::constant(n, 0.0), 5, &Policy::uniform(n, 4)).unwrap();
        let (pre, post) = (w.start_state(), 40);
        let d = partial_plan_divergence(&plans, &w.mdp, pre, post).unwrap();
        let uniform = Policy::uniform(n, 4);
        let smooth = |v: Vec<f64>| -> Vec<f64> {
            v.into_iter().map(|r| (1.0 - DEFAULT_SMOOTHING) * r + DEFAULT_SMOOTHING / n as f64).collect()
        };
        let r_pre = smooth(discounted_occupancy(&w.mdp, &uniform, pre).unwrap());
        let r_post = smooth(discounted_occupancy(&w.mdp, &uniform, post).unwrap());
        let direct: f64 = r_post.iter().zip(&r_pre).map(|(p, q)| p * (p / q).ln()).sum();
        assert!((d - direct).abs() < 1e-9 * direct.max(1.0), "{d} vs {direct}");
        assert_eq!(partial_plan_divergence(&plans, &w.mdp, pre, pre).unwrap(), 0.0);
    }
}
