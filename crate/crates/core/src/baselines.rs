//! Alternative planning metrics: A* search statistics, information-theoretic
//! bounded rationality, softmax entropies, value-iteration sweeps, and
//! trajectory turns.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maze::{maze_to_mdp, Cell, GridMaze, MazeRewards, StateIndex};
use crate::mdp::{greedy_path, greedy_path_with_rng, value_iteration, Policy, TabularMdp};
use crate::planner::{entropy, kl_divergence, soft_sweep, softmax};

/// Tolerance used for the value-iteration based metrics when none is given.
pub const DEFAULT_VI_TOLERANCE: f64 = 1e-6;

/// Number of greedy trajectories averaged by default in [`trajectory_turns`].
pub const DEFAULT_TURN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AStarResult {
    /// Start to goal inclusive, when the goal is reachable.
    pub path: Option<Vec<Cell>>,
    /// Cells popped from the frontier before the goal, in pop order.
    pub expanded: Vec<Cell>,
    pub expanded_count: usize,
    /// Frontier insertions, including the start.
    pub inserted_count: usize,
}

impl AStarResult {
    /// Number of moves on the returned path.
    pub fn path_length(&self) -> Option<usize> {
        self.path.as_ref().map(|p| p.len() - 1)
    }

    pub fn expanded_set(&self) -> HashSet<Cell> {
        self.expanded.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    Manhattan,
    /// h ≡ 0, i.e. Dijkstra.
    Zero,
}

/// A* with the Manhattan heuristic. Ties on f go to the smaller h, then row-major order.
pub fn astar(maze: &GridMaze, start: Cell, goal: Cell) -> Result<AStarResult> {
    search(maze, start, goal, Heuristic::Manhattan)
}

/// Best-first search over the open cells of `maze`.
///
/// Each pop of a non-goal cell counts as one expansion; the search stops as
/// soon as the goal is popped. When the goal is unreachable every reachable
/// cell ends up expanded and `path` is `None`.
pub fn search(maze: &GridMaze, start: Cell, goal: Cell, heuristic: Heuristic) -> Result<AStarResult> {
    for (name, c) in [("start", start), ("goal", goal)] {
        if !maze.in_bounds(c) || maze.is_wall(c) {
            return Err(Error::InvalidMaze(format!("{name} {c} is not an open cell")));
        }
    }
    let h = |c: Cell| match heuristic {
        Heuristic::Manhattan => c.manhattan(goal),
        Heuristic::Zero => 0,
    };
    let w = maze.width();
    let idx = |c: Cell| c.row * w + c.col;
    let mut g = vec![usize::MAX; w * maze.height()];
    let mut parent: Vec<Option<Cell>> = vec![None; w * maze.height()];
    let mut closed = vec![false; w * maze.height()];
    let mut frontier = BinaryHeap::new();
    g[idx(start)] = 0;
    frontier.push(Reverse((h(start), h(start), start.row, start.col)));
    let mut inserted_count = 1;
    let mut expanded = Vec::new();

    while let Some(Reverse((_, _, row, col))) = frontier.pop() {
        let cell = Cell::new(row, col);
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == goal {
            if expanded.is_empty() {
                expanded.push(start);
            }
            let mut path = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            let expanded_count = expanded.len();
            return Ok(AStarResult { path: Some(path), expanded, expanded_count, inserted_count });
        }
        expanded.push(cell);
        let g_cell = g[idx(cell)];
        for next in maze.neighbors(cell) {
            let i = idx(next);
            if closed[i] || g_cell + 1 >= g[i] {
                continue;
            }
            g[i] = g_cell + 1;
            parent[i] = Some(cell);
            frontier.push(Reverse((g[i] + h(next), h(next), next.row, next.col)));
            inserted_count += 1;
        }
    }
    let expanded_count = expanded.len();
    Ok(AStarResult { path: None, expanded, expanded_count, inserted_count })
}

/// Cells A* expands from `post` that it did not already expand from `pre`.
pub fn astar_node_difference(maze: &GridMaze, pre: Cell, post: Cell, goal: Cell) -> Result<usize> {
    let before = astar(maze, pre, goal)?;
    let after = astar(maze, post, goal)?;
    if before.path.is_none() || after.path.is_none() {
        return Err(Error::InvalidMaze("goal unreachable from a teleport endpoint".into()));
    }
    let seen = before.expanded_set();
    Ok(after.expanded_set().difference(&seen).count())
}

/// Free-energy values of information-theoretic bounded rationality with a
/// uniform prior: `V(s) = (1/α) log Σ_a prior(a) exp(α Q(s, a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItbrSolution {
    pub values: Vec<f64>,
    pub q: Vec<f64>,
    pub alpha: f64,
}

impl ItbrSolution {
    /// `pi_α(·|s) ∝ prior · exp(α Q(s, ·))` with the uniform prior.
    pub fn policy_row(&self, s: usize, n_actions: usize) -> Vec<f64> {
        softmax(&self.q[s * n_actions..(s + 1) * n_actions], self.alpha)
    }
}

fn log_mean_exp(q: &[f64], alpha: f64) -> f64 {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean: f64 = q.iter().map(|v| (alpha * (v - max)).exp()).sum::<f64>() / q.len() as f64;
    max + mean.ln() / alpha
}

pub fn itbr_solve(mdp: &TabularMdp, alpha: f64, tolerance: f64) -> Result<ItbrSolution> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let gamma = mdp.discount();
    let mut values = vec![0.0; n];
    let mut q = vec![0.0; n * na];
    loop {
        let mut delta: f64 = 0.0;
        let mut next = vec![0.0; n];
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..na {
                q[s * na + a] = mdp.backup(s, a, &values);
            }
            next[s] = log_mean_exp(&q[s * na..(s + 1) * na], alpha);
            delta = delta.max((next[s] - values[s]).abs());
        }
        values = next;
        if gamma * delta < tolerance || delta == 0.0 {
            break;
        }
    }
    let q = mdp.q_from_values(&values);
    Ok(ItbrSolution { values, q, alpha })
}

/// KL of the bounded-rational policy from the uniform prior at `start`, in nats.
pub fn itbr_first_step_cost(mdp: &TabularMdp, alpha: f64, start: usize) -> Result<f64> {
    let sol = itbr_solve(mdp, alpha, DEFAULT_VI_TOLERANCE * 1e-3)?;
    if mdp.is_terminal(start) {
        return Ok(0.0);
    }
    let na = mdp.n_actions();
    let pi = sol.policy_row(start, na);
    Ok(kl_divergence(&pi, &vec![1.0 / na as f64; na]).expect("uniform prior has full support"))
}

/// Entropy of softmax(β Q*(state, ·)) in nats.
pub fn softmax_entropy(q_star: &[f64], n_actions: usize, state: usize, beta: f64) -> f64 {
    entropy(&softmax(&q_star[state * n_actions..(state + 1) * n_actions], beta))
}

/// Entropy at `state` of the soft-Bellman policy with β at every state, iterated to convergence.
pub fn soft_bellman_entropy(mdp: &TabularMdp, state: usize, beta: f64, tolerance: f64) -> Result<f64> {
    let policy = soft_bellman_policy(mdp, beta, tolerance)?;
    Ok(entropy(policy.row(state)))
}

/// Fixed point of the soft-Bellman sweep with a uniform inverse temperature.
pub fn soft_bellman_policy(mdp: &TabularMdp, beta: f64, tolerance: f64) -> Result<Policy> {
    if !(tolerance > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let betas = vec![beta; n];
    let mut q = vec![0.0; n * na];
    let mut next = vec![0.0; n * na];
    let mut pi = vec![0.0; n * na];
    let mut v = vec![0.0; n];
    const MAX_SWEEPS: usize = 1_000_000;
    for _ in 0..MAX_SWEEPS {
        soft_sweep(mdp, &betas, &q, &mut pi, &mut v, Some(&mut next));
        let delta = q.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut q, &mut next);
        if delta < tolerance {
            soft_sweep(mdp, &betas, &q, &mut pi, &mut v, None);
            return Policy::new(n, na, pi);
        }
    }
    Err(Error::Config("soft-Bellman iteration did not converge".into()))
}

/// Value-iteration sweeps to convergence.
pub fn vi_iterations(mdp: &TabularMdp, tolerance: f64) -> Result<usize> {
    Ok(value_iteration(mdp, tolerance)?.iterations)
}

/// Mean number of action changes along `n_samples` greedy trajectories from `start`.
pub fn trajectory_turns(mdp: &TabularMdp, q_star: &[f64], start: usize, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0usize;
    for _ in 0..n_samples {
        let t = greedy_path_with_rng(mdp, q_star, start, &mut rng)?;
        total += t.actions.windows(2).filter(|w| w[0] != w[1]).count();
    }
    Ok(total as f64 / n_samples as f64)
}

/// Shortest start-to-goal path length of `maze`, read off a greedy trajectory
/// of value iteration under the default maze rewards.
pub fn optimal_plan_length(maze: &GridMaze) -> Result<usize> {
    optimal_path_length_from(maze, maze.start())
}

/// [`optimal_plan_length`] from an arbitrary open cell.
pub fn optimal_path_length_from(maze: &GridMaze, from: Cell) -> Result<usize> {
    let r = MazeRewards::default();
    let mdp = maze_to_mdp(maze, r.step_reward, r.goal_reward, r.discount)?;
    let index = StateIndex::new(maze);
    let state = index
        .state(from)
        .ok_or_else(|| Error::InvalidMaze(format!("{from} is not an open cell")))?;
    let vi = value_iteration(&mdp, 1e-10)?;
    Ok(greedy_path(&mdp, &vi.q, state, 0)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{parse_maze, four_rooms};
    use crate::mdp::Outcome;

    fn bandit(q: &[f64]) -> TabularMdp {
        let mut outcomes: Vec<Vec<Outcome>> = q.iter().map(|&r| vec![Outcome { next: 1, prob: 1.0, reward: r }]).collect();
        outcomes.extend(q.iter().map(|_| vec![]));
        TabularMdp::new(2, q.len(), outcomes, 0.9, vec![false, true]).unwrap()
    }

    #[test]
    fn open_grid_corner_to_corner() {
        let m = parse_maze("G..\n...\n..S\n").unwrap();
        let r = astar(&m, m.start(), m.goal()).unwrap();
        assert_eq!(r.path_length(), Some(4));
        assert!(r.expanded.contains(&m.start()));
        assert_eq!(r.expanded_count, r.expanded.len());
        assert_eq!(optimal_plan_length(&m).unwrap(), 4);
    }

    #[test]
    fn unreachable_target_expands_component() {
        let island = parse_maze("G.#.\n..#S\n").unwrap_err();
        assert_eq!(island, crate::MazeParseError::UnreachableGoal);
        let m = parse_maze("G.#.\nS.#.\n").unwrap();
        let r = astar(&m, m.start(), Cell::new(0, 3)).unwrap();
        assert!(r.path.is_none());
        assert_eq!(r.expanded_count, 4);
        assert!(astar_node_difference(&m, m.start(), Cell::new(1, 3), m.goal()).is_err());
    }

    #[test]
    fn dijkstra_expands_at_least_as_many() {
        let (_, maze) = crate::maze::build_four_rooms();
        let a = astar(&maze, maze.start(), maze.goal()).unwrap();
        let d = search(&maze, maze.start(), maze.goal(), Heuristic::Zero).unwrap();
        assert_eq!(a.path_length(), d.path_length());
        assert_eq!(a.path_length(), Some(20));
        assert!(d.expanded_count >= a.expanded_count);
    }

    #[test]
    fn node_difference_of_same_state_is_zero() {
        let (_, maze) = crate::maze::build_four_rooms();
        let pre = Cell::new(9, 2);
        assert_eq!(astar_node_difference(&maze, pre, pre, maze.goal()).unwrap(), 0);
    }

    #[test]
    fn itbr_bandit_closed_form() {
        let mdp = bandit(&[1.0, 0.0]);
        let cost = itbr_first_step_cost(&mdp, 1.0, 0).unwrap();
        let e = std::f64::consts::E;
        let p = e / (1.0 + e);
        let expected = p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln();
        assert!((cost - expected).abs() < 1e-12);
        assert!((cost - 0.1109).abs() < 1e-3);
    }

    #[test]
    fn softmax_entropy_limits() {
        assert!((softmax_entropy(&[3.0; 4], 4, 0, 1.0) - 4f64.ln()).abs() < 1e-12);
        assert!(softmax_entropy(&[100.0, 0.0, 0.0, 0.0], 4, 0, 1.0) < 1e-40);
    }

    #[test]
    fn identical_actions_have_max_entropy() {
        let mdp = bandit(&[0.5, 0.5, 0.5, 0.5]);
        let h = soft_bellman_entropy(&mdp, 0, 1.0, 1e-12).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn corridor_and_l_turns() {
        let corridor = parse_maze("G...S\n").unwrap();
        let w = crate::maze::GridWorld::new(corridor, MazeRewards::default()).unwrap();
        let vi = value_iteration(&w.mdp, 1e-10).unwrap();
        assert_eq!(trajectory_turns(&w.mdp, &vi.q, w.start_state(), 10, 1).unwrap(), 0.0);
        assert_eq!(optimal_plan_length(&w.maze).unwrap(), 4);

        let l = parse_maze("G##\n.##\n..S\n").unwrap();
        let w = crate::maze::GridWorld::new(l, MazeRewards::default()).unwrap();
        let vi = value_iteration(&w.mdp, 1e-10).unwrap();
        assert_eq!(trajectory_turns(&w.mdp, &vi.q, w.start_state(), 10, 1).unwrap(), 1.0);
    }

    #[test]
    fn myopic_vi_iterations() {
        let w = four_rooms();
        let myopic = w.mdp.with_discount(0.0).unwrap();
        assert_eq!(vi_iterations(&myopic, 1e-6).unwrap(), 1);
    }

    #[test]
    fn four_rooms_entropies_in_range() {
        let w = four_rooms();
        let vi = value_iteration(&w.mdp, 1e-10).unwrap();
        let h = softmax_entropy(&vi.q, 4, w.start_state(), 1.0);
        assert!(h > 0.0 && h < 4f64.ln());
        let itbr = itbr_first_step_cost(&w.mdp, 100.0, w.start_state()).unwrap();
        assert!(itbr > 0.0 && itbr < 4f64.ln());
    }
}
