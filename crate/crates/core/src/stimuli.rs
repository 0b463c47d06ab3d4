//! Stimulus pipelines: random maze generation, selection of mazes spanning a
//! range of planning costs, the symmetry-expanded teleport design, and the
//! per-maze and per-event predictor records.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    astar, astar_node_difference, itbr_first_step_cost, optimal_path_length_from, soft_bellman_entropy,
    softmax_entropy, trajectory_turns, vi_iterations, DEFAULT_TURN_SAMPLES,
};
use crate::error::{Error, Result};
use crate::maze::{apply_symmetry, Cell, GridMaze, GridWorld, MazeRewards, Symmetry};
use crate::mdp::value_iteration;
use crate::meta::{optimize, MetaPlanConfig, MetaPlanResult};
use crate::probes::{partial_plan_divergence_with, simulate_teleport_events, teleport_distance, TeleportEvent};

/// Highest wall density accepted by [`generate_mazes`].
pub const MAX_WALL_DENSITY: f64 = 0.6;

/// Rejection-sampling budget per maze.
pub const MAX_ATTEMPTS: usize = 100_000;

/// A maze with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMaze {
    pub id: String,
    pub maze: GridMaze,
}

/// Random mazes with the start in the lower-right corner and the goal in the
/// upper-left. Each maze draws its wall density uniformly from
/// `density_range`, then walls every other cell independently with that
/// probability, redrawing until the goal is reachable.
pub fn generate_mazes(
    width: usize,
    height: usize,
    count: usize,
    seed: u64,
    density_range: (f64, f64),
) -> Result<Vec<NamedMaze>> {
    if width < 3 || height < 3 {
        return Err(Error::Config(format!("mazes must be at least 3x3, got {width}x{height}")));
    }
    if count == 0 {
        return Err(Error::Config("count must be >= 1".into()));
    }
    let (lo, hi) = density_range;
    if !(0.0..=MAX_WALL_DENSITY).contains(&lo) || !(0.0..=MAX_WALL_DENSITY).contains(&hi) || lo > hi {
        return Err(Error::Config(format!("densities must satisfy 0 <= low <= high <= {MAX_WALL_DENSITY}")));
    }
    let start = Cell::new(height - 1, width - 1);
    let goal = Cell::new(0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digits = (count - 1).to_string().len().max(4);
    (0..count)
        .map(|i| {
            let density = if lo == hi { lo } else { rng.gen_range(lo..hi) };
            for _ in 0..MAX_ATTEMPTS {
                let walls: Vec<bool> = (0..width * height)
                    .map(|k| {
                        let c = Cell::new(k / width, k % width);
                        c != start && c != goal && rng.gen_bool(density)
                    })
                    .collect();
                if let Ok(maze) = GridMaze::new(width, height, walls, start, goal) {
                    let id = format!("maze_{i:0digits$}");
                    let maze = maze.with_comment(format!("{id} seed={seed} density={density:.4}"));
                    return Ok(NamedMaze { id, maze });
                }
            }
            Err(Error::Config(format!("no solvable maze after {MAX_ATTEMPTS} draws at density {density}")))
        })
        .collect()
}

/// Planning cost of the partial plan at the start state, after meta-planning.
pub fn start_state_cost(maze: &GridMaze, config: &MetaPlanConfig) -> Result<f64> {
    let world = GridWorld::new(maze.clone(), MazeRewards::default())?;
    let result = optimize(&world.mdp, config)?;
    Ok(result.costs[world.start_state()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Indices into the input list, in increasing cost order.
    pub indices: Vec<usize>,
    /// Start-state cost of every input maze.
    pub costs: Vec<f64>,
    /// True when fewer distinct costs than requested picks forced sampling with replacement.
    pub fallback: bool,
}

/// Ranks mazes by start-state planning cost, splits the ranking into `k`
/// equal-count bins and samples one maze per bin.
pub fn select_spanning_costs(mazes: &[GridMaze], config: &MetaPlanConfig, k: usize, seed: u64) -> Result<Selection> {
    let costs = mazes
        .par_iter()
        .map(|m| start_state_cost(m, config))
        .collect::<Result<Vec<f64>>>()?;
    let indices = select_by_cost(&costs, k, seed)?;
    let fallback = distinct_count(&costs) < k;
    Ok(Selection { indices, costs, fallback })
}

fn distinct_count(costs: &[f64]) -> usize {
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

/// The stratified draw behind [`select_spanning_costs`], on precomputed costs.
pub fn select_by_cost(costs: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    let m = costs.len();
    if k == 0 || k > m {
        return Err(Error::Config(format!("k must be in 1..={m}, got {k}")));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Config("non-finite cost".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = if distinct_count(costs) >= k {
        (0..k)
            .map(|b| {
                let bin = &order[b * m / k..(b + 1) * m / k];
                bin[rng.gen_range(0..bin.len())]
            })
            .collect()
    } else {
        // One bin per distinct value; bins drawn with replacement.
        let mut bins: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match bins.last_mut() {
                Some(bin) if costs[bin[0]] == costs[i] => bin.push(i),
                _ => bins.push(vec![i]),
            }
        }
        (0..k)
            .map(|_| {
                let bin = bins.choose(&mut rng).expect("at least one bin");
                bin[rng.gen_range(0..bin.len())]
            })
            .collect()
    };
    picks.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    Ok(picks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    Normal,
    Teleport,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Normal => "normal",
            Condition::Teleport => "teleport",
        }
    }
}

/// All eight symmetries of every base maze, ids `<base>_<symmetry>`.
pub fn expand_symmetries(base: &[NamedMaze]) -> Result<Vec<NamedMaze>> {
    let mut out = Vec::with_capacity(base.len() * 8);
    for b in base {
        for sym in Symmetry::ALL {
            let id = format!("{}_{}", b.id, sym.name());
            let maze = apply_symmetry(&b.maze, sym)?.with_comment(id.clone());
            out.push(NamedMaze { id, maze });
        }
    }
    Ok(out)
}

/// Every expanded maze once under each condition.
pub fn teleport_design(base: &[NamedMaze]) -> Result<Vec<(NamedMaze, Condition)>> {
    let mazes = expand_symmetries(base)?;
    Ok([Condition::Normal, Condition::Teleport]
        .into_iter()
        .flat_map(|c| mazes.iter().cloned().map(move |m| (m, c)))
        .collect())
}

/// Settings of the alternative predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub meta: MetaPlanConfig,
    /// Resource parameter of the bounded-rational baseline; 1/alpha plays the role of lambda.
    pub itbr_alpha: f64,
    pub softmax_beta: f64,
    pub soft_bellman_beta: f64,
    pub vi_tolerance: f64,
    pub turn_samples: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        let meta = MetaPlanConfig::default();
        Self {
            itbr_alpha: 1.0 / meta.lambda,
            meta,
            softmax_beta: 1.0,
            soft_bellman_beta: 1.0,
            vi_tolerance: 1e-6,
            turn_samples: DEFAULT_TURN_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRecord {
    pub maze_id: String,
    pub partial_plan_cost: f64,
    pub astar_expanded: usize,
    pub astar_inserted: usize,
    pub optimal_plan_length: usize,
    pub itbr_cost: f64,
    pub softmax_entropy: f64,
    pub soft_bellman_entropy: f64,
    pub vi_iterations: usize,
    pub trajectory_turns: f64,
}

impl PredictorRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "maze_id",
        "partial_plan_cost",
        "astar_expanded",
        "astar_inserted",
        "optimal_plan_length",
        "itbr_cost",
        "softmax_entropy",
        "soft_bellman_entropy",
        "vi_iterations",
        "trajectory_turns",
    ];
}

/// All start-state predictors of one maze.
pub fn compute_predictors(maze: &NamedMaze, config: &PredictorConfig) -> Result<PredictorRecord> {
    let world = GridWorld::new(maze.maze.clone(), MazeRewards::default())?;
    let s0 = world.start_state();
    let result = optimize(&world.mdp, &config.meta)?;
    let search = astar(&world.maze, world.maze.start(), world.maze.goal())?;
    let vi = value_iteration(&world.mdp, config.vi_tolerance)?;
    let record = PredictorRecord {
        maze_id: maze.id.clone(),
        partial_plan_cost: result.costs[s0],
        astar_expanded: search.expanded_count,
        astar_inserted: search.inserted_count,
        optimal_plan_length: optimal_path_length_from(&world.maze, world.maze.start())?,
        itbr_cost: itbr_first_step_cost(&world.mdp, config.itbr_alpha, s0)?,
        softmax_entropy: softmax_entropy(&vi.q, world.mdp.n_actions(), s0, config.softmax_beta),
        soft_bellman_entropy: soft_bellman_entropy(&world.mdp, s0, config.soft_bellman_beta, 1e-10)?,
        vi_iterations: vi_iterations(&world.mdp, config.vi_tolerance)?,
        trajectory_turns: trajectory_turns(&world.mdp, &vi.q, s0, config.turn_samples, config.seed)?,
    };
    Ok(record)
}

/// [`compute_predictors`] over many mazes, in input order.
pub fn compute_all_predictors(mazes: &[NamedMaze], config: &PredictorConfig) -> Result<Vec<PredictorRecord>> {
    mazes.par_iter().map(|m| compute_predictors(m, config)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportRecord {
    pub event: TeleportEvent,
    pub partial_plan_divergence: f64,
    pub astar_destination_nodes: usize,
    pub astar_node_difference: usize,
    pub optimal_path_length_post: usize,
    pub teleport_distance: f64,
}

impl TeleportRecord {
    pub const COLUMNS: [&'static str; 12] = [
        "maze_id",
        "pre_row",
        "pre_col",
        "post_row",
        "post_col",
        "step_index",
        "seed",
        "partial_plan_divergence",
        "astar_destination_nodes",
        "astar_node_difference",
        "optimal_path_length_post",
        "teleport_distance",
    ];
}

/// Predictors of each event, given the meta-planning solution of its maze.
pub fn teleport_records(
    world: &GridWorld,
    result: &MetaPlanResult,
    events: &[TeleportEvent],
    epsilon: f64,
) -> Result<Vec<TeleportRecord>> {
    let goal = world.maze.goal();
    events
        .iter()
        .map(|e| {
            let state = |c: Cell| world.state(c).ok_or_else(|| Error::InvalidMaze(format!("{c} is not an open cell")));
            let (pre, post) = (state(e.pre_state)?, state(e.post_state)?);
            Ok(TeleportRecord {
                event: e.clone(),
                partial_plan_divergence: partial_plan_divergence_with(&result.plans, &world.mdp, pre, post, epsilon)?,
                astar_destination_nodes: astar(&world.maze, e.post_state, goal)?.expanded_count,
                astar_node_difference: astar_node_difference(&world.maze, e.pre_state, e.post_state, goal)?,
                optimal_path_length_post: optimal_path_length_from(&world.maze, e.post_state)?,
                teleport_distance: teleport_distance(e.pre_state, e.post_state),
            })
        })
        .collect()
}

/// Expands the base mazes, solves each expanded maze, draws
/// `events_per_maze` teleports per maze and scores them. Each maze's events
/// use seed `seed + index` in expansion order.
pub fn teleport_experiment(
    base: &[NamedMaze],
    events_per_maze: usize,
    seed: u64,
    config: &MetaPlanConfig,
    epsilon: f64,
) -> Result<Vec<TeleportRecord>> {
    let mazes = expand_symmetries(base)?;
    let per_maze = mazes
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let world = GridWorld::new(m.maze.clone(), MazeRewards::default())?;
            let result = optimize(&world.mdp, config)?;
            let events = simulate_teleport_events(&m.maze, &m.id, events_per_maze, seed.wrapping_add(i as u64))?;
            teleport_records(&world, &result, &events, epsilon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_maze.into_iter().flatten().collect())
}
