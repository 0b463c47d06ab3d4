use std::collections::HashSet;

use proptest::prelude::*;

use metaplan::analysis::{planning_distance_matrix, ward_cluster, DistanceMatrix};
use metaplan::maze::{parse_maze, serialize_maze, Cell, GridMaze};
use metaplan::mdp::{discounted_occupancy, random_mdp, sample_trajectory, Policy};
use metaplan::meta::{optimize, MetaPlanConfig};
use metaplan::planner::{kl_divergence, partial_plan, TemperatureField};
use metaplan::stimuli::{expand_symmetries, generate_mazes, teleport_design, Condition};

fn arb_maze() -> impl Strategy<Value = GridMaze> {
    (2usize..9, 2usize..9, any::<u64>()).prop_filter_map("unsolvable", |(w, h, seed)| {
        let walls: Vec<bool> = (0..w * h).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) % 4 == 0).collect();
        let mut walls = walls;
        let (start, goal) = (Cell::new(h - 1, w - 1), Cell::new(0, 0));
        walls[0] = false;
        walls[w * h - 1] = false;
        GridMaze::new(w, h, walls, start, goal).ok()
    })
}

fn arb_distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let total: f64 = v.iter().sum();
        v.into_iter().map(|x| x / total).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maze_text_round_trips(maze in arb_maze()) {
        let text = serialize_maze(&maze);
        let back = parse_maze(&text).unwrap();
        prop_assert_eq!(serialize_maze(&back), text);
        prop_assert_eq!(back.walls(), maze.walls());
    }

    #[test]
    fn occupancy_is_a_distribution(n in 2usize..7, na in 2usize..4, seed in any::<u64>(), gamma in 0.5f64..0.99) {
        let mdp = random_mdp(n, na, gamma, seed % 2 == 0, seed).unwrap();
        let rho = discounted_occupancy(&mdp, &Policy::uniform(n, na), 0).unwrap();
        prop_assert!(rho.iter().all(|&p| p >= -1e-12));
        prop_assert!((rho.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kl_is_nonnegative((p, q) in (2usize..6).prop_flat_map(|n| (arb_distribution(n), arb_distribution(n)))) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ward_heights_never_decrease(n in 2usize..12, seed in any::<u64>()) {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let h = seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64 * 1442695040888963407);
                ((h >> 11) as f64 / (1u64 << 53) as f64, (h >> 3 & 0xffff) as f64 / 65536.0)
            })
            .collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            }
        }
        let d = ward_cluster(&DistanceMatrix::new(n, values).unwrap());
        prop_assert_eq!(d.merges.len(), n - 1);
        prop_assert!(d.merges.windows(2).all(|w| w[0].height <= w[1].height + 1e-12));
        prop_assert_eq!(d.merges.last().unwrap().size, n);
    }
}

#[test]
fn occupancy_matches_monte_carlo() {
    let mdp = random_mdp(4, 2, 0.8, true, 11).unwrap();
    let policy = Policy::uniform(4, 2);
    let rho = discounted_occupancy(&mdp, &policy, 0).unwrap();
    let mut est = [0.0; 4];
    let runs = 20_000;
    for seed in 0..runs {
        let t = sample_trajectory(&mdp, &policy, 0, seed, 200).unwrap();
        for (k, &s) in t.states.iter().enumerate() {
            est[s] += 0.8f64.powi(k as i32);
        }
    }
    let total: f64 = est.iter().sum();
    for s in 0..4 {
        assert!((est[s] / total - rho[s]).abs() < 0.01, "state {s}: {} vs {}", est[s] / total, rho[s]);
    }
}

#[test]
fn symmetry_expansion_gives_32_distinct_mazes() {
    let base = generate_mazes(12, 12, 4, 3, (0.2, 0.4)).unwrap();
    let expanded = expand_symmetries(&base).unwrap();
    assert_eq!(expanded.len(), 32);
    let texts: HashSet<String> = expanded.iter().map(|m| serialize_maze(&m.maze.clone().without_comment())).collect();
    assert_eq!(texts.len(), 32);
    let design = teleport_design(&base).unwrap();
    assert_eq!(design.len(), 64);
    for cond in [Condition::Normal, Condition::Teleport] {
        let ids: HashSet<&str> = design.iter().filter(|(_, c)| *c == cond).map(|(m, _)| m.id.as_str()).collect();
        assert_eq!(ids.len(), 32);
    }
}

#[test]
fn large_lambda_keeps_plans_near_default() {
    // Rewards are small relative to the cost weight, so planning is not worth it.
    let mdp = random_mdp(5, 3, 0.9, true, 42).unwrap().scale_rewards(0.01);
    let cfg = MetaPlanConfig { lambda: 10.0, horizon: 10, outer_iterations: 200, ..Default::default() };
    let result = optimize(&mdp, &cfg).unwrap();
    assert!(result.costs.iter().all(|&c| c < 0.01), "{:?}", result.costs);
    let acted = result.acted_policy();
    for s in (0..5).filter(|&s| !mdp.is_terminal(s)) {
        let tv: f64 = acted.row(s).iter().map(|p| (p - 1.0 / 3.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "state {s}: tv {tv}");
    }
}

#[test]
fn zero_temperature_plans_are_uniform() {
    let mdp = random_mdp(5, 3, 0.9, true, 9).unwrap();
    let plans = partial_plan(&mdp, &TemperatureField::constant(5, 0.0), 10, &Policy::uniform(5, 3)).unwrap();
    let d = planning_distance_matrix(&plans).unwrap();
    assert!(d.values().iter().all(|v| v.abs() < 1e-12));
}
