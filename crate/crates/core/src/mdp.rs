//! Tabular MDPs, exact planning and occupancy measures.
//!
//! Transitions are stored sparsely: each `(state, action)` pair owns a list of
//! [`Outcome`]s. Terminal states are absorbing: they carry a single zero-reward
//! self-loop so that every row is a distribution, but every algorithm in this
//! crate pins their value to zero and stops accumulating occupancy there.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used when deciding that two Q-values tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    discount: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// `outcomes` is indexed by `state * n_actions + action`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        discount: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidDiscount(discount));
        }
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Dimension("MDP needs at least one state and one action".into()));
        }
        if outcomes.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "expected {} outcome rows, got {}",
                n_states * n_actions,
                outcomes.len()
            )));
        }
        if terminal.len() != n_states {
            return Err(Error::Dimension(format!(
                "expected {n_states} terminal flags, got {}",
                terminal.len()
            )));
        }
        let mut outcomes = outcomes;
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &mut outcomes[s * n_actions + a];
                if terminal[s] {
                    *row = vec![Outcome { next: s, prob: 1.0, reward: 0.0 }];
                    continue;
                }
                let mut sum = 0.0;
                for o in row.iter() {
                    if o.next >= n_states || !o.prob.is_finite() || o.prob < 0.0 || !o.reward.is_finite() {
                        return Err(Error::BadTransitionRow { state: s, action: a, sum: f64::NAN });
                    }
                    sum += o.prob;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::BadTransitionRow { state: s, action: a, sum });
                }
                row.retain(|o| o.prob > 0.0);
            }
        }
        Ok(Self { n_states, n_actions, outcomes, discount, terminal })
    }

    /// Builds an MDP from dense `transition[s][a][s']` and `reward[s][a][s']` tensors.
    pub fn from_dense(
        transition: &[Vec<Vec<f64>>],
        reward: &[Vec<Vec<f64>>],
        discount: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, Vec::len);
        let mut outcomes = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            if transition[s].len() != n_actions || reward.get(s).map_or(true, |r| r.len() != n_actions) {
                return Err(Error::Dimension(format!("ragged action axis at state {s}")));
            }
            for a in 0..n_actions {
                let row: Vec<Outcome> = transition[s][a]
                    .iter()
                    .zip(&reward[s][a])
                    .enumerate()
                    .filter(|(_, (&p, _))| p != 0.0)
                    .map(|(next, (&prob, &reward))| Outcome { next, prob, reward })
                    .collect();
                outcomes.push(row);
            }
        }
        Self::new(n_states, n_actions, outcomes, discount, terminal)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.n_actions + a]
    }

    /// Dense transition probability T(s, a, s').
    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a).iter().filter(|o| o.next == next).map(|o| o.prob).sum()
    }

    /// Dense reward R(s, a, s'); zero where the transition is impossible.
    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.reward)
    }

    /// Same dynamics with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidDiscount(discount));
        }
        Ok(Self { discount, ..self.clone() })
    }

    /// Same dynamics with every reward multiplied by `factor`.
    pub fn scale_rewards(&self, factor: f64) -> Self {
        self.map_rewards(|r| r * factor)
    }

    /// Same dynamics with `offset` added to every non-terminal reward.
    pub fn shift_rewards(&self, offset: f64) -> Self {
        self.map_rewards(|r| r + offset)
    }

    fn map_rewards(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for s in 0..self.n_states {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                for o in &mut out.outcomes[s * self.n_actions + a] {
                    o.reward = f(o.reward);
                }
            }
        }
        out
    }

    /// One-step backup Σ_{s'} T(s,a,s') [R(s,a,s') + γ V(s')].
    #[inline]
    pub fn backup(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        self.outcomes(s, a)
            .iter()
            .map(|o| o.prob * (o.reward + self.discount * values[o.next]))
            .sum()
    }

    /// Expected immediate reward of `a` at `s`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.outcomes(s, a).iter().map(|o| o.prob * o.reward).sum()
    }

    /// Q-values of `values` at every (s, a), row-major by state.
    pub fn q_from_values(&self, values: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_states * self.n_actions];
        for s in 0..self.n_states {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                q[s * self.n_actions + a] = self.backup(s, a, values);
            }
        }
        q
    }
}

/// Stochastic matrix over (state, action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions || n_actions == 0 {
            return Err(Error::Dimension(format!(
                "policy needs {} entries, got {}",
                n_states * n_actions,
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidPolicy(format!("negative or non-finite entry at state {s}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Self { n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Deterministic policy choosing `actions[s]` at every state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        Self { n_actions, probs }
    }

    /// Greedy policy on `q`, splitting mass evenly over tied maxima.
    pub fn greedy(q: &[f64], n_actions: usize) -> Self {
        let mut probs = vec![0.0; q.len()];
        for (row, out) in q.chunks(n_actions).zip(probs.chunks_mut(n_actions)) {
            let ties = tied_argmax(row);
            for &a in &ties {
                out[a] = 1.0 / ties.len() as f64;
            }
        }
        Self { n_actions, probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub total_reward: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult {
    pub values: Vec<f64>,
    /// Row-major by state, `n_actions` entries per state.
    pub q: Vec<f64>,
    pub iterations: usize,
}

impl ValueIterationResult {
    pub fn q_row(&self, s: usize, n_actions: usize) -> &[f64] {
        &self.q[s * n_actions..(s + 1) * n_actions]
    }
}

/// Bellman optimality sweeps from V = 0.
///
/// Sweep k maps V_{k-1} to V_k. Iteration stops once γ·‖V_k − V_{k-1}‖∞ < tolerance,
/// which bounds the Bellman residual of the returned V_k by the tolerance. A myopic
/// MDP (γ = 0) therefore converges after a single sweep.
pub fn value_iteration(mdp: &TabularMdp, tolerance: f64) -> Result<ValueIterationResult> {
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let gamma = mdp.discount();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut delta: f64 = 0.0;
        for s in 0..n {
            next[s] = if mdp.is_terminal(s) {
                0.0
            } else {
                (0..na).map(|a| mdp.backup(s, a, &values)).fold(f64::NEG_INFINITY, f64::max)
            };
            delta = delta.max((next[s] - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        if gamma * delta < tolerance || delta == 0.0 {
            break;
        }
    }
    let q = mdp.q_from_values(&values);
    Ok(ValueIterationResult { values, q, iterations })
}

/// Actions whose value is within [`TIE_TOLERANCE`] (relative) of the row maximum.
pub fn tied_argmax(row: &[f64]) -> Vec<usize> {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    row.iter()
        .enumerate()
        .filter(|(_, &q)| q >= best - tol)
        .map(|(a, _)| a)
        .collect()
}

/// Follows argmax-Q actions from `start` until a terminal state, breaking ties
/// uniformly at random under `seed`.
///
/// Fails with [`Error::Unreachable`] if no terminal state is reached within
/// `n_states` steps on a deterministic greedy path.
pub fn greedy_path(mdp: &TabularMdp, q: &[f64], start: usize, seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    greedy_path_with_rng(mdp, q, start, &mut rng)
}

pub(crate) fn greedy_path_with_rng<R: Rng>(
    mdp: &TabularMdp,
    q: &[f64],
    start: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let na = mdp.n_actions();
    let mut states = vec![start];
    let mut actions = Vec::new();
    let mut total_reward = 0.0;
    let mut s = start;
    let max_steps = mdp.n_states() * 4;
    while !mdp.is_terminal(s) {
        if actions.len() >= max_steps {
            return Err(Error::Unreachable(start));
        }
        let ties = tied_argmax(&q[s * na..(s + 1) * na]);
        let a = ties[rng.gen_range(0..ties.len())];
        let outs = mdp.outcomes(s, a);
        let o = if outs.len() == 1 {
            outs[0]
        } else {
            let w = WeightedIndex::new(outs.iter().map(|o| o.prob)).expect("valid transition row");
            outs[w.sample(rng)]
        };
        total_reward += o.reward;
        actions.push(a);
        states.push(o.next);
        s = o.next;
    }
    Ok(Trajectory { states, actions, total_reward })
}

/// Normalized discounted occupancy ρ(s) ∝ Σ_t γ^t Pr{s_t = s | s_0 = start}.
///
/// Mass stops accumulating once a terminal state is entered: the terminal
/// state receives the weight of the step at which it is reached and nothing after.
pub fn discounted_occupancy(mdp: &TabularMdp, policy: &Policy, start: usize) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    check_policy_shape(mdp, policy)?;
    if start >= n {
        return Err(Error::Dimension(format!("start state {start} out of range")));
    }
    let gamma = mdp.discount();
    // (I - γ P'^T) d = e_start, where P' has terminal rows zeroed.
    let mut a = linalg::identity(n);
    for s in 0..n {
        if mdp.is_terminal(s) {
            continue;
        }
        for act in 0..mdp.n_actions() {
            let p = policy.prob(s, act);
            if p == 0.0 {
                continue;
            }
            for o in mdp.outcomes(s, act) {
                a[(o.next, s)] -= gamma * p * o.prob;
            }
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[start] = 1.0;
    let mut d = linalg::solve(a, &rhs)?;
    for x in &mut d {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = d.iter().sum();
    Ok(d.into_iter().map(|x| x / total).collect())
}

pub(crate) fn check_policy_shape(mdp: &TabularMdp, policy: &Policy) -> Result<()> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::Dimension(format!(
            "policy is {}x{}, MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// Samples a trajectory under `policy`, stopping at a terminal state or after `max_steps` actions.
pub fn sample_trajectory(
    mdp: &TabularMdp,
    policy: &Policy,
    start: usize,
    seed: u64,
    max_steps: usize,
) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be positive".into()));
    }
    check_policy_shape(mdp, policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = vec![start];
    let mut actions = Vec::new();
    let mut total_reward = 0.0;
    let mut s = start;
    while !mdp.is_terminal(s) && actions.len() < max_steps {
        let a = sample_index(policy.row(s), &mut rng);
        let outs = mdp.outcomes(s, a);
        let o = outs[sample_index_by(outs.iter().map(|o| o.prob), &mut rng)];
        total_reward += o.reward;
        actions.push(a);
        states.push(o.next);
        s = o.next;
    }
    Ok(Trajectory { states, actions, total_reward })
}

fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    sample_index_by(probs.iter().copied(), rng)
}

fn sample_index_by<R: Rng>(probs: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let nonzero: Vec<(usize, f64)> = probs.enumerate().filter(|(_, p)| *p > 0.0).collect();
    if nonzero.len() == 1 {
        return nonzero[0].0;
    }
    let u: f64 = rng.gen();
    let total: f64 = nonzero.iter().map(|(_, p)| p).sum();
    let mut acc = 0.0;
    for &(i, p) in &nonzero {
        acc += p / total;
        if u < acc {
            return i;
        }
    }
    nonzero.last().expect("non-empty distribution").0
}

/// Random MDP with `n_states` states (the last one terminal when `with_terminal`),
/// dense stochastic transitions and rewards uniform in [-1, 1].
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    discount: f64,
    with_terminal: bool,
    seed: u64,
) -> Result<TabularMdp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(n_states * n_actions);
    let mut terminal = vec![false; n_states];
    if with_terminal && n_states > 1 {
        terminal[n_states - 1] = true;
    }
    for _ in 0..n_states {
        for _ in 0..n_actions {
            let weights: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut row: Vec<Outcome> = weights
                .iter()
                .enumerate()
                .map(|(next, w)| Outcome { next, prob: w / total, reward: rng.gen_range(-1.0..1.0) })
                .collect();
            // Renormalize so the row sums to 1 to machine precision.
            let sum: f64 = row.iter().map(|o| o.prob).sum();
            for o in &mut row {
                o.prob /= sum;
            }
            outcomes.push(row);
        }
    }
    TabularMdp::new(n_states, n_actions, outcomes, discount, terminal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> TabularMdp {
        // s0 -> s1 (terminal) under the only action.
        TabularMdp::new(
            2,
            1,
            vec![vec![Outcome { next: 1, prob: 1.0, reward: 1.0 }], vec![]],
            0.5,
            vec![false, true],
        )
        .unwrap()
    }

    fn two_cycle() -> TabularMdp {
        let out = |n| vec![Outcome { next: n, prob: 1.0, reward: 0.0 }];
        TabularMdp::new(2, 2, vec![out(1), out(1), out(0), out(0)], 0.9, vec![false, false]).unwrap()
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        let row = vec![Outcome { next: 0, prob: 0.5, reward: 0.0 }];
        assert!(matches!(
            TabularMdp::new(1, 1, vec![row.clone()], 0.5, vec![false]),
            Err(Error::BadTransitionRow { .. })
        ));
        let ok = vec![Outcome { next: 0, prob: 1.0, reward: 0.0 }];
        assert!(matches!(
            TabularMdp::new(1, 1, vec![ok], 1.0, vec![false]),
            Err(Error::InvalidDiscount(_))
        ));
    }

    #[test]
    fn occupancy_of_two_state_chain() {
        let mdp = chain();
        let rho = discounted_occupancy(&mdp, &Policy::uniform(2, 1), 0).unwrap();
        assert!((rho[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((rho[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_from_terminal_is_indicator() {
        let mdp = chain();
        let rho = discounted_occupancy(&mdp, &Policy::uniform(2, 1), 1).unwrap();
        assert_eq!(rho, vec![0.0, 1.0]);
    }

    #[test]
    fn myopic_value_iteration_takes_one_sweep() {
        let mdp = random_mdp(4, 3, 0.0, false, 3).unwrap();
        let vi = value_iteration(&mdp, 1e-9).unwrap();
        assert_eq!(vi.iterations, 1);
    }

    #[test]
    fn value_iteration_is_greedy_consistent() {
        let mdp = random_mdp(6, 3, 0.9, true, 11).unwrap();
        let vi = value_iteration(&mdp, 1e-10).unwrap();
        for s in 0..6 {
            if mdp.is_terminal(s) {
                assert_eq!(vi.values[s], 0.0);
                continue;
            }
            let best = vi.q_row(s, 3).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((best - vi.values[s]).abs() <= 1e-10);
        }
    }

    #[test]
    fn uniform_two_cycle_respects_step_bound() {
        let mdp = two_cycle();
        let t = sample_trajectory(&mdp, &Policy::uniform(2, 2), 0, 5, 10).unwrap();
        assert_eq!(t.states.len(), 11);
        assert_eq!(t.actions.len(), 10);
    }

    #[test]
    fn deterministic_sampling_ignores_seed() {
        let mdp = two_cycle();
        let pi = Policy::deterministic(&[0, 1], 2);
        let a = sample_trajectory(&mdp, &pi, 0, 1, 7).unwrap();
        let b = sample_trajectory(&mdp, &pi, 0, 99, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_rows_validated() {
        assert!(Policy::new(1, 2, vec![0.7, 0.2]).is_err());
        assert!(Policy::new(1, 2, vec![-0.1, 1.1]).is_err());
        assert!(Policy::new(1, 2, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn dense_round_trip() {
        let mdp = random_mdp(3, 2, 0.8, false, 4).unwrap();
        let t: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|s| (0..2).map(|a| (0..3).map(|n| mdp.transition(s, a, n)).collect()).collect())
            .collect();
        let r: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|s| (0..2).map(|a| (0..3).map(|n| mdp.reward(s, a, n)).collect()).collect())
            .collect();
        let back = TabularMdp::from_dense(&t, &r, 0.8, vec![false; 3]).unwrap();
        assert_eq!(back, mdp);
    }
}
