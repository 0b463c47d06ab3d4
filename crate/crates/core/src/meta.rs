//! Planning to plan: optimizing the temperature field by gradient descent.
//!
//! For temperatures beta, each ground state `s` builds its partial plan, pays
//! `c(s) = Σ_x KL[pi(·|x; s) || default(·|x)]`, and acts with `pi(·|s; s)`.
//! The meta-value solves the linear fixed point
//!
//! ```text
//! V(s) = Σ_a pi(a|s; s) Σ_s' T(s,a,s') [R(s,a,s') + γ V(s')] − λ c(s)
//! ```
//!
//! and the loss is `−Σ_s w(s) V(s)`. Gradients flow backwards through the
//! evaluation fixed point by its adjoint system and through the `H` unrolled
//! soft-Bellman sweeps by reverse-mode accumulation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{Policy, TabularMdp};
use crate::planner::{self, kl_divergence, sigmoid, PartialPlan, TemperatureField};

/// Default interval for the initial raw parameters: beta between about 0.0025 and 0.018,
/// i.e. almost no planning anywhere.
pub const INIT_RAW_RANGE: (f64, f64) = (-6.0, -4.0);

/// Default Adam step size for the raw temperatures.
pub const DEFAULT_STEP_SIZE: f64 = 0.3;

/// Initial raw interval of [`MetaPlanConfig::gentle`].
pub const GENTLE_INIT_RAW_RANGE: (f64, f64) = (-4.0, -2.0);

/// Adam step size of [`MetaPlanConfig::gentle`].
pub const GENTLE_STEP_SIZE: f64 = 0.05;

/// States above this count are evaluated iteratively rather than by a direct solve.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMethod {
    /// Direct solve below [`DIRECT_SOLVE_LIMIT`] states, iterative above.
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossWeighting {
    /// L = −Σ_s V(s).
    AllStates,
    /// L = −V(start).
    StartState(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaPlanConfig {
    pub lambda: f64,
    pub outer_iterations: usize,
    pub horizon: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Raw parameters are initialized uniformly on `[init_range.0, init_range.1)`.
    pub init_range: (f64, f64),
    pub eval_tolerance: f64,
    pub eval_method: EvalMethod,
    pub weighting: LossWeighting,
    /// Uniform when absent.
    pub default_policy: Option<Policy>,
}

impl Default for MetaPlanConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            outer_iterations: 200,
            horizon: 100,
            adam: AdamConfig { step_size: DEFAULT_STEP_SIZE, ..AdamConfig::default() },
            seed: 0,
            init_range: INIT_RAW_RANGE,
            eval_tolerance: 1e-10,
            eval_method: EvalMethod::Auto,
            weighting: LossWeighting::AllStates,
            default_policy: None,
        }
    }
}

impl MetaPlanConfig {
    /// Smaller Adam steps from a warmer start. After N = 200 steps the plans
    /// are softer than under the default settings and no row is close to
    /// deterministic, so symmetric plan distances stay moderate. Used for
    /// clustering states by their plans.
    pub fn gentle() -> Self {
        Self {
            adam: AdamConfig { step_size: GENTLE_STEP_SIZE, ..AdamConfig::default() },
            init_range: GENTLE_INIT_RAW_RANGE,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.outer_iterations == 0 {
            return Err(Error::Config("outer_iterations must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.adam.step_size > 0.0) {
            return Err(Error::Config("Adam step size must be positive".into()));
        }
        if !(self.init_range.0 < self.init_range.1) || !self.init_range.0.is_finite() || !self.init_range.1.is_finite() {
            return Err(Error::Config("init_range must be a finite, non-empty interval".into()));
        }
        if !(self.eval_tolerance > 0.0) {
            return Err(Error::Config("eval_tolerance must be positive".into()));
        }
        Ok(())
    }

    fn default_for(&self, mdp: &TabularMdp) -> Result<Policy> {
        match &self.default_policy {
            Some(p) => {
                crate::mdp::check_policy_shape(mdp, p)?;
                Ok(p.clone())
            }
            None => Ok(Policy::uniform(mdp.n_states(), mdp.n_actions())),
        }
    }

    fn weights(&self, n: usize) -> Result<Vec<f64>> {
        match self.weighting {
            LossWeighting::AllStates => Ok(vec![1.0; n]),
            LossWeighting::StartState(s) if s < n => {
                let mut w = vec![0.0; n];
                w[s] = 1.0;
                Ok(w)
            }
            LossWeighting::StartState(s) => Err(Error::Config(format!("start state {s} out of range"))),
        }
    }

    fn method(&self, n: usize) -> EvalMethod {
        match self.eval_method {
            EvalMethod::Auto if n < DIRECT_SOLVE_LIMIT => EvalMethod::Direct,
            EvalMethod::Auto => EvalMethod::Iterative,
            m => m,
        }
    }
}

/// Solves the meta-value fixed point directly. Terminal states are pinned to 0.
pub fn evaluate_meta_value(mdp: &TabularMdp, acted: &Policy, costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    evaluate_meta_value_with(mdp, acted, costs, lambda, EvalMethod::Direct, 1e-10)
}

pub fn evaluate_meta_value_with(
    mdp: &TabularMdp,
    acted: &Policy,
    costs: &[f64],
    lambda: f64,
    method: EvalMethod,
    tolerance: f64,
) -> Result<Vec<f64>> {
    crate::mdp::check_policy_shape(mdp, acted)?;
    let n = mdp.n_states();
    if costs.len() != n {
        return Err(Error::Dimension(format!("{n} costs expected, got {}", costs.len())));
    }
    if let Some(s) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFiniteCost(s));
    }
    if !lambda.is_finite() {
        return Err(Error::Config("lambda must be finite".into()));
    }
    let rhs = meta_rewards(mdp, acted, costs, lambda);
    let method = match method {
        EvalMethod::Auto if n < DIRECT_SOLVE_LIMIT => EvalMethod::Direct,
        EvalMethod::Auto => EvalMethod::Iterative,
        m => m,
    };
    match method {
        EvalMethod::Direct => linalg::solve(evaluation_matrix(mdp, acted, false), &rhs),
        _ => Ok(iterate_fixed_point(mdp, acted, &rhs, false, tolerance)),
    }
}

/// r(s) = Σ_a pi(a|s) E[R] − λ c(s) at non-terminal states, 0 at terminals.
fn meta_rewards(mdp: &TabularMdp, acted: &Policy, costs: &[f64], lambda: f64) -> Vec<f64> {
    (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                0.0
            } else {
                (0..mdp.n_actions())
                    .map(|a| acted.prob(s, a) * mdp.expected_reward(s, a))
                    .sum::<f64>()
                    - lambda * costs[s]
            }
        })
        .collect()
}

/// I − γ P_pi with terminal rows left as identity; transposed when `transpose`.
fn evaluation_matrix(mdp: &TabularMdp, acted: &Policy, transpose: bool) -> linalg::Matrix {
    let gamma = mdp.discount();
    let mut m = linalg::identity(mdp.n_states());
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            let p = acted.prob(s, a);
            if p == 0.0 {
                continue;
            }
            for o in mdp.outcomes(s, a) {
                if transpose {
                    m[(o.next, s)] -= gamma * p * o.prob;
                } else {
                    m[(s, o.next)] -= gamma * p * o.prob;
                }
            }
        }
    }
    m
}

/// Fixed-point iteration of x = rhs + γ P x (or its transpose), stopped once the
/// contraction bound γ/(1−γ)·‖Δ‖∞ drops below `tolerance`.
fn iterate_fixed_point(mdp: &TabularMdp, acted: &Policy, rhs: &[f64], transpose: bool, tolerance: f64) -> Vec<f64> {
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let mut x = rhs.to_vec();
    let mut next = vec![0.0; n];
    let bound = if gamma > 0.0 { gamma / (1.0 - gamma) } else { 0.0 };
    loop {
        next.copy_from_slice(rhs);
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..mdp.n_actions() {
                let p = acted.prob(s, a);
                if p == 0.0 {
                    continue;
                }
                for o in mdp.outcomes(s, a) {
                    if transpose {
                        next[o.next] += gamma * p * o.prob * x[s];
                    } else {
                        next[s] += gamma * p * o.prob * x[o.next];
                    }
                }
            }
        }
        let delta = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if bound * delta < tolerance || delta == 0.0 {
            return x;
        }
    }
}

/// Loss, raw-parameter gradient and the intermediate quantities of one evaluation.
#[derive(Debug, Clone)]
pub struct LossEvaluation {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub costs: Vec<f64>,
    pub v_lambda: Vec<f64>,
    pub acted: Policy,
}

struct Forward {
    tapes: Vec<planner::RolloutTape>,
    betas: Vec<Vec<f64>>,
    costs: Vec<f64>,
    acted: Policy,
    v_lambda: Vec<f64>,
    loss: f64,
}

fn forward(mdp: &TabularMdp, temps: &TemperatureField, config: &MetaPlanConfig, default: &Policy) -> Result<Forward> {
    config.validate()?;
    let n = mdp.n_states();
    let na = mdp.n_actions();
    if temps.n_states() != n {
        return Err(Error::Dimension("temperature field and MDP disagree on state count".into()));
    }
    let per_state: Vec<(Vec<f64>, planner::RolloutTape, f64)> = (0..n)
        .into_par_iter()
        .map(|s| {
            let betas = temps.betas(s);
            if let Some(x) = betas.iter().position(|b| !b.is_finite()) {
                return Err(Error::NonFiniteBeta { ground: s, simulated: x });
            }
            let tape = planner::rollout_tape(mdp, &betas, config.horizon);
            let cost = if mdp.is_terminal(s) {
                0.0
            } else {
                (0..n)
                    .filter(|&x| !mdp.is_terminal(x))
                    .map(|x| {
                        kl_divergence(&tape.pi[x * na..(x + 1) * na], default.row(x))
                            .ok_or(Error::Support { state: x, action: 0 })
                    })
                    .sum::<Result<f64>>()?
            };
            Ok((betas, tape, cost))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut probs = Vec::with_capacity(n * na);
    let mut betas = Vec::with_capacity(n);
    let mut tapes = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    for (s, (b, tape, c)) in per_state.into_iter().enumerate() {
        probs.extend_from_slice(&tape.pi[s * na..(s + 1) * na]);
        betas.push(b);
        tapes.push(tape);
        costs.push(c);
    }
    let acted = normalized_policy(n, na, probs);
    let v_lambda = evaluate_meta_value_with(
        mdp,
        &acted,
        &costs,
        config.lambda,
        config.method(n),
        config.eval_tolerance,
    )?;
    let weights = config.weights(n)?;
    let loss = -weights.iter().zip(&v_lambda).map(|(w, v)| w * v).sum::<f64>();
    Ok(Forward { tapes, betas, costs, acted, v_lambda, loss })
}

fn normalized_policy(n: usize, na: usize, mut probs: Vec<f64>) -> Policy {
    for row in probs.chunks_mut(na) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    Policy::new(n, na, probs).expect("softmax rows are distributions")
}

/// Loss only; the finite-difference oracle in the tests differentiates this.
pub fn meta_loss(mdp: &TabularMdp, temps: &TemperatureField, config: &MetaPlanConfig) -> Result<f64> {
    let default = config.default_for(mdp)?;
    Ok(forward(mdp, temps, config, &default)?.loss)
}

/// Loss `−Σ_s w(s) V_λ(s)` and its exact gradient with respect to the raw
/// temperature parameters.
pub fn meta_loss_and_gradient(mdp: &TabularMdp, temps: &TemperatureField, config: &MetaPlanConfig) -> Result<(f64, Vec<f64>)> {
    let eval = evaluate_loss(mdp, temps, config)?;
    Ok((eval.loss, eval.grad))
}

pub fn evaluate_loss(mdp: &TabularMdp, temps: &TemperatureField, config: &MetaPlanConfig) -> Result<LossEvaluation> {
    let default = config.default_for(mdp)?;
    let fwd = forward(mdp, temps, config, &default)?;
    let n = mdp.n_states();
    let na = mdp.n_actions();

    // Adjoint of (I − γ P) V = r − λ c:  (I − γ P)^T u = w.
    let weights = config.weights(n)?;
    let u = match config.method(n) {
        EvalMethod::Iterative => iterate_fixed_point(mdp, &fwd.acted, &weights, true, config.eval_tolerance),
        _ => linalg::solve(evaluation_matrix(mdp, &fwd.acted, true), &weights)?,
    };

    let raw = temps.raw();
    let grads: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            if mdp.is_terminal(s) || u[s] == 0.0 {
                return vec![0.0; n];
            }
            // dL/dpi(a|s;s) = −u(s) Q_λ(s, a),  dL/dc(s) = λ u(s).
            let grad_pi: Vec<f64> = (0..na).map(|a| -u[s] * mdp.backup(s, a, &fwd.v_lambda)).collect();
            let grad_beta = planner::rollout_backward(
                mdp,
                &fwd.betas[s],
                &fwd.tapes[s],
                s,
                &grad_pi,
                config.lambda * u[s],
                &default,
            );
            grad_beta
                .iter()
                .zip(&raw[s * n..(s + 1) * n])
                .map(|(g, r)| g * sigmoid(*r))
                .collect()
        })
        .collect();
    let grad = grads.concat();
    Ok(LossEvaluation { loss: fwd.loss, grad, costs: fwd.costs, v_lambda: fwd.v_lambda, acted: fwd.acted })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaPlanResult {
    pub config: MetaPlanConfig,
    pub beta_star: TemperatureField,
    pub plans: PartialPlan,
    /// Plan cost c(s) per ground state, in nats (zero at terminals).
    pub costs: Vec<f64>,
    pub v_lambda: Vec<f64>,
    /// Loss at the temperatures before each Adam step; length N.
    pub loss_history: Vec<f64>,
    pub wall_time: f64,
}

impl MetaPlanResult {
    /// pi(·|s; s) at every state.
    pub fn acted_policy(&self) -> Policy {
        self.plans.acted_policy()
    }

    /// Per-simulated-state KL contributions of the plan built at `ground`.
    pub fn kl_map(&self, ground: usize) -> &[f64] {
        &self.plans.slice(ground).kl
    }
}

/// Gradient-based planning to plan: N Adam steps on the raw temperatures.
pub fn optimize(mdp: &TabularMdp, config: &MetaPlanConfig) -> Result<MetaPlanResult> {
    config.validate()?;
    let (low, high) = config.init_range;
    let init = TemperatureField::random(mdp.n_states(), low, high, config.seed);
    optimize_from(mdp, config, init)
}

/// [`optimize`] from a caller-supplied initial field.
pub fn optimize_from(mdp: &TabularMdp, config: &MetaPlanConfig, init: TemperatureField) -> Result<MetaPlanResult> {
    config.validate()?;
    let started = Instant::now();
    let mut temps = init;
    let mut adam = Adam::new(config.adam, temps.raw().len());
    let mut loss_history = Vec::with_capacity(config.outer_iterations);
    for iteration in 0..config.outer_iterations {
        let eval = evaluate_loss(mdp, &temps, config)?;
        if !eval.loss.is_finite() || eval.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { iteration });
        }
        loss_history.push(eval.loss);
        adam.step(temps.raw_mut(), &eval.grad);
    }
    let default = config.default_for(mdp)?;
    let mut plans = planner::partial_plan(mdp, &temps, config.horizon, &default)?;
    for (s, slice) in plans.slices.iter_mut().enumerate() {
        if mdp.is_terminal(s) {
            slice.total_cost = 0.0;
        }
    }
    let costs = plans.costs();
    let v_lambda = evaluate_meta_value_with(
        mdp,
        &plans.acted_policy(),
        &costs,
        config.lambda,
        config.method(mdp.n_states()),
        config.eval_tolerance,
    )?;
    if v_lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { iteration: config.outer_iterations });
    }
    Ok(MetaPlanResult {
        config: config.clone(),
        beta_star: temps,
        plans,
        costs,
        v_lambda,
        loss_history,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Expected discounted task reward of `acted` with no planning cost deducted.
pub fn task_value(mdp: &TabularMdp, acted: &Policy) -> Result<Vec<f64>> {
    evaluate_meta_value(mdp, acted, &vec![0.0; mdp.n_states()], 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub lambda: f64,
    pub planning_cost: f64,
    pub expected_value: f64,
}

/// Runs [`optimize`] once per λ and records, at `probe`, the plan cost and the
/// task value of the acted policies. Sorted by λ.
pub fn pareto_sweep(mdp: &TabularMdp, lambdas: &[f64], probe: usize, base: &MetaPlanConfig) -> Result<Vec<ParetoPoint>> {
    let mut distinct = lambdas.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Config("a Pareto sweep needs at least two distinct lambda values".into()));
    }
    if probe >= mdp.n_states() {
        return Err(Error::Config(format!("probe state {probe} out of range")));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|lambda| {
            let config = MetaPlanConfig { lambda, ..base.clone() };
            let result = optimize(mdp, &config)?;
            let value = task_value(mdp, &result.acted_policy())?;
            Ok(ParetoPoint { lambda, planning_cost: result.costs[probe], expected_value: value[probe] })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, value_iteration, Outcome};

    fn self_loop(reward: f64, gamma: f64) -> TabularMdp {
        let out = vec![Outcome { next: 0, prob: 1.0, reward }];
        TabularMdp::new(1, 2, vec![out.clone(), out], gamma, vec![false]).unwrap()
    }

    #[test]
    fn self_loop_geometric_series() {
        let mdp = self_loop(2.0, 0.9);
        let v = evaluate_meta_value(&mdp, &Policy::uniform(1, 2), &[0.0], 0.0).unwrap();
        assert!((v[0] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn constant_cost_shifts_by_geometric_sum() {
        let mdp = self_loop(1.0, 0.8);
        let pi = Policy::uniform(1, 2);
        let base = evaluate_meta_value(&mdp, &pi, &[0.7], 0.0).unwrap();
        let costly = evaluate_meta_value(&mdp, &pi, &[0.7], 0.5).unwrap();
        assert!((base[0] - costly[0] - 0.5 * 0.7 / (1.0 - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn optimal_policy_recovers_vstar() {
        let mdp = random_mdp(6, 3, 0.9, true, 5).unwrap();
        let vi = value_iteration(&mdp, 1e-12).unwrap();
        let pi = Policy::greedy(&vi.q, 3);
        let v = evaluate_meta_value(&mdp, &pi, &[0.0; 6], 0.0).unwrap();
        for (a, b) in v.iter().zip(&vi.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn direct_and_iterative_agree() {
        let mdp = random_mdp(5, 2, 0.95, true, 9).unwrap();
        let pi = Policy::uniform(5, 2);
        let costs = [0.1, 0.3, 0.0, 0.2, 0.0];
        let d = evaluate_meta_value_with(&mdp, &pi, &costs, 0.5, EvalMethod::Direct, 1e-12).unwrap();
        let i = evaluate_meta_value_with(&mdp, &pi, &costs, 0.5, EvalMethod::Iterative, 1e-12).unwrap();
        for (a, b) in d.iter().zip(&i) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn non_finite_cost_rejected() {
        let mdp = self_loop(1.0, 0.5);
        assert!(matches!(
            evaluate_meta_value(&mdp, &Policy::uniform(1, 2), &[f64::NAN], 1.0),
            Err(Error::NonFiniteCost(0))
        ));
    }

    #[test]
    fn iterative_adjoint_matches_direct_gradient() {
        let mdp = random_mdp(5, 3, 0.9, true, 21).unwrap();
        let temps = TemperatureField::random(5, -1.0, 1.5, 4);
        let direct = MetaPlanConfig { lambda: 0.1, horizon: 6, eval_method: EvalMethod::Direct, ..Default::default() };
        let iterative = MetaPlanConfig { eval_method: EvalMethod::Iterative, eval_tolerance: 1e-13, ..direct.clone() };
        let (l1, g1) = meta_loss_and_gradient(&mdp, &temps, &direct).unwrap();
        let (l2, g2) = meta_loss_and_gradient(&mdp, &temps, &iterative).unwrap();
        assert!((l1 - l2).abs() < 1e-9);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_actions_give_zero_gradient() {
        // Every action has the same outcome distribution and reward.
        let base = random_mdp(4, 1, 0.9, true, 6).unwrap();
        let mut outcomes = Vec::new();
        for s in 0..4 {
            for _ in 0..3 {
                outcomes.push(base.outcomes(s, 0).to_vec());
            }
        }
        let mdp = TabularMdp::new(4, 3, outcomes, 0.9, base.terminal_flags().to_vec()).unwrap();
        let temps = TemperatureField::constant(4, 0.0);
        let config = MetaPlanConfig { lambda: 0.3, horizon: 5, ..Default::default() };
        let (_, grad) = meta_loss_and_gradient(&mdp, &temps, &config).unwrap();
        assert!(grad.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn config_validation() {
        let bad = [
            MetaPlanConfig { outer_iterations: 0, ..Default::default() },
            MetaPlanConfig { horizon: 0, ..Default::default() },
            MetaPlanConfig { lambda: -1.0, ..Default::default() },
            MetaPlanConfig {
                adam: AdamConfig { step_size: 0.0, ..Default::default() },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn pareto_needs_two_lambdas() {
        let mdp = random_mdp(3, 2, 0.9, true, 1).unwrap();
        let cfg = MetaPlanConfig { outer_iterations: 2, horizon: 3, ..Default::default() };
        assert!(pareto_sweep(&mdp, &[0.1, 0.1], 0, &cfg).is_err());
        assert!(pareto_sweep(&mdp, &[0.1], 0, &cfg).is_err());
    }

    #[test]
    fn start_state_weighting_only_counts_start() {
        let mdp = random_mdp(4, 2, 0.9, true, 12).unwrap();
        let temps = TemperatureField::random(4, -1.0, 1.0, 3);
        let cfg = MetaPlanConfig {
            lambda: 0.05,
            horizon: 4,
            weighting: LossWeighting::StartState(1),
            ..Default::default()
        };
        let eval = evaluate_loss(&mdp, &temps, &cfg).unwrap();
        assert!((eval.loss + eval.v_lambda[1]).abs() < 1e-12);
    }
}
