//! Partial planning by soft-Bellman sweeps under a per-state inverse
//! temperature field, and the KL cost of the resulting plan.
//!
//! For a ground state `s` the planner runs exactly `H` sweeps over simulated
//! states `x` starting from `Q_0 = 0`:
//!
//! ```text
//! pi_t(a | x)  ∝ exp(beta(x; s) * Q_t(x, a))
//! V_t(x)       = Σ_a pi_t(a | x) Q_t(x, a)
//! Q_{t+1}(x,a) = Σ_x' T(x, a, x') [R(x, a, x') + γ V_t(x')]
//! ```
//!
//! and reports `pi_H`, `Q_H` and `V_H`. Terminal simulated states have a
//! single no-op: their value is zero, their plan row is uniform and they
//! contribute no planning cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Derivative of [`softplus`].
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax of `beta * q` into `out`, shifted by the maximum logit.
pub fn softmax_into(q: &[f64], beta: f64, out: &mut [f64]) {
    let max = q.iter().map(|v| beta * v).fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, v) in out.iter_mut().zip(q) {
        *o = (beta * v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax(q: &[f64], beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    softmax_into(q, beta, &mut out);
    out
}

/// D_KL[p || q] in nats. Entries with `p = 0` contribute nothing.
///
/// Returns `None` if `q` is zero somewhere `p` is positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return None;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Some(kl.max(0.0))
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Inverse temperatures beta(x; s) >= 0 for every (ground, simulated) pair,
/// stored as unconstrained raw parameters mapped through softplus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureField {
    n_states: usize,
    raw: Vec<f64>,
}

impl TemperatureField {
    pub fn from_raw(n_states: usize, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != n_states * n_states {
            return Err(Error::Dimension(format!(
                "temperature field needs {} raw parameters, got {}",
                n_states * n_states,
                raw.len()
            )));
        }
        Ok(Self { n_states, raw })
    }

    /// Raw parameters drawn uniformly from `[low, high)`.
    pub fn random(n_states: usize, low: f64, high: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = (0..n_states * n_states).map(|_| rng.gen_range(low..high)).collect();
        Self { n_states, raw }
    }

    /// Constant field. `beta = 0` maps to raw `-inf`, whose softplus is exactly zero.
    pub fn constant(n_states: usize, beta: f64) -> Self {
        let raw = if beta <= 0.0 { f64::NEG_INFINITY } else { softplus_inverse(beta) };
        Self { n_states, raw: vec![raw; n_states * n_states] }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.raw
    }

    pub fn beta(&self, ground: usize, simulated: usize) -> f64 {
        softplus(self.raw[ground * self.n_states + simulated])
    }

    /// beta(·; ground) over all simulated states.
    pub fn betas(&self, ground: usize) -> Vec<f64> {
        self.raw[ground * self.n_states..(ground + 1) * self.n_states]
            .iter()
            .map(|&r| softplus(r))
            .collect()
    }
}

/// The partial plan built from one ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSlice {
    pub ground: usize,
    pub n_actions: usize,
    /// pi(a | x; s), row-major by simulated state.
    pub pi: Vec<f64>,
    /// Q(x, a; s), row-major by simulated state.
    pub q: Vec<f64>,
    /// V(x; s).
    pub v: Vec<f64>,
    /// D_KL[pi(·|x; s) || default(·|x)] in nats.
    pub kl: Vec<f64>,
    /// Σ_x kl(x).
    pub total_cost: f64,
}

impl PlanSlice {
    pub fn n_states(&self) -> usize {
        self.v.len()
    }

    pub fn pi_row(&self, x: usize) -> &[f64] {
        &self.pi[x * self.n_actions..(x + 1) * self.n_actions]
    }

    pub fn q_row(&self, x: usize) -> &[f64] {
        &self.q[x * self.n_actions..(x + 1) * self.n_actions]
    }

    /// The plan as a [`Policy`] over simulated states.
    pub fn policy(&self) -> Policy {
        Policy::new(self.n_states(), self.n_actions, self.pi.clone())
            .unwrap_or_else(|_| renormalized_policy(&self.pi, self.n_actions))
    }
}

fn renormalized_policy(pi: &[f64], n_actions: usize) -> Policy {
    let mut probs = pi.to_vec();
    for row in probs.chunks_mut(n_actions) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    Policy::new(pi.len() / n_actions, n_actions, probs).expect("renormalized rows")
}

/// Partial plans from every ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialPlan {
    pub slices: Vec<PlanSlice>,
}

impl PartialPlan {
    pub fn slice(&self, ground: usize) -> &PlanSlice {
        &self.slices[ground]
    }

    pub fn n_states(&self) -> usize {
        self.slices.len()
    }

    /// Total plan cost per ground state.
    pub fn costs(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.total_cost).collect()
    }

    /// pi(· | s; s) at every ground state, the policy the agent actually acts on.
    pub fn acted_policy(&self) -> Policy {
        let n_actions = self.slices.first().map_or(1, |s| s.n_actions);
        let probs: Vec<f64> = self
            .slices
            .iter()
            .flat_map(|s| s.pi_row(s.ground).iter().copied())
            .collect();
        Policy::new(self.slices.len(), n_actions, probs.clone())
            .unwrap_or_else(|_| renormalized_policy(&probs, n_actions))
    }
}

/// Q history of one rollout, kept for reverse-mode differentiation.
pub(crate) struct RolloutTape {
    /// `q[t]` for t = 0..=H, each row-major (x, a).
    pub q: Vec<Vec<f64>>,
    /// `plans[t]` = pi_t for t = 0..H (the final plan is `pi`).
    pub plans: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub v: Vec<f64>,
}

fn check_betas(betas: &[f64], ground: usize) -> Result<()> {
    match betas.iter().position(|b| !b.is_finite() || *b < 0.0) {
        Some(x) => Err(Error::NonFiniteBeta { ground, simulated: x }),
        None => Ok(()),
    }
}

/// One sweep: given `q`, writes the plan `pi`, its value `v`, and the next `q_next`.
pub(crate) fn soft_sweep(
    mdp: &TabularMdp,
    betas: &[f64],
    q: &[f64],
    pi: &mut [f64],
    v: &mut [f64],
    q_next: Option<&mut [f64]>,
) {
    let na = mdp.n_actions();
    for x in 0..mdp.n_states() {
        let row = x * na..(x + 1) * na;
        if mdp.is_terminal(x) {
            pi[row].fill(1.0 / na as f64);
            v[x] = 0.0;
            continue;
        }
        softmax_into(&q[row.clone()], betas[x], &mut pi[row.clone()]);
        v[x] = pi[row.clone()].iter().zip(&q[row]).map(|(p, q)| p * q).sum();
    }
    if let Some(q_next) = q_next {
        for x in 0..mdp.n_states() {
            for a in 0..na {
                q_next[x * na + a] = if mdp.is_terminal(x) { 0.0 } else { mdp.backup(x, a, v) };
            }
        }
    }
}

pub(crate) fn rollout_tape(mdp: &TabularMdp, betas: &[f64], horizon: usize) -> RolloutTape {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut q = Vec::with_capacity(horizon + 1);
    q.push(vec![0.0; n * na]);
    let mut plans = Vec::with_capacity(horizon);
    let mut v = vec![0.0; n];
    for t in 0..horizon {
        let mut next = vec![0.0; n * na];
        let mut pi = vec![0.0; n * na];
        soft_sweep(mdp, betas, &q[t], &mut pi, &mut v, Some(&mut next));
        q.push(next);
        plans.push(pi);
    }
    let mut pi = vec![0.0; n * na];
    soft_sweep(mdp, betas, &q[horizon], &mut pi, &mut v, None);
    RolloutTape { q, plans, pi, v }
}

/// Runs `horizon` soft-Bellman sweeps from `ground` and prices the plan
/// against the uniform default policy.
pub fn soft_bellman_rollout(
    mdp: &TabularMdp,
    temps: &TemperatureField,
    ground: usize,
    horizon: usize,
) -> Result<PlanSlice> {
    let default = Policy::uniform(mdp.n_states(), mdp.n_actions());
    rollout_with_default(mdp, temps, ground, horizon, &default)
}

/// [`soft_bellman_rollout`] priced against an arbitrary default policy.
pub fn rollout_with_default(
    mdp: &TabularMdp,
    temps: &TemperatureField,
    ground: usize,
    horizon: usize,
    default: &Policy,
) -> Result<PlanSlice> {
    if temps.n_states() != mdp.n_states() {
        return Err(Error::Dimension("temperature field and MDP disagree on state count".into()));
    }
    rollout_betas(mdp, &temps.betas(ground), ground, horizon, default)
}

/// Rollout with explicit inverse temperatures for every simulated state.
pub fn rollout_betas(
    mdp: &TabularMdp,
    betas: &[f64],
    ground: usize,
    horizon: usize,
    default: &Policy,
) -> Result<PlanSlice> {
    if horizon == 0 {
        return Err(Error::Config("planning horizon must be at least 1".into()));
    }
    if betas.len() != mdp.n_states() {
        return Err(Error::Dimension("one inverse temperature per simulated state".into()));
    }
    check_betas(betas, ground)?;
    let tape = rollout_tape(mdp, betas, horizon);
    let mut slice = PlanSlice {
        ground,
        n_actions: mdp.n_actions(),
        pi: tape.pi,
        q: tape.q.into_iter().next_back().expect("non-empty tape"),
        v: tape.v,
        kl: Vec::new(),
        total_cost: 0.0,
    };
    let (kl, total) = plan_cost_masked(&slice, default, mdp.terminal_flags())?;
    slice.kl = kl;
    slice.total_cost = total;
    Ok(slice)
}

/// Per-simulated-state KL of `slice` from `default`, and their sum.
pub fn plan_cost(slice: &PlanSlice, default: &Policy) -> Result<(Vec<f64>, f64)> {
    plan_cost_masked(slice, default, &[])
}

fn plan_cost_masked(slice: &PlanSlice, default: &Policy, terminal: &[bool]) -> Result<(Vec<f64>, f64)> {
    if default.n_states() != slice.n_states() || default.n_actions() != slice.n_actions {
        return Err(Error::Dimension("default policy shape does not match plan".into()));
    }
    let mut kl = Vec::with_capacity(slice.n_states());
    for x in 0..slice.n_states() {
        if terminal.get(x).copied().unwrap_or(false) {
            kl.push(0.0);
            continue;
        }
        let p = slice.pi_row(x);
        let q = default.row(x);
        match kl_divergence(p, q) {
            Some(d) => kl.push(d),
            None => {
                let action = p.iter().zip(q).position(|(p, q)| *p > 0.0 && *q <= 0.0).unwrap_or(0);
                return Err(Error::Support { state: x, action });
            }
        }
    }
    let total = kl.iter().sum();
    Ok((kl, total))
}

/// Every ground state's plan under `temps`.
pub fn partial_plan(mdp: &TabularMdp, temps: &TemperatureField, horizon: usize, default: &Policy) -> Result<PartialPlan> {
    use rayon::prelude::*;
    let slices = (0..mdp.n_states())
        .into_par_iter()
        .map(|s| rollout_with_default(mdp, temps, s, horizon, default))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialPlan { slices })
}

/// Reverse pass through one rollout.
///
/// `grad_pi_ground` is dLoss/dpi_H(a | ground) for the acted row, `cost_weight`
/// is dLoss/dC for the plan cost C = Σ_x KL[pi_H(·|x) || default(·|x)].
/// Returns dLoss/dbeta(x) for every simulated state.
pub(crate) fn rollout_backward(
    mdp: &TabularMdp,
    betas: &[f64],
    tape: &RolloutTape,
    ground: usize,
    grad_pi_ground: &[f64],
    cost_weight: f64,
    default: &Policy,
) -> Vec<f64> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let gamma = mdp.discount();
    let horizon = tape.q.len() - 1;
    let mut grad_beta = vec![0.0; n];
    let mut grad_q = vec![0.0; n * na];

    // Final softmax: logits z = beta * q_H.
    let q_h = &tape.q[horizon];
    for x in 0..n {
        if mdp.is_terminal(x) {
            continue;
        }
        let row = x * na..(x + 1) * na;
        let pi = &tape.pi[row.clone()];
        let mut grad_z = vec![0.0; na];
        if cost_weight != 0.0 {
            let d = default.row(x);
            let kl: f64 = pi
                .iter()
                .zip(d)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, q)| p * (p / q).ln())
                .sum();
            for a in 0..na {
                if pi[a] > 0.0 {
                    grad_z[a] += cost_weight * pi[a] * ((pi[a] / d[a]).ln() - kl);
                }
            }
        }
        if x == ground {
            let mean: f64 = pi.iter().zip(grad_pi_ground).map(|(p, g)| p * g).sum();
            for a in 0..na {
                grad_z[a] += pi[a] * (grad_pi_ground[a] - mean);
            }
        }
        let qx = &q_h[row.clone()];
        grad_beta[x] += grad_z.iter().zip(qx).map(|(g, q)| g * q).sum::<f64>();
        for a in 0..na {
            grad_q[x * na + a] = betas[x] * grad_z[a];
        }
    }

    let mut grad_v = vec![0.0; n];
    for t in (0..horizon).rev() {
        // q_{t+1}(x, a) = Σ T [R + γ v_t(x')]
        grad_v.fill(0.0);
        for x in 0..n {
            if mdp.is_terminal(x) {
                continue;
            }
            for a in 0..na {
                let g = grad_q[x * na + a];
                if g == 0.0 {
                    continue;
                }
                for o in mdp.outcomes(x, a) {
                    grad_v[o.next] += gamma * o.prob * g;
                }
            }
        }
        if t == 0 {
            // q_0 is the constant zero, so nothing upstream depends on beta.
            break;
        }
        // v_t(x) = Σ_a softmax(beta_x q_t(x, ·))_a q_t(x, a)
        let q_t = &tape.q[t];
        let pi_t = &tape.plans[t];
        for x in 0..n {
            let row = x * na..(x + 1) * na;
            if mdp.is_terminal(x) {
                grad_q[row].fill(0.0);
                continue;
            }
            let qx = &q_t[row.clone()];
            let pi = &pi_t[row];
            let v: f64 = pi.iter().zip(qx).map(|(p, q)| p * q).sum();
            let gv = grad_v[x];
            let mut gb = 0.0;
            for a in 0..na {
                let gz = gv * pi[a] * (qx[a] - v);
                gb += gz * qx[a];
                grad_q[x * na + a] = gv * pi[a] + betas[x] * gz;
            }
            grad_beta[x] += gb;
        }
    }
    grad_beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, Outcome};

    fn bandit(rewards: &[f64]) -> TabularMdp {
        // One non-terminal state whose actions all lead to a terminal state.
        let mut outcomes: Vec<Vec<Outcome>> = rewards
            .iter()
            .map(|&r| vec![Outcome { next: 1, prob: 1.0, reward: r }])
            .collect();
        outcomes.extend(rewards.iter().map(|_| vec![]));
        TabularMdp::new(2, rewards.len(), outcomes, 0.9, vec![false, true]).unwrap()
    }

    #[test]
    fn softplus_pair() {
        for x in [-40.0, -3.0, 0.0, 0.5, 7.0, 45.0] {
            assert!((softplus_inverse(softplus(x)) - x).abs() < 1e-9 * x.abs().max(1.0));
        }
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn zero_beta_is_uniform_and_free() {
        let mdp = random_mdp(5, 3, 0.9, true, 2).unwrap();
        let temps = TemperatureField::constant(5, 0.0);
        let slice = soft_bellman_rollout(&mdp, &temps, 0, 10).unwrap();
        for p in &slice.pi {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(slice.kl.iter().all(|k| *k == 0.0));
        assert_eq!(slice.total_cost, 0.0);
    }

    #[test]
    fn bandit_softmax_closed_form() {
        let mdp = bandit(&[1.0, 0.0]);
        let temps = TemperatureField::constant(2, 1.0);
        let slice = soft_bellman_rollout(&mdp, &temps, 0, 1).unwrap();
        let e = std::f64::consts::E;
        assert!((slice.pi[0] - e / (1.0 + e)).abs() < 1e-12);
        assert!((slice.pi[1] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((slice.pi[0] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn value_is_plan_average_of_q() {
        let mdp = random_mdp(6, 3, 0.9, true, 8).unwrap();
        let temps = TemperatureField::random(6, -1.0, 2.0, 1);
        let slice = soft_bellman_rollout(&mdp, &temps, 2, 7).unwrap();
        for x in 0..6 {
            let v: f64 = slice.pi_row(x).iter().zip(slice.q_row(x)).map(|(p, q)| p * q).sum();
            assert_eq!(v, slice.v[x]);
        }
        assert!((slice.total_cost - slice.kl.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn near_deterministic_row_costs_log_four() {
        let mut slice = PlanSlice {
            ground: 0,
            n_actions: 4,
            pi: vec![0.25; 8],
            q: vec![0.0; 8],
            v: vec![0.0; 2],
            kl: vec![],
            total_cost: 0.0,
        };
        slice.pi[..4].copy_from_slice(&[1.0 - 3e-12, 1e-12, 1e-12, 1e-12]);
        let (kl, total) = plan_cost(&slice, &Policy::uniform(2, 4)).unwrap();
        assert!((kl[0] - 4f64.ln()).abs() < 1e-9);
        assert_eq!(kl[1], 0.0);
        assert!((total - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn support_violation_detected() {
        let slice = PlanSlice {
            ground: 0,
            n_actions: 2,
            pi: vec![0.5, 0.5],
            q: vec![0.0; 2],
            v: vec![0.0],
            kl: vec![],
            total_cost: 0.0,
        };
        let default = Policy::new(1, 2, vec![1.0, 0.0]).unwrap();
        assert!(matches!(plan_cost(&slice, &default), Err(Error::Support { state: 0, action: 1 })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mdp = random_mdp(3, 2, 0.9, false, 1).unwrap();
        let default = Policy::uniform(3, 2);
        assert!(matches!(
            rollout_betas(&mdp, &[1.0, f64::NAN, 1.0], 0, 3, &default),
            Err(Error::NonFiniteBeta { ground: 0, simulated: 1 })
        ));
        assert!(rollout_betas(&mdp, &[1.0; 3], 0, 0, &default).is_err());
    }

    #[test]
    fn bandit_value_nondecreasing_in_beta() {
        let mdp = bandit(&[0.3, -0.2, 1.1, 0.9]);
        let mut last = f64::NEG_INFINITY;
        for beta in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0] {
            let slice = soft_bellman_rollout(&mdp, &TemperatureField::constant(2, beta), 0, 3).unwrap();
            assert!(slice.v[0] >= last - 1e-15);
            last = slice.v[0];
        }
    }
}
