//! Finite tabular MDPs and the exact solvers the planners build on.
//!
//! States and actions are dense indices. Every non-terminal state defines all
//! actions; terminal states have no outgoing transitions and value zero under
//! every value function. Rewards are expectations attached to `(state, action)`
//! pairs and accrue on the step the action is taken.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_actions: usize,
    terminal: Vec<bool>,
    /// Sparse next-state distributions, indexed by `state * n_actions + action`.
    transitions: Vec<Vec<(usize, f64)>>,
}

impl Mdp {
    /// Builds an MDP from `transitions[state][action] = [(next_state, probability), ..]`.
    ///
    /// Rows for terminal states are ignored and may be empty.
    pub fn new(
        n_actions: usize,
        terminal: Vec<bool>,
        transitions: Vec<Vec<Vec<(usize, f64)>>>,
    ) -> Result<Self> {
        let n_states = terminal.len();
        if n_states == 0 {
            return Err(Error::InvalidMdp("at least one state is required".into()));
        }
        if n_actions == 0 {
            return Err(Error::InvalidMdp("at least one action is required".into()));
        }
        if transitions.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "{} transition rows for {} states",
                transitions.len(),
                n_states
            )));
        }

        let mut flat = Vec::with_capacity(n_states * n_actions);
        for (s, rows) in transitions.into_iter().enumerate() {
            if terminal[s] {
                flat.extend(std::iter::repeat_with(Vec::new).take(n_actions));
                continue;
            }
            if rows.len() != n_actions {
                return Err(Error::InvalidMdp(format!(
                    "state {s} defines {} actions, expected {n_actions}",
                    rows.len()
                )));
            }
            for (a, row) in rows.into_iter().enumerate() {
                let mut total = 0.0;
                let mut kept = Vec::with_capacity(row.len());
                for (next, p) in row {
                    if next >= n_states {
                        return Err(Error::InvalidMdp(format!(
                            "state {s}, action {a}: next state {next} out of range"
                        )));
                    }
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::InvalidMdp(format!(
                            "state {s}, action {a}: invalid probability {p}"
                        )));
                    }
                    total += p;
                    if p > 0.0 {
                        kept.push((next, p));
                    }
                }
                if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::InvalidMdp(format!(
                        "state {s}, action {a}: probabilities sum to {total}"
                    )));
                }
                flat.push(kept);
            }
        }

        Ok(Self {
            n_actions,
            terminal,
            transitions: flat,
        })
    }

    /// Builds an MDP with deterministic moves, `next[state][action]`.
    pub fn deterministic(
        n_actions: usize,
        terminal: Vec<bool>,
        next: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let transitions = next
            .into_iter()
            .map(|row| row.into_iter().map(|s| vec![(s, 1.0)]).collect())
            .collect();
        Self::new(n_actions, terminal, transitions)
    }

    pub fn n_states(&self) -> usize {
        self.terminal.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(|&s| !self.terminal[s])
    }

    /// Next-state distribution; empty for terminal states.
    pub fn transition(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[state * self.n_actions + action]
    }

    /// `E[values(s') | s, a]`.
    pub fn expected(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        self.transition(state, action)
            .iter()
            .map(|&(next, p)| p * values[next])
            .sum()
    }

    /// Row-stochastic matrix of a deterministic policy, dense. Terminal rows are zero.
    pub fn policy_matrix(&self, policy: &Policy) -> Vec<Vec<f64>> {
        let n = self.n_states();
        let mut rows = vec![vec![0.0; n]; n];
        for s in self.non_terminal_states() {
            for &(next, p) in self.transition(s, policy[s]) {
                rows[s][next] += p;
            }
        }
        rows
    }
}

/// A real value per `(state, action)` pair: used for rewards and Q functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTable {
    n_actions: usize,
    data: Vec<f64>,
}

pub type QTable = ActionTable;
pub type RewardTable = ActionTable;

impl ActionTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            data: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::InvalidParameter("ragged action table".into()));
        }
        Ok(Self {
            n_actions,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_states(&self) -> usize {
        self.data.len().checked_div(self.n_actions).unwrap_or(0)
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.data[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.data[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.data[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Elementwise `self + scale * other`.
    pub fn add_scaled(&self, other: &ActionTable, scale: f64) -> ActionTable {
        debug_assert_eq!(self.data.len(), other.data.len());
        ActionTable {
            n_actions: self.n_actions,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ActionTable {
        ActionTable {
            n_actions: self.n_actions,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check_shape(&self, mdp: &Mdp, what: &str) -> Result<()> {
        if self.n_actions != mdp.n_actions() || self.n_states() != mdp.n_states() {
            return Err(Error::InvalidParameter(format!(
                "{what} has shape {}x{}, MDP is {}x{}",
                self.n_states(),
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }

    fn check_finite(&self, mdp: &Mdp, what: &str) -> Result<()> {
        for s in mdp.non_terminal_states() {
            if let Some(a) = self.row(s).iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{what} is not finite at state {s}, action {a}"
                )));
            }
        }
        Ok(())
    }
}

/// Expected rewards of both systems.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPair {
    pub r1: RewardTable,
    pub r2: RewardTable,
}

impl RewardPair {
    pub fn new(r1: RewardTable, r2: RewardTable) -> Self {
        Self { r1, r2 }
    }

    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        self.r1.check_shape(mdp, "r1")?;
        self.r2.check_shape(mdp, "r2")?;
        self.r1.check_finite(mdp, "r1")?;
        self.r2.check_finite(mdp, "r2")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable(Vec<f64>);

impl ValueTable {
    pub fn zeros(n_states: usize) -> Self {
        Self(vec![0.0; n_states])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

impl Index<usize> for ValueTable {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

impl IndexMut<usize> for ValueTable {
    fn index_mut(&mut self, s: usize) -> &mut f64 {
        &mut self.0[s]
    }
}

/// Deterministic policy. Entries at terminal states are unused and kept at 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn from_vec(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        if self.0.len() != mdp.n_states() {
            return Err(Error::InvalidParameter(format!(
                "policy covers {} states, MDP has {}",
                self.0.len(),
                mdp.n_states()
            )));
        }
        for s in mdp.non_terminal_states() {
            if self.0[s] >= mdp.n_actions() {
                return Err(Error::InvalidParameter(format!(
                    "policy assigns action {} at state {s}, only {} actions exist",
                    self.0[s],
                    mdp.n_actions()
                )));
            }
        }
        Ok(())
    }
}

impl Index<usize> for Policy {
    type Output = usize;
    fn index(&self, s: usize) -> &usize {
        &self.0[s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "iteration cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_discount(gamma: f64, name: &str) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1), got {gamma}"
        )));
    }
    Ok(())
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One-step backup `q(s, a) = r(s, a) + gamma * E[v(s')]`. Terminal rows are zero.
pub fn backup(mdp: &Mdp, reward: &RewardTable, gamma: f64, values: &[f64]) -> QTable {
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in mdp.non_terminal_states() {
        for a in 0..mdp.n_actions() {
            q.set(s, a, reward.get(s, a) + gamma * mdp.expected(s, a, values));
        }
    }
    q
}

/// Greedy policy of a Q table (lowest action index on ties).
pub fn greedy_policy(mdp: &Mdp, q: &QTable) -> Policy {
    Policy(
        (0..mdp.n_states())
            .map(|s| {
                if mdp.is_terminal(s) {
                    0
                } else {
                    argmax(q.row(s))
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub value: ValueTable,
    pub q: QTable,
    pub policy: Policy,
    pub iterations: usize,
    /// Sup-norm change of the value table at each sweep.
    pub residuals: Vec<f64>,
}

/// Synchronous value iteration for a single reward at discount `gamma`.
pub fn solve_value_iteration(
    mdp: &Mdp,
    reward: &RewardTable,
    gamma: f64,
    config: SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    check_discount(gamma, "gamma")?;
    reward.check_shape(mdp, "reward")?;
    reward.check_finite(mdp, "reward")?;

    let mut values = vec![0.0; mdp.n_states()];
    let mut residuals = Vec::new();
    for iteration in 1..=config.max_iter {
        let q = backup(mdp, reward, gamma, &values);
        let next: Vec<f64> = (0..mdp.n_states())
            .map(|s| {
                if mdp.is_terminal(s) {
                    0.0
                } else {
                    q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect();
        let residual = sup_distance(&next, &values);
        residuals.push(residual);
        values = next;
        if residual <= config.tol {
            let q = backup(mdp, reward, gamma, &values);
            let policy = greedy_policy(mdp, &q);
            return Ok(Solution {
                value: ValueTable(values),
                q,
                policy,
                iterations: iteration,
                residuals,
            });
        }
    }
    Err(Error::NotConverged {
        solver: "value iteration",
        cap: config.max_iter,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Value of a fixed deterministic policy, by iterating its Bellman operator.
pub fn policy_evaluation(
    mdp: &Mdp,
    reward: &RewardTable,
    gamma: f64,
    policy: &Policy,
    config: SolverConfig,
) -> Result<ValueTable> {
    config.validate()?;
    check_discount(gamma, "gamma")?;
    reward.check_shape(mdp, "reward")?;
    reward.check_finite(mdp, "reward")?;
    policy.validate(mdp)?;

    let mut values = vec![0.0; mdp.n_states()];
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iter {
        let next: Vec<f64> = (0..mdp.n_states())
            .map(|s| {
                if mdp.is_terminal(s) {
                    0.0
                } else {
                    let a = policy[s];
                    reward.get(s, a) + gamma * mdp.expected(s, a, &values)
                }
            })
            .collect();
        residual = sup_distance(&next, &values);
        values = next;
        if residual <= config.tol {
            return Ok(ValueTable(values));
        }
    }
    Err(Error::NotConverged {
        solver: "policy evaluation",
        cap: config.max_iter,
        residual,
    })
}

/// Every deterministic policy over the non-terminal states, in odometer order
/// (the first non-terminal state varies fastest).
pub fn enumerate_deterministic_policies(mdp: &Mdp, limit: u128) -> Result<Vec<Policy>> {
    let free: Vec<usize> = mdp.non_terminal_states().collect();
    let count = (mdp.n_actions() as u128)
        .checked_pow(free.len() as u32)
        .unwrap_or(u128::MAX);
    if count > limit {
        return Err(Error::TooManyPolicies { count, limit });
    }

    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; mdp.n_states()];
    loop {
        out.push(Policy(current.clone()));
        // Odometer increment over the free states.
        let mut carried = true;
        for &s in &free {
            current[s] += 1;
            if current[s] < mdp.n_actions() {
                carried = false;
                break;
            }
            current[s] = 0;
        }
        if carried {
            break;
        }
    }
    Ok(out)
}
