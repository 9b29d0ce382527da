//! Plans for dual-system agents.
//!
//! System 1 and system 2 share one MDP but carry their own expected rewards and
//! discount rates. Behaviour comes from system 2 maximising its own value net of
//! a cognitive control cost, linear in `psi`, charged for deviating from what
//! system 1 wants. Two readings of that cost are supported:
//!
//! * **naive**: system 1 assumes its own optimal policy is followed from the
//!   next step onward, so each step costs `psi * (V1*(s) - Q1*(s, a))` and the
//!   problem reduces to ordinary value iteration on a surrogate reward;
//! * **sophisticated**: system 1 anticipates the compromise policy itself, and
//!   the plan maximises `V2(s, pi) + psi * V1(s, pi)`, solved by a two-rate value
//!   iteration that backs up both systems' values along the jointly chosen action.

use crate::error::{Error, Result};
use crate::mdp::{
    argmax, backup, check_discount, greedy_policy, policy_evaluation, solve_value_iteration,
    sup_distance, Mdp, Policy, QTable, RewardPair, RewardTable, Solution, SolverConfig, ValueTable,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Slope of the linear cognitive control cost.
    pub psi: f64,
    /// Softmax temperature for stochastic choice.
    pub beta: f64,
}

impl Default for DualParams {
    /// The donut-kale grid settings: `gamma1 = 0.6`, `gamma2 = 0.99`, `psi = 5`, `beta = 0.01`.
    fn default() -> Self {
        Self {
            gamma1: 0.6,
            gamma2: 0.99,
            psi: 5.0,
            beta: 0.01,
        }
    }
}

impl DualParams {
    pub fn new(gamma1: f64, gamma2: f64, psi: f64, beta: f64) -> Result<Self> {
        let params = Self {
            gamma1,
            gamma2,
            psi,
            beta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_psi(self, psi: f64) -> Self {
        Self { psi, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_discount(self.gamma1, "gamma1")?;
        check_discount(self.gamma2, "gamma2")?;
        if !(self.psi.is_finite() && self.psi >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "psi must be finite and non-negative, got {}",
                self.psi
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanKind {
    /// System 1's own optimum.
    System1,
    /// System 2's own optimum; also the rational-agent plan.
    System2,
    Naive,
    Sophisticated,
}

impl PlanKind {
    pub fn name(self) -> &'static str {
        match self {
            PlanKind::System1 => "system1",
            PlanKind::System2 => "system2",
            PlanKind::Naive => "naive",
            PlanKind::Sophisticated => "soph",
        }
    }

    /// Inverse of [`PlanKind::name`]; `rational` is accepted for `system2`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "system1" => Some(PlanKind::System1),
            "system2" | "rational" => Some(PlanKind::System2),
            "naive" => Some(PlanKind::Naive),
            "soph" | "sophisticated" => Some(PlanKind::Sophisticated),
            _ => None,
        }
    }
}

/// A solved plan together with the value accounting of both systems.
#[derive(Debug, Clone)]
pub struct CompromisePlan {
    pub kind: PlanKind,
    pub policy: Policy,
    /// `V1(s, pi)`, discounted at `gamma1`.
    pub v1: ValueTable,
    /// `V2(s, pi)`, discounted at `gamma2`.
    pub v2: ValueTable,
    /// The Q function whose softmax models choice under this plan.
    pub model_q: QTable,
    pub control_cost: ValueTable,
    /// The per-state quantity the plan maximises.
    pub objective: ValueTable,
}

impl CompromisePlan {
    /// System-2 value net of control costs, `V2(s, pi) - CC(s, pi)`.
    pub fn net_value(&self) -> ValueTable {
        ValueTable::from_vec(
            self.v2
                .iter()
                .zip(self.control_cost.iter())
                .map(|(v, c)| v - c)
                .collect(),
        )
    }
}

fn validate_inputs(mdp: &Mdp, rewards: &RewardPair, params: &DualParams) -> Result<()> {
    params.validate()?;
    rewards.validate(mdp)
}

/// Optimal plan of one system for its own reward and discount.
pub fn plan_system_optimal(
    mdp: &Mdp,
    rewards: &RewardPair,
    system: System,
    params: &DualParams,
    config: SolverConfig,
) -> Result<Solution> {
    validate_inputs(mdp, rewards, params)?;
    match system {
        System::One => solve_value_iteration(mdp, &rewards.r1, params.gamma1, config),
        System::Two => solve_value_iteration(mdp, &rewards.r2, params.gamma2, config),
    }
}

/// Per-step deviation cost `psi * (max_a Q1*(s, a) - Q1*(s, a))`.
fn deviation_costs(mdp: &Mdp, q1: &QTable, psi: f64) -> QTable {
    let mut cost = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in mdp.non_terminal_states() {
        let row = q1.row(s);
        let best = row[argmax(row)];
        for (a, &q) in row.iter().enumerate() {
            cost.set(s, a, psi * (best - q));
        }
    }
    cost
}

/// Surrogate reward `r2(s, a) - psi * (V1*(s) - Q1*(s, a))` of the naive agent.
pub fn naive_compromise_reward(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    config: SolverConfig,
) -> Result<RewardTable> {
    let system1 = plan_system_optimal(mdp, rewards, System::One, params, config)?;
    let cost = deviation_costs(mdp, &system1.q, params.psi);
    Ok(rewards.r2.add_scaled(&cost, -1.0))
}

/// Compromise plan under a naive system 1.
pub fn plan_naive(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    config: SolverConfig,
) -> Result<CompromisePlan> {
    let system1 = plan_system_optimal(mdp, rewards, System::One, params, config)?;
    let cost = deviation_costs(mdp, &system1.q, params.psi);
    let surrogate = rewards.r2.add_scaled(&cost, -1.0);
    let solved = solve_value_iteration(mdp, &surrogate, params.gamma2, config)?;

    let v1 = policy_evaluation(mdp, &rewards.r1, params.gamma1, &solved.policy, config)?;
    let v2 = policy_evaluation(mdp, &rewards.r2, params.gamma2, &solved.policy, config)?;
    let control_cost = ValueTable::from_vec(
        (0..mdp.n_states())
            .map(|s| {
                if mdp.is_terminal(s) {
                    0.0
                } else {
                    cost.get(s, solved.policy[s])
                }
            })
            .collect(),
    );

    Ok(CompromisePlan {
        kind: PlanKind::Naive,
        policy: solved.policy,
        v1,
        v2,
        model_q: solved.q,
        control_cost,
        objective: solved.value,
    })
}

/// Compromise plan under a sophisticated system 1.
///
/// Each sweep backs up `Q1` at `gamma1` and `Q2` at `gamma2` from the current
/// value tables, picks `a* = argmax_a psi * Q1(s, a) + Q2(s, a)` and sets both
/// values to their Q at `a*`. Sweeps are synchronous and start from zero
/// values; iteration stops once the joint sup-norm change is within `tol`.
pub fn plan_sophisticated(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    config: SolverConfig,
) -> Result<CompromisePlan> {
    let model_q = sophisticated_model_q(mdp, rewards, params, config)?;
    let n = mdp.n_states();
    let psi = params.psi;
    let policy = greedy_policy(mdp, &model_q);

    let v1 = policy_evaluation(mdp, &rewards.r1, params.gamma1, &policy, config)?;
    let v2 = policy_evaluation(mdp, &rewards.r2, params.gamma2, &policy, config)?;
    let objective = combine(&v2, &v1, psi);

    let system1 = solve_value_iteration(mdp, &rewards.r1, params.gamma1, config)?;
    let control_cost = ValueTable::from_vec(
        (0..n)
            .map(|s| {
                if mdp.is_terminal(s) {
                    0.0
                } else {
                    // Clamped: both values carry solver tolerance.
                    (psi * (system1.value[s] - v1[s])).max(0.0)
                }
            })
            .collect(),
    );

    Ok(CompromisePlan {
        kind: PlanKind::Sophisticated,
        policy,
        v1,
        v2,
        model_q,
        control_cost,
        objective,
    })
}

/// `psi * Q1 + Q2` at the fixed point of the sophisticated sweep.
pub fn sophisticated_model_q(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    config: SolverConfig,
) -> Result<QTable> {
    validate_inputs(mdp, rewards, params)?;
    config.validate()?;
    let n = mdp.n_states();
    let psi = params.psi;

    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..config.max_iter {
        let q1 = backup(mdp, &rewards.r1, params.gamma1, &v1);
        let q2 = backup(mdp, &rewards.r2, params.gamma2, &v2);
        let mut next1 = vec![0.0; n];
        let mut next2 = vec![0.0; n];
        for s in mdp.non_terminal_states() {
            let joint: Vec<f64> = q1
                .row(s)
                .iter()
                .zip(q2.row(s))
                .map(|(a, b)| psi * a + b)
                .collect();
            let best = argmax(&joint);
            next1[s] = q1.get(s, best);
            next2[s] = q2.get(s, best);
        }
        residual = sup_distance(&next1, &v1).max(sup_distance(&next2, &v2));
        v1 = next1;
        v2 = next2;
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            solver: "sophisticated value iteration",
            cap: config.max_iter,
            residual,
        });
    }

    let q1 = backup(mdp, &rewards.r1, params.gamma1, &v1);
    let q2 = backup(mdp, &rewards.r2, params.gamma2, &v2);
    Ok(q2.add_scaled(&q1, psi))
}

fn combine(v2: &ValueTable, v1: &ValueTable, psi: f64) -> ValueTable {
    ValueTable::from_vec(v2.iter().zip(v1.iter()).map(|(b, a)| b + psi * a).collect())
}

/// `V2(s, pi) + psi * V1(s, pi)` for a fixed policy.
pub fn compromise_objective(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    policy: &Policy,
    config: SolverConfig,
) -> Result<ValueTable> {
    validate_inputs(mdp, rewards, params)?;
    let v1 = policy_evaluation(mdp, &rewards.r1, params.gamma1, policy, config)?;
    let v2 = policy_evaluation(mdp, &rewards.r2, params.gamma2, policy, config)?;
    Ok(combine(&v2, &v1, params.psi))
}

/// A system's own optimum in plan form. Control cost is the sophisticated
/// accounting `psi * (V1*(s) - V1(s, pi))`, zero for system 1.
fn plan_optimal_as_compromise(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    system: System,
    config: SolverConfig,
) -> Result<CompromisePlan> {
    let system1 = plan_system_optimal(mdp, rewards, System::One, params, config)?;
    let solved = match system {
        System::One => system1.clone(),
        System::Two => plan_system_optimal(mdp, rewards, System::Two, params, config)?,
    };
    let v1 = policy_evaluation(mdp, &rewards.r1, params.gamma1, &solved.policy, config)?;
    let v2 = policy_evaluation(mdp, &rewards.r2, params.gamma2, &solved.policy, config)?;
    let control_cost = match system {
        System::One => ValueTable::zeros(mdp.n_states()),
        System::Two => ValueTable::from_vec(
            (0..mdp.n_states())
                .map(|s| (params.psi * (system1.value[s] - v1[s])).max(0.0))
                .collect(),
        ),
    };
    Ok(CompromisePlan {
        kind: match system {
            System::One => PlanKind::System1,
            System::Two => PlanKind::System2,
        },
        policy: solved.policy,
        v1,
        v2,
        model_q: solved.q,
        control_cost,
        objective: solved.value,
    })
}

pub fn plan(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    kind: PlanKind,
    config: SolverConfig,
) -> Result<CompromisePlan> {
    match kind {
        PlanKind::System1 => plan_optimal_as_compromise(mdp, rewards, params, System::One, config),
        PlanKind::System2 => plan_optimal_as_compromise(mdp, rewards, params, System::Two, config),
        PlanKind::Naive => plan_naive(mdp, rewards, params, config),
        PlanKind::Sophisticated => plan_sophisticated(mdp, rewards, params, config),
    }
}
