//! Boltzmann choice and trajectory sampling.
//!
//! Datasets serialise to a line-oriented text format: a `key=value` header, a
//! `---` separator, then one trajectory per line:
//!
//! ```text
//! 12:0 5:3 6:3 7 done
//! ```
//!
//! Each `state:action` token is one step. The last two tokens are the state the
//! trajectory ended in and `done` (it reached a terminal state) or `cut` (it
//! hit the step cap). Floats are written in Rust's shortest round-trip form,
//! so parsing and re-serialising reproduces the input byte for byte.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{argmax, Mdp, QTable, RewardPair, SolverConfig};
use crate::planner::{plan, DualParams, PlanKind};

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    n_actions: usize,
    prob: Vec<f64>,
}

impl StochasticPolicy {
    pub fn n_states(&self) -> usize {
        self.prob.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.prob[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.prob[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Puts all mass on `policy[s]`: the zero-temperature limit of the softmax.
    pub fn one_hot(policy: &crate::mdp::Policy, n_actions: usize) -> Self {
        let mut prob = vec![0.0; policy.len() * n_actions];
        for (s, &a) in policy.as_slice().iter().enumerate() {
            prob[s * n_actions + a] = 1.0;
        }
        Self { n_actions, prob }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "softmax temperature must be positive, got {beta}"
        )));
    }
    Ok(())
}

/// `exp(q / beta)` normalised per state, with the row maximum subtracted first.
pub fn softmax_policy(q: &QTable, beta: f64) -> Result<StochasticPolicy> {
    check_beta(beta)?;
    let n_actions = q.n_actions();
    let mut prob = Vec::with_capacity(q.n_states() * n_actions);
    for s in 0..q.n_states() {
        let row = q.row(s);
        let max = row[argmax(row)];
        let weights: Vec<f64> = row.iter().map(|&v| ((v - max) / beta).exp()).collect();
        let total: f64 = weights.iter().sum();
        prob.extend(weights.iter().map(|w| w / total));
    }
    Ok(StochasticPolicy { n_actions, prob })
}

/// `log P(action | row)` under a softmax with temperature `beta`.
///
/// The log-normaliser is `ln(1 + sum of the non-maximal terms)`, which keeps
/// near-deterministic choices from rounding to exactly zero.
pub fn log_softmax(row: &[f64], action: usize, beta: f64) -> f64 {
    let best = argmax(row);
    let max = row[best];
    let rest: f64 = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != best)
        .map(|(_, &v)| ((v - max) / beta).exp())
        .sum();
    (row[action] - max) / beta - rest.ln_1p()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// `(state, action)` pairs in the order taken.
    pub steps: Vec<(usize, usize)>,
    pub start: usize,
    /// State reached after the final step.
    pub end: usize,
    pub terminated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every visited state, including the final one.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps
            .iter()
            .map(|&(s, _)| s)
            .chain(std::iter::once(self.end))
    }
}

fn sample_index(rng: &mut impl Rng, weights: impl Iterator<Item = f64>) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = None;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            cumulative += w;
            last_positive = Some(i);
            if u < cumulative {
                return Some(i);
            }
        }
    }
    // Rounding left u above the final cumulative sum.
    last_positive
}

pub fn sample_trajectory(
    mdp: &Mdp,
    policy: &StochasticPolicy,
    start: usize,
    max_steps: usize,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    if start >= mdp.n_states() {
        return Err(Error::InvalidParameter(format!(
            "start state {start} out of range"
        )));
    }
    if mdp.is_terminal(start) {
        return Err(Error::InvalidParameter(format!(
            "start state {start} is terminal"
        )));
    }
    if max_steps == 0 {
        return Err(Error::InvalidParameter(
            "max_steps must be at least 1".into(),
        ));
    }
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::InvalidParameter(
            "policy shape does not match the MDP".into(),
        ));
    }

    let mut steps = Vec::new();
    let mut state = start;
    while steps.len() < max_steps && !mdp.is_terminal(state) {
        let action = sample_index(rng, policy.row(state).iter().copied()).ok_or_else(|| {
            Error::InvalidParameter(format!("no action has mass at state {state}"))
        })?;
        let next = mdp.transition(state, action);
        let k = sample_index(rng, next.iter().map(|&(_, p)| p)).expect("validated kernel");
        steps.push((state, action));
        state = next[k].0;
    }
    Ok(Trajectory {
        steps,
        start,
        end: state,
        terminated: mdp.is_terminal(state),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub n: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n: 50,
            max_steps: 200,
            seed: 0,
        }
    }
}

/// Generation record; enough to regenerate the dataset exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub world: String,
    pub kind: PlanKind,
    pub params: DualParams,
    pub seed: u64,
    pub count: usize,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn n_pairs(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.trajectories
            .iter()
            .flat_map(|t| t.steps.iter().copied())
    }

    /// Checks every step against the MDP's kernel.
    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        for (i, t) in self.trajectories.iter().enumerate() {
            let bad = |msg: String| Error::InvalidParameter(format!("trajectory {i}: {msg}"));
            if t.end >= mdp.n_states() {
                return Err(bad(format!("end state {} out of range", t.end)));
            }
            let mut expected = t.start;
            for (k, &(s, a)) in t.steps.iter().enumerate() {
                if s != expected {
                    return Err(bad(format!("step {k} starts at {s}, expected {expected}")));
                }
                if s >= mdp.n_states() || a >= mdp.n_actions() || mdp.is_terminal(s) {
                    return Err(bad(format!("invalid pair {s}:{a} at step {k}")));
                }
                expected = t.steps.get(k + 1).map_or(t.end, |&(next, _)| next);
                if !mdp.transition(s, a).iter().any(|&(n, _)| n == expected) {
                    return Err(bad(format!("no transition {s} --{a}--> {expected}")));
                }
            }
            if t.terminated != mdp.is_terminal(t.end) {
                return Err(bad("terminated flag disagrees with the end state".into()));
            }
        }
        Ok(())
    }
}

/// Samples `config.n` trajectories from uniformly drawn non-terminal starts.
///
/// Trajectory `i` draws from its own ChaCha stream `(seed, i)`, so the result
/// does not depend on how the work is scheduled.
pub fn sample_dataset(
    mdp: &Mdp,
    policy: &StochasticPolicy,
    config: SamplingConfig,
) -> Result<Vec<Trajectory>> {
    if config.n == 0 {
        return Err(Error::InvalidParameter(
            "trajectory count must be at least 1".into(),
        ));
    }
    let starts: Vec<usize> = mdp.non_terminal_states().collect();
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "MDP has no non-terminal state".into(),
        ));
    }
    (0..config.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let start = starts[rng.gen_range(0..starts.len())];
            sample_trajectory(mdp, policy, start, config.max_steps, &mut rng)
        })
        .collect()
}

/// Plans with `kind`, then samples Boltzmann trajectories from the plan's model Q.
pub fn generate_dataset(
    world: &str,
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    kind: PlanKind,
    config: SamplingConfig,
) -> Result<Dataset> {
    if config.n == 0 {
        return Err(Error::InvalidParameter(
            "trajectory count must be at least 1".into(),
        ));
    }
    let solved = plan(mdp, rewards, params, kind, SolverConfig::default())?;
    let policy = softmax_policy(&solved.model_q, params.beta)?;
    let trajectories = sample_dataset(mdp, &policy, config)?;
    Ok(Dataset {
        meta: DatasetMeta {
            world: world.to_string(),
            kind,
            params: *params,
            seed: config.seed,
            count: config.n,
            max_steps: config.max_steps,
        },
        trajectories,
    })
}

const DATASET_MAGIC: &str = "# dualsys dataset v1";

pub fn serialize_dataset(dataset: &Dataset) -> String {
    let m = &dataset.meta;
    let mut out = String::new();
    writeln!(out, "{DATASET_MAGIC}").unwrap();
    writeln!(out, "world={}", m.world).unwrap();
    writeln!(out, "kind={}", m.kind.name()).unwrap();
    writeln!(out, "gamma1={}", m.params.gamma1).unwrap();
    writeln!(out, "gamma2={}", m.params.gamma2).unwrap();
    writeln!(out, "psi={}", m.params.psi).unwrap();
    writeln!(out, "beta={}", m.params.beta).unwrap();
    writeln!(out, "seed={}", m.seed).unwrap();
    writeln!(out, "count={}", m.count).unwrap();
    writeln!(out, "max_steps={}", m.max_steps).unwrap();
    writeln!(out, "---").unwrap();
    for t in &dataset.trajectories {
        for (s, a) in &t.steps {
            write!(out, "{s}:{a} ").unwrap();
        }
        writeln!(
            out,
            "{} {}",
            t.end,
            if t.terminated { "done" } else { "cut" }
        )
        .unwrap();
    }
    out
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, DATASET_MAGIC)) => {}
        _ => return Err(parse_error(1, format!("expected `{DATASET_MAGIC}`"))),
    }

    let keys = [
        "world",
        "kind",
        "gamma1",
        "gamma2",
        "psi",
        "beta",
        "seed",
        "count",
        "max_steps",
    ];
    let mut values: Vec<(usize, String)> = Vec::with_capacity(keys.len());
    for key in keys {
        let (n, line) = lines
            .next()
            .ok_or_else(|| parse_error(values.len() + 2, format!("missing `{key}=`")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| parse_error(n, format!("expected `{key}=...`")))?;
        values.push((n, value.to_string()));
    }
    let float = |i: usize| -> Result<f64> {
        let (n, v) = &values[i];
        v.parse()
            .map_err(|_| parse_error(*n, format!("invalid number '{v}' for {}", keys[i])))
    };
    let integer = |i: usize| -> Result<u64> {
        let (n, v) = &values[i];
        v.parse()
            .map_err(|_| parse_error(*n, format!("invalid integer '{v}' for {}", keys[i])))
    };
    let kind = PlanKind::from_name(&values[1].1)
        .ok_or_else(|| parse_error(values[1].0, format!("unknown kind '{}'", values[1].1)))?;
    let meta = DatasetMeta {
        world: values[0].1.clone(),
        kind,
        params: DualParams {
            gamma1: float(2)?,
            gamma2: float(3)?,
            psi: float(4)?,
            beta: float(5)?,
        },
        seed: integer(6)?,
        count: integer(7)? as usize,
        max_steps: integer(8)? as usize,
    };

    match lines.next() {
        Some((_, "---")) => {}
        Some((n, _)) => return Err(parse_error(n, "expected `---`")),
        None => return Err(parse_error(keys.len() + 2, "expected `---`")),
    }

    let mut trajectories = Vec::new();
    for (n, line) in lines {
        let tokens: Vec<&str> = line.split(' ').collect();
        if tokens.len() < 3 {
            return Err(parse_error(
                n,
                "a trajectory needs at least one step, an end state and a status",
            ));
        }
        let (steps_tokens, tail) = tokens.split_at(tokens.len() - 2);
        let steps = steps_tokens
            .iter()
            .map(|tok| {
                let (s, a) = tok.split_once(':').ok_or_else(|| {
                    parse_error(n, format!("expected state:action, found '{tok}'"))
                })?;
                let parse = |v: &str| {
                    v.parse::<usize>()
                        .map_err(|_| parse_error(n, format!("invalid index in '{tok}'")))
                };
                Ok((parse(s)?, parse(a)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let end = tail[0]
            .parse()
            .map_err(|_| parse_error(n, format!("invalid end state '{}'", tail[0])))?;
        let terminated = match tail[1] {
            "done" => true,
            "cut" => false,
            other => {
                return Err(parse_error(
                    n,
                    format!("expected done or cut, found '{other}'"),
                ))
            }
        };
        trajectories.push(Trajectory {
            start: steps[0].0,
            steps,
            end,
            terminated,
        });
    }
    Ok(Dataset { meta, trajectories })
}
