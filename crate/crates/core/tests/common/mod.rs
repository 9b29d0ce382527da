//! Oracles, random problem generators and property checks shared by the
//! integration test targets.
#![allow(dead_code)]

use std::collections::VecDeque;

use dualsys::behavior::{
    parse_dataset, sample_dataset, serialize_dataset, softmax_policy, Dataset, DatasetMeta,
    SamplingConfig,
};
use dualsys::irl::{differential_evolution, DeConfig};
use dualsys::worlds::{parse_world_file, serialize_world, GridWorldSpec, Item};
use dualsys::{DualParams, Mdp, PlanKind, Policy, QTable, RewardPair, RewardTable};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

/// A random problem: 1 to 4 non-terminal states plus one terminal state, 1 to
/// 3 actions, dense random kernels, rewards uniform in [-1, 1], discounts
/// uniform in [0.3, 0.95] and psi uniform in [0, 5].
pub fn random_problem(rng: &mut impl Rng) -> (Mdp, RewardPair, DualParams) {
    let non_terminal = rng.gen_range(1..=4);
    let n_actions = rng.gen_range(1..=3);
    let n = non_terminal + 1;
    let mut terminal = vec![false; n];
    terminal[non_terminal] = true;
    let transitions = (0..n)
        .map(|s| {
            if terminal[s] {
                return Vec::new();
            }
            (0..n_actions)
                .map(|_| {
                    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                    let total: f64 = w.iter().sum();
                    w.iter().enumerate().map(|(t, x)| (t, x / total)).collect()
                })
                .collect()
        })
        .collect();
    let mdp = Mdp::new(n_actions, terminal.clone(), transitions).unwrap();
    let mut reward = || {
        RewardTable::from_rows(
            (0..n)
                .map(|s| {
                    (0..n_actions)
                        .map(|_| {
                            if terminal[s] {
                                0.0
                            } else {
                                rng.gen_range(-1.0..1.0)
                            }
                        })
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    };
    let rewards = RewardPair::new(reward(), reward());
    let params = DualParams::new(
        rng.gen_range(0.3..0.95),
        rng.gen_range(0.3..0.95),
        rng.gen_range(0.0..5.0),
        0.01,
    )
    .unwrap();
    (mdp, rewards, params)
}

/// `(I - gamma P_pi)^-1 r_pi` by dense LU.
pub fn dense_policy_value(
    mdp: &Mdp,
    reward: &RewardTable,
    gamma: f64,
    policy: &Policy,
) -> Vec<f64> {
    let n = mdp.n_states();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        if mdp.is_terminal(s) {
            continue;
        }
        let act = policy[s];
        b[s] = reward.get(s, act);
        for &(t, p) in mdp.transition(s, act) {
            a[(s, t)] -= gamma * p;
        }
    }
    let v = a
        .lu()
        .solve(&b)
        .expect("I - gamma P is invertible for gamma < 1");
    v.iter().copied().collect()
}

/// Every deterministic policy, enumerated independently of the library.
pub fn all_policies(mdp: &Mdp) -> Vec<Policy> {
    let states: Vec<usize> = (0..mdp.n_states())
        .filter(|&s| !mdp.is_terminal(s))
        .collect();
    let count = mdp.n_actions().pow(states.len() as u32);
    (0..count)
        .map(|mut code| {
            let mut actions = vec![0; mdp.n_states()];
            for &s in &states {
                actions[s] = code % mdp.n_actions();
                code /= mdp.n_actions();
            }
            Policy::from_vec(actions)
        })
        .collect()
}

/// `V2 + psi V1` of `policy`, by dense solves.
pub fn dense_compromise(
    mdp: &Mdp,
    rewards: &RewardPair,
    params: &DualParams,
    policy: &Policy,
) -> Vec<f64> {
    let v1 = dense_policy_value(mdp, &rewards.r1, params.gamma1, policy);
    let v2 = dense_policy_value(mdp, &rewards.r2, params.gamma2, policy);
    v2.iter()
        .zip(&v1)
        .map(|(b, a)| b + params.psi * a)
        .collect()
}

/// Breadth-first grid distance from `from` to `to`, moving in the four
/// cardinal directions and never passing through a terminal item other than
/// the target.
pub fn grid_distance(
    spec: &GridWorldSpec,
    from: (usize, usize),
    to: (usize, usize),
) -> Option<usize> {
    let blocked = |x: usize, y: usize| {
        (x, y) != to
            && spec
                .items
                .iter()
                .any(|i| i.terminal && (i.x, i.y) == (x, y))
    };
    let mut dist = vec![usize::MAX; spec.width * spec.height];
    let idx = |(x, y): (usize, usize)| y * spec.width + x;
    dist[idx(from)] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some((x, y)) = queue.pop_front() {
        if (x, y) == to {
            return Some(dist[idx((x, y))]);
        }
        let d = dist[idx((x, y))];
        let mut neighbours = Vec::new();
        if x > 0 {
            neighbours.push((x - 1, y));
        }
        if y > 0 {
            neighbours.push((x, y - 1));
        }
        if x + 1 < spec.width {
            neighbours.push((x + 1, y));
        }
        if y + 1 < spec.height {
            neighbours.push((x, y + 1));
        }
        for (nx, ny) in neighbours {
            if !blocked(nx, ny) && dist[idx((nx, ny))] == usize::MAX {
                dist[idx((nx, ny))] = d + 1;
                queue.push_back((nx, ny));
            }
        }
    }
    None
}

// Property checks. Each returns an error describing the first violation.

pub fn softmax_input() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
    (
        prop::collection::vec(-50.0..50.0f64, 1..6),
        0.005..10.0f64,
        -100.0..100.0f64,
    )
}

pub fn check_softmax((row, beta, shift): (Vec<f64>, f64, f64)) -> Result<(), TestCaseError> {
    let q = QTable::from_rows(vec![row.clone()]).unwrap();
    let shifted = QTable::from_rows(vec![row.iter().map(|v| v + shift).collect()]).unwrap();
    let p = softmax_policy(&q, beta).unwrap();
    let ps = softmax_policy(&shifted, beta).unwrap();
    let sum: f64 = p.row(0).iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
    prop_assert!(p.row(0).iter().all(|&x| x >= 0.0));
    for (a, b) in p.row(0).iter().zip(ps.row(0)) {
        prop_assert!((a - b).abs() <= 1e-12, "shift changed {a} to {b}");
    }
    Ok(())
}

pub fn de_input() -> impl Strategy<Value = (Vec<f64>, u64)> {
    (prop::collection::vec(-4.0..4.0f64, 1..4), any::<u64>())
}

pub fn check_de((center, seed): (Vec<f64>, u64)) -> Result<(), TestCaseError> {
    let objective = |x: &[f64]| -> f64 {
        -x.iter()
            .zip(&center)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
    };
    let config = DeConfig {
        population: 8,
        generations: 12,
        seed,
        ..DeConfig::with_dimension(center.len(), -5.0, 5.0)
    };
    let first = differential_evolution(objective, &config).unwrap();
    let second = differential_evolution(objective, &config).unwrap();
    prop_assert_eq!(&first, &second);
    prop_assert_eq!(first.trace.len(), config.generations + 1);
    prop_assert!(first.trace.windows(2).all(|w| w[0] <= w[1]));
    prop_assert_eq!(first.value, *first.trace.last().unwrap());
    prop_assert_eq!(first.value, objective(&first.best));
    Ok(())
}

fn chain_mdp(len: usize) -> Mdp {
    // Action 0 advances, action 1 stays; the last state is terminal.
    let mut next: Vec<Vec<usize>> = (0..len).map(|s| vec![s + 1, s]).collect();
    next.push(vec![]);
    let mut terminal = vec![false; len + 1];
    terminal[len] = true;
    Mdp::deterministic(2, terminal, next).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3..1e3f64,
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
    ]
}

pub fn dataset_input() -> impl Strategy<Value = Dataset> {
    (
        2usize..8,
        "[a-z][a-z0-9-]{0,11}",
        prop::sample::select(vec![
            PlanKind::System1,
            PlanKind::System2,
            PlanKind::Naive,
            PlanKind::Sophisticated,
        ]),
        (finite(), finite(), finite(), finite()),
        any::<u64>(),
        1usize..12,
        1usize..10,
        -3.0..3.0f64,
    )
        .prop_map(
            |(len, world, kind, (g1, g2, psi, beta), seed, n, max_steps, bias)| {
                let mdp = chain_mdp(len);
                let q = QTable::from_rows(vec![vec![bias, 0.0]; len + 1]).unwrap();
                let policy = softmax_policy(&q, 1.0).unwrap();
                let config = SamplingConfig { n, max_steps, seed };
                Dataset {
                    meta: DatasetMeta {
                        world,
                        kind,
                        params: DualParams {
                            gamma1: g1,
                            gamma2: g2,
                            psi,
                            beta,
                        },
                        seed,
                        count: n,
                        max_steps,
                    },
                    trajectories: sample_dataset(&mdp, &policy, config).unwrap(),
                }
            },
        )
}

pub fn check_dataset_round_trip(dataset: Dataset) -> Result<(), TestCaseError> {
    let text = serialize_dataset(&dataset);
    let parsed = parse_dataset(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&parsed, &dataset);
    prop_assert_eq!(serialize_dataset(&parsed), text);
    Ok(())
}

pub fn world_input() -> impl Strategy<Value = GridWorldSpec> {
    (1usize..9, 1usize..9)
        .prop_flat_map(|(w, h)| {
            let cells = w * h;
            let max_items = cells.min(4);
            (
                Just((w, h)),
                prop::sample::subsequence((0..cells).collect::<Vec<_>>(), 1..=max_items),
                prop::collection::vec(
                    ("[a-z][a-z0-9_]{0,7}", finite(), finite(), any::<bool>()),
                    4,
                ),
                prop::collection::vec((0..w, 0..h), 0..3),
            )
        })
        .prop_map(|((w, h), cells, attrs, mut starts)| {
            let mut items: Vec<Item> = cells
                .iter()
                .zip(attrs)
                .map(|(&c, (label, r1, r2, terminal))| {
                    Item::new(c % w, c / w, &label, r1, r2, terminal)
                })
                .collect();
            items[0].terminal = true;
            starts.retain(|&(x, y)| !items.iter().any(|i| i.terminal && (i.x, i.y) == (x, y)));
            GridWorldSpec {
                width: w,
                height: h,
                items,
                starts,
            }
        })
}

pub fn check_world_round_trip(spec: GridWorldSpec) -> Result<(), TestCaseError> {
    let text = serialize_world(&spec);
    let parsed =
        parse_world_file(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&parsed, &spec);
    prop_assert_eq!(serialize_world(&parsed), text);
    Ok(())
}
