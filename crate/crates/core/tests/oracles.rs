mod common;

use common::{all_policies, dense_compromise, dense_policy_value, grid_distance, random_problem};
use dualsys::mdp::{policy_evaluation, solve_value_iteration};
use dualsys::planner::{plan_naive, plan_sophisticated, plan_system_optimal, System};
use dualsys::worlds::{bundled_world, rollout};
use dualsys::{Policy, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn policy_evaluation_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let (mdp, rewards, params) = random_problem(&mut rng);
        let policy = Policy::from_vec(
            (0..mdp.n_states())
                .map(|s| {
                    if mdp.is_terminal(s) {
                        0
                    } else {
                        rng.gen_range(0..mdp.n_actions())
                    }
                })
                .collect(),
        );
        let iterative = policy_evaluation(
            &mdp,
            &rewards.r2,
            params.gamma2,
            &policy,
            SolverConfig::default(),
        )
        .unwrap();
        let dense = dense_policy_value(&mdp, &rewards.r2, params.gamma2, &policy);
        for (a, b) in iterative.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn value_iteration_beats_every_policy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (mdp, rewards, params) = random_problem(&mut rng);
        let solved =
            solve_value_iteration(&mdp, &rewards.r1, params.gamma1, SolverConfig::default())
                .unwrap();
        for policy in all_policies(&mdp) {
            let v = dense_policy_value(&mdp, &rewards.r1, params.gamma1, &policy);
            for (best, value) in solved.value.iter().zip(&v) {
                assert!(*best >= value - 1e-8);
            }
        }
        let greedy = dense_policy_value(&mdp, &rewards.r1, params.gamma1, &solved.policy);
        for (g, value) in greedy.iter().zip(solved.value.iter()) {
            assert!((g - value).abs() < 1e-8);
        }
    }
}

#[test]
fn greedy_policy_reproduces_converged_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = SolverConfig::default();
    for _ in 0..100 {
        let (mdp, rewards, params) = random_problem(&mut rng);
        let solved = solve_value_iteration(&mdp, &rewards.r2, params.gamma2, cfg).unwrap();
        let evaluated =
            policy_evaluation(&mdp, &rewards.r2, params.gamma2, &solved.policy, cfg).unwrap();
        assert!(evaluated.sup_distance(&solved.value) <= 2.0 * cfg.tol);
        for s in mdp.non_terminal_states() {
            let best = solved
                .q
                .row(s)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((best - solved.value[s]).abs() <= cfg.tol);
        }
    }
}

#[test]
fn sophisticated_is_optimal_when_discounts_agree() {
    // With gamma1 = gamma2 the compromise objective is an ordinary MDP value.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (mdp, rewards, mut params) = random_problem(&mut rng);
        params.gamma1 = params.gamma2;
        let plan = plan_sophisticated(&mdp, &rewards, &params, SolverConfig::default()).unwrap();
        let got = dense_compromise(&mdp, &rewards, &params, &plan.policy);
        for policy in all_policies(&mdp) {
            let v = dense_compromise(&mdp, &rewards, &params, &policy);
            for s in 0..mdp.n_states() {
                assert!(got[s] >= v[s] - 1e-6, "state {s}: {} < {}", got[s], v[s]);
            }
        }
    }
}

#[test]
fn sophisticated_objective_is_v2_plus_psi_v1() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let (mdp, rewards, params) = random_problem(&mut rng);
        let Ok(plan) = plan_sophisticated(&mdp, &rewards, &params, SolverConfig::default()) else {
            continue;
        };
        let dense = dense_compromise(&mdp, &rewards, &params, &plan.policy);
        for (s, d) in dense.iter().enumerate() {
            assert!((plan.objective[s] - (plan.v2[s] + params.psi * plan.v1[s])).abs() < 1e-9);
            assert!((plan.objective[s] - d).abs() < 1e-7);
        }
    }
}

#[test]
fn naive_control_cost_is_nonnegative_and_free_on_system_one_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let cfg = SolverConfig::default();
    for _ in 0..100 {
        let (mdp, rewards, params) = random_problem(&mut rng);
        let plan = plan_naive(&mdp, &rewards, &params, cfg).unwrap();
        let system1 = plan_system_optimal(&mdp, &rewards, System::One, &params, cfg).unwrap();
        for s in 0..mdp.n_states() {
            assert!(plan.control_cost[s] >= 0.0);
            if plan.policy[s] == system1.policy[s] {
                assert_eq!(plan.control_cost[s], 0.0);
            }
        }
    }
}

#[test]
fn system_two_walks_shortest_path_to_kale() {
    let world = bundled_world("donut-kale").unwrap();
    let layout = world.layout.clone().unwrap();
    let kale = layout.item("kale").unwrap();
    let plan = plan_system_optimal(
        &world.mdp,
        &world.rewards,
        System::Two,
        &Default::default(),
        SolverConfig::default(),
    )
    .unwrap();
    for s in world.mdp.non_terminal_states() {
        let path = rollout(&world.mdp, &plan.policy, s);
        assert!(path.terminated);
        assert_eq!(world.labels[path.end], "kale");
        let bfs = grid_distance(&layout, layout.cell_of(s), (kale.x, kale.y)).unwrap();
        assert_eq!(path.steps.len(), bfs, "from {:?}", layout.cell_of(s));
    }
}

#[test]
fn system_one_walks_shortest_path_to_donut() {
    let world = bundled_world("donut-kale").unwrap();
    let layout = world.layout.clone().unwrap();
    let donut = layout.item("donut").unwrap();
    let plan = plan_system_optimal(
        &world.mdp,
        &world.rewards,
        System::One,
        &Default::default(),
        SolverConfig::default(),
    )
    .unwrap();
    for s in world.mdp.non_terminal_states() {
        let path = rollout(&world.mdp, &plan.policy, s);
        assert_eq!(world.labels[path.end], "donut");
        let bfs = grid_distance(&layout, layout.cell_of(s), (donut.x, donut.y)).unwrap();
        assert_eq!(path.steps.len(), bfs);
    }
}
