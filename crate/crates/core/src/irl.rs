//! Maximum-likelihood reward inference by differential evolution.
//!
//! Rewards are linear in the parameter vector: each entry of `theta` scales
//! one item feature of the world. A rational model has one coefficient per
//! item. A dual-system model has one per item for system 1 followed by one per
//! item for system 2, so on the donut/kale grid `theta = (d1, k1, d2, k2)`.
//! When `psi` is estimated it is appended as the last coordinate.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::behavior::{log_softmax, Dataset};
use crate::error::{Error, Result};
use crate::mdp::{solve_value_iteration, Mdp, QTable, RewardPair, RewardTable, SolverConfig};
use crate::planner::{naive_compromise_reward, sophisticated_model_q, DualParams, PlanKind};
use crate::worlds::WorldBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// A single reward function, optimised at `gamma2`.
    Rational,
    Naive,
    Sophisticated,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Rational,
        ModelKind::Naive,
        ModelKind::Sophisticated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rational => "rational",
            ModelKind::Naive => "naive",
            ModelKind::Sophisticated => "soph",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rational" | "system2" => Some(ModelKind::Rational),
            "naive" => Some(ModelKind::Naive),
            "soph" | "sophisticated" => Some(ModelKind::Sophisticated),
            _ => None,
        }
    }

    pub fn plan_kind(self) -> PlanKind {
        match self {
            ModelKind::Rational => PlanKind::System2,
            ModelKind::Naive => PlanKind::Naive,
            ModelKind::Sophisticated => PlanKind::Sophisticated,
        }
    }

    pub fn is_dual(self) -> bool {
        self != ModelKind::Rational
    }
}

/// The item features that rewards are assembled from.
#[derive(Debug, Clone)]
pub struct RewardBasis {
    labels: Vec<String>,
    features: Vec<RewardTable>,
}

impl RewardBasis {
    pub fn new(features: Vec<(String, RewardTable)>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidParameter(
                "reward basis needs at least one feature".into(),
            ));
        }
        let shape = (features[0].1.n_states(), features[0].1.n_actions());
        if features
            .iter()
            .any(|(_, f)| (f.n_states(), f.n_actions()) != shape)
        {
            return Err(Error::InvalidParameter(
                "reward features differ in shape".into(),
            ));
        }
        let (labels, features) = features.into_iter().unzip();
        Ok(Self { labels, features })
    }

    pub fn from_world(world: &WorldBundle) -> Result<Self> {
        Self::new(world.item_features.clone())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// `sum_i weights[i] * feature_i`.
    pub fn combine(&self, weights: &[f64]) -> RewardTable {
        assert_eq!(weights.len(), self.len(), "one weight per feature");
        let first = &self.features[0];
        self.features.iter().zip(weights).fold(
            RewardTable::zeros(first.n_states(), first.n_actions()),
            |acc, (f, &w)| acc.add_scaled(f, w),
        )
    }
}

/// Parameter vector of a model, laid out as described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(pub Vec<f64>);

impl Theta {
    pub fn dimension(kind: ModelKind, n_features: usize, free_psi: bool) -> usize {
        let rewards = if kind.is_dual() {
            2 * n_features
        } else {
            n_features
        };
        rewards + usize::from(free_psi && kind.is_dual())
    }

    /// Coordinate names such as `donut1`, `kale2`, `psi`.
    pub fn names(kind: ModelKind, basis: &RewardBasis, free_psi: bool) -> Vec<String> {
        let mut names: Vec<String> = if kind.is_dual() {
            (1..=2)
                .flat_map(|i| basis.labels().iter().map(move |l| format!("{l}{i}")))
                .collect()
        } else {
            basis.labels().to_vec()
        };
        if free_psi && kind.is_dual() {
            names.push("psi".into());
        }
        names
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// What the fit holds fixed and what it estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Discounts, `beta`, and `psi` unless `free_psi` is set.
    pub params: DualParams,
    pub free_psi: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, params: DualParams) -> Self {
        Self {
            kind,
            params,
            free_psi: false,
        }
    }

    pub fn dimension(&self, basis: &RewardBasis) -> usize {
        Theta::dimension(self.kind, basis.len(), self.free_psi)
    }

    /// Rewards and parameters instantiated at `theta`.
    pub fn instantiate(
        &self,
        basis: &RewardBasis,
        theta: &[f64],
    ) -> Result<(RewardPair, DualParams)> {
        let expected = self.dimension(basis);
        if theta.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{} model expects {expected} parameters, got {}",
                self.kind.name(),
                theta.len()
            )));
        }
        let n = basis.len();
        let mut params = self.params;
        let rewards = if self.kind.is_dual() {
            if self.free_psi {
                params.psi = theta[2 * n];
            }
            RewardPair::new(basis.combine(&theta[..n]), basis.combine(&theta[n..2 * n]))
        } else {
            let r = basis.combine(theta);
            RewardPair::new(r.clone(), r)
        };
        params.validate()?;
        Ok((rewards, params))
    }
}

/// The Q table whose softmax is the model's choice rule at `theta`.
pub fn model_q(
    mdp: &Mdp,
    basis: &RewardBasis,
    theta: &[f64],
    spec: &ModelSpec,
    config: SolverConfig,
) -> Result<QTable> {
    let (rewards, params) = spec.instantiate(basis, theta)?;
    match spec.kind {
        ModelKind::Rational => {
            Ok(solve_value_iteration(mdp, &rewards.r2, params.gamma2, config)?.q)
        }
        ModelKind::Naive => {
            let surrogate = naive_compromise_reward(mdp, &rewards, &params, config)?;
            Ok(solve_value_iteration(mdp, &surrogate, params.gamma2, config)?.q)
        }
        ModelKind::Sophisticated => sophisticated_model_q(mdp, &rewards, &params, config),
    }
}

fn dataset_log_likelihood(dataset: &Dataset, q: &QTable, beta: f64) -> f64 {
    dataset
        .pairs()
        .map(|(s, a)| log_softmax(q.row(s), a, beta))
        .sum()
}

/// `sum log P(a | s, theta)` over every recorded step.
pub fn log_likelihood(
    dataset: &Dataset,
    mdp: &Mdp,
    basis: &RewardBasis,
    theta: &[f64],
    spec: &ModelSpec,
    config: SolverConfig,
) -> Result<f64> {
    dataset.validate(mdp)?;
    let q = model_q(mdp, basis, theta, spec, config)?;
    Ok(dataset_log_likelihood(dataset, &q, spec.params.beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    pub weight: f64,
    pub crossover: f64,
    pub generations: usize,
    /// `(lo, hi)` per dimension.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl DeConfig {
    /// Defaults with the same `[lo, hi]` box on every dimension.
    pub fn with_dimension(dimension: usize, lo: f64, hi: f64) -> Self {
        Self {
            population: 40,
            weight: 0.8,
            crossover: 0.9,
            generations: 150,
            bounds: vec![(lo, hi); dimension],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidParameter(format!(
                "population must be at least 4, got {}",
                self.population
            )));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "F must be positive, got {}",
                self.weight
            )));
        }
        if !(self.crossover > 0.0 && self.crossover <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "CR must lie in (0, 1], got {}",
                self.crossover
            )));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one dimension is required".into(),
            ));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "bounds [{lo}, {hi}] of dimension {i} are not a finite interval"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialisation and after each generation.
    pub trace: Vec<f64>,
}

fn score(value: f64) -> f64 {
    if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value
    }
}

fn evaluate_all<F>(objective: &F, points: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points.par_iter().map(|x| score(objective(x))).collect()
}

/// Maximises `objective` with DE/rand/1/bin.
///
/// All random draws happen serially before a generation is evaluated, and
/// selection runs after, so the result is the same under any thread count.
pub fn differential_evolution<F>(objective: F, config: &DeConfig) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let bounds = &config.bounds;
    let dim = bounds.len();

    if bounds.iter().all(|&(lo, hi)| lo == hi) {
        let point: Vec<f64> = bounds.iter().map(|&(lo, _)| lo).collect();
        let value = score(objective(&point));
        return Ok(DeResult {
            best: point,
            value,
            trace: vec![value],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    };
    let mut population: Vec<Vec<f64>> = (0..config.population)
        .map(|_| bounds.iter().map(|&b| draw(&mut rng, b)).collect())
        .collect();
    let mut fitness = evaluate_all(&objective, &population);

    let mut best = 0;
    for i in 1..population.len() {
        if fitness[i] > fitness[best] {
            best = i;
        }
    }
    let mut best_point = population[best].clone();
    let mut best_value = fitness[best];
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(best_value);

    let np = config.population;
    for _ in 0..config.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = |exclude: &[usize]| loop {
                    let r = rng.gen_range(0..np);
                    if !exclude.contains(&r) {
                        return r;
                    }
                };
                let r1 = pick(&[i]);
                let r2 = pick(&[i, r1]);
                let r3 = pick(&[i, r1, r2]);
                let forced = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let cross = rng.gen::<f64>() < config.crossover;
                        if j == forced || cross {
                            let (lo, hi) = bounds[j];
                            let v = population[r1][j]
                                + config.weight * (population[r2][j] - population[r3][j]);
                            v.clamp(lo, hi)
                        } else {
                            population[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fitness = evaluate_all(&objective, &trials);
        for (i, (trial, value)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if value >= fitness[i] {
                if value > best_value {
                    best_value = value;
                    best_point.clone_from(&trial);
                }
                population[i] = trial;
                fitness[i] = value;
            }
        }
        trace.push(best_value);
    }

    Ok(DeResult {
        best: best_point,
        value: best_value,
        trace,
    })
}

/// Planner tolerance used inside the search.
pub const SEARCH_TOL: f64 = 1e-6;
/// Sweep cap inside the search. A `gamma2 = 0.99` contraction reaches
/// `SEARCH_TOL` in under 2000 sweeps; parameters whose sophisticated sweep
/// cycles instead are scored as impossible without exhausting the full cap.
pub const SEARCH_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IrlEstimate {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub theta: Theta,
    /// Best value found by the search; the last entry of `trace`.
    pub log_likelihood: f64,
    /// The likelihood at `theta` recomputed with fully converged planners.
    pub refined_log_likelihood: f64,
    pub trace: Vec<f64>,
    pub world: String,
    pub dataset_kind: PlanKind,
    pub dataset_seed: u64,
    pub de_seed: u64,
    pub n_pairs: usize,
}

impl IrlEstimate {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.theta.0[i])
    }

    /// `key=value` lines.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let p = &self.spec.params;
        writeln!(out, "model={}", self.spec.kind.name()).unwrap();
        writeln!(out, "world={}", self.world).unwrap();
        writeln!(out, "dataset_kind={}", self.dataset_kind.name()).unwrap();
        writeln!(out, "dataset_seed={}", self.dataset_seed).unwrap();
        writeln!(out, "de_seed={}", self.de_seed).unwrap();
        writeln!(out, "gamma1={}", p.gamma1).unwrap();
        writeln!(out, "gamma2={}", p.gamma2).unwrap();
        writeln!(out, "psi={}", p.psi).unwrap();
        writeln!(out, "beta={}", p.beta).unwrap();
        writeln!(out, "free_psi={}", self.spec.free_psi).unwrap();
        writeln!(out, "pairs={}", self.n_pairs).unwrap();
        for (name, v) in self.names.iter().zip(&self.theta.0) {
            writeln!(out, "theta.{name}={v}").unwrap();
        }
        writeln!(out, "log_likelihood={}", self.log_likelihood).unwrap();
        writeln!(
            out,
            "refined_log_likelihood={}",
            self.refined_log_likelihood
        )
        .unwrap();
        out
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_ll\n");
        for (g, v) in self.trace.iter().enumerate() {
            writeln!(out, "{g},{v}").unwrap();
        }
        out
    }
}

/// Fits `spec` to `dataset` by maximum likelihood.
pub fn fit_irl(
    dataset: &Dataset,
    mdp: &Mdp,
    basis: &RewardBasis,
    spec: &ModelSpec,
    config: &DeConfig,
) -> Result<IrlEstimate> {
    if dataset.n_pairs() == 0 {
        return Err(Error::InvalidParameter(
            "cannot fit an empty dataset".into(),
        ));
    }
    dataset.validate(mdp)?;
    let dim = spec.dimension(basis);
    if config.bounds.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "{} model has {dim} parameters but {} bounds were given",
            spec.kind.name(),
            config.bounds.len()
        )));
    }
    spec.params.validate()?;

    let search = SolverConfig {
        tol: SEARCH_TOL,
        max_iter: SEARCH_MAX_ITER,
    };
    let objective = |theta: &[f64]| match model_q(mdp, basis, theta, spec, search) {
        Ok(q) => dataset_log_likelihood(dataset, &q, spec.params.beta),
        Err(_) => f64::NEG_INFINITY,
    };
    let result = differential_evolution(objective, config)?;
    let refined = log_likelihood(
        dataset,
        mdp,
        basis,
        &result.best,
        spec,
        SolverConfig::default(),
    )?;

    Ok(IrlEstimate {
        spec: *spec,
        names: Theta::names(spec.kind, basis, spec.free_psi),
        theta: Theta(result.best),
        log_likelihood: result.value,
        refined_log_likelihood: refined,
        trace: result.trace,
        world: dataset.meta.world.clone(),
        dataset_kind: dataset.meta.kind,
        dataset_seed: dataset.meta.seed,
        de_seed: config.seed,
        n_pairs: dataset.n_pairs(),
    })
}
