use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use dualsys::behavior::{parse_dataset, serialize_dataset};
use dualsys::irl::Theta;
use dualsys::mdp::policy_evaluation;
use dualsys::planner::{compromise_objective, naive_compromise_reward};
use dualsys::worlds::{build_grid, parse_world_file, rollout, BUNDLED_WORLDS};
use dualsys::{
    bundled_world, fit_irl, generate_dataset, plan as solve_plan, CompromisePlan, Dataset,
    DeConfig, DualParams, IrlEstimate, ModelKind, ModelSpec, PlanKind, Policy, RewardBasis,
    SamplingConfig, SolverConfig, WorldBundle,
};
use rayon::prelude::*;

use crate::svg;
use crate::{DeArgs, Experiment, ExperimentArgs, IrlArgs, Mode, ModelArgs, PlanArgs, SampleArgs};

const MANIFEST_HEADER: &str = "# dualsys manifest";

fn mode_name(mode: Mode) -> String {
    mode.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// A bundled world by name, otherwise a grid world file.
pub fn load_world(name: &str) -> Result<WorldBundle> {
    if BUNDLED_WORLDS.contains(&name) {
        return Ok(bundled_world(name)?);
    }
    let path = Path::new(name);
    if !path.is_file() {
        bail!(
            "unknown world '{name}': no such file, and the bundled worlds are {}",
            BUNDLED_WORLDS.join(", ")
        );
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {name}"))?;
    let spec = parse_world_file(&text).with_context(|| format!("parsing {name}"))?;
    Ok(build_grid(&spec, name)?)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `<stem>.manifest`: the arguments needed to replay the run, the
    /// resolved settings, and every file written.
    fn manifest(&mut self, stem: &str, args: &[String], settings: &[(&str, String)]) -> Result<()> {
        let mut text = format!("{MANIFEST_HEADER}\nversion={}\n", env!("CARGO_PKG_VERSION"));
        for arg in args {
            writeln!(text, "arg={arg}").unwrap();
        }
        for (key, value) in settings {
            writeln!(text, "{key}={value}").unwrap();
        }
        for name in &self.written {
            writeln!(text, "output={name}").unwrap();
        }
        let name = format!("{stem}.manifest");
        self.write(&name, &text)?;
        println!(
            "wrote {} files to {}",
            self.written.len(),
            self.dir.display()
        );
        Ok(())
    }
}

/// The recorded arguments of a manifest.
pub fn manifest_args(text: &str) -> Result<Vec<String>> {
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        bail!("not a dualsys manifest");
    }
    let args: Vec<String> = lines
        .filter_map(|l| l.strip_prefix("arg="))
        .map(String::from)
        .collect();
    if args.is_empty() {
        bail!("manifest records no command");
    }
    Ok(args)
}

fn param_settings(params: &DualParams) -> Vec<(&'static str, String)> {
    vec![
        ("gamma1", params.gamma1.to_string()),
        ("gamma2", params.gamma2.to_string()),
        ("psi", params.psi.to_string()),
        ("beta", params.beta.to_string()),
    ]
}

fn plan_csv(world: &WorldBundle, plan: &CompromisePlan) -> String {
    let mut out = String::from("state,x,y,action,V1,V2,objective,control_cost,basin\n");
    for s in 0..world.mdp.n_states() {
        let (x, y) = match &world.layout {
            Some(layout) => {
                let (x, y) = layout.cell_of(s);
                (x.to_string(), y.to_string())
            }
            None => (String::new(), String::new()),
        };
        let action = if world.mdp.is_terminal(s) {
            ""
        } else {
            world.action_names[plan.policy[s]].as_str()
        };
        let basin = world
            .basin(&plan.policy, s)
            .unwrap_or_else(|| "none".into());
        writeln!(
            out,
            "{s},{x},{y},{action},{},{},{},{},{basin}",
            plan.v1[s], plan.v2[s], plan.objective[s], plan.control_cost[s]
        )
        .unwrap();
    }
    out
}

/// Solves `mode` and writes `<stem>.csv`, plus the two maps on grid worlds.
fn write_plan(
    outputs: &mut Outputs,
    stem: &str,
    world: &WorldBundle,
    mode: Mode,
    params: &DualParams,
    solver: SolverConfig,
) -> Result<CompromisePlan> {
    let plan = solve_plan(&world.mdp, &world.rewards, params, mode.plan_kind(), solver)?;
    outputs.write(&format!("{stem}.csv"), &plan_csv(world, &plan))?;
    if let Some(layout) = &world.layout {
        let actions: Vec<Option<usize>> = (0..world.mdp.n_states())
            .map(|s| (!world.mdp.is_terminal(s)).then(|| plan.policy[s]))
            .collect();
        let basins: Vec<String> = (0..world.mdp.n_states())
            .map(|s| {
                world
                    .basin(&plan.policy, s)
                    .unwrap_or_else(|| "none".into())
            })
            .collect();
        let name = mode_name(mode);
        let title = format!("{name} policy, psi = {}", params.psi);
        outputs.write(
            &format!("{stem}-policy.svg"),
            &svg::policy_map(layout, &title, &actions, &basins),
        )?;
        outputs.write(
            &format!("{stem}-cost.svg"),
            &svg::cost_heatmap(
                layout,
                &format!("{name} control cost"),
                plan.control_cost.as_slice(),
            ),
        )?;
    }
    Ok(plan)
}

/// Manhattan distance from the rollout's cells to the named item, if any.
fn closest_approach(
    world: &WorldBundle,
    policy: &Policy,
    start: usize,
    label: &str,
) -> Option<usize> {
    let layout = world.layout.as_ref()?;
    let item = layout.item(label)?;
    let path = rollout(&world.mdp, policy, start);
    path.states()
        .map(|s| {
            let (x, y) = layout.cell_of(s);
            x.abs_diff(item.x) + y.abs_diff(item.y)
        })
        .min()
}

pub fn plan(args: &PlanArgs, recorded: &[String]) -> Result<()> {
    let world = load_world(&args.world)?;
    let params = args.model.resolve(DualParams::default())?;
    let mut outputs = Outputs::new(&args.out.out)?;
    let stem = format!("plan-{}", mode_name(args.mode));
    let plan = write_plan(
        &mut outputs,
        &stem,
        &world,
        args.mode,
        &params,
        args.model.solver()?,
    )?;

    if let Some(layout) = &world.layout {
        for &(x, y) in &layout.starts {
            let s = layout.state_of(x, y);
            let path = rollout(&world.mdp, &plan.policy, s);
            let basin = world
                .basin(&plan.policy, s)
                .unwrap_or_else(|| "none".into());
            println!("start ({x},{y}): {basin} in {} steps", path.steps.len());
        }
    } else {
        for s in world.mdp.non_terminal_states() {
            println!(
                "{}: {}",
                world.labels[s], world.action_names[plan.policy[s]]
            );
        }
    }

    let mut settings = vec![
        ("world", args.world.clone()),
        ("mode", mode_name(args.mode)),
    ];
    settings.extend(param_settings(&params));
    outputs.manifest(&stem, recorded, &settings)
}

fn terminal_shares(world: &WorldBundle, dataset: &Dataset) -> Vec<(String, usize)> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for t in &dataset.trajectories {
        let key = if t.terminated {
            let &(s, a) = t.steps.last().expect("trajectories are non-empty");
            world
                .collected_item(s, a)
                .map_or_else(|| world.labels[t.end].clone(), str::to_string)
        } else {
            "cut".to_string()
        };
        match counts.iter_mut().find(|(k, _)| *k == key) {
            Some((_, c)) => *c += 1,
            None => counts.push((key, 1)),
        }
    }
    counts.sort();
    counts
}

pub fn sample(args: &SampleArgs, recorded: &[String]) -> Result<()> {
    let world = load_world(&args.world)?;
    let params = args.model.resolve(DualParams::default())?;
    let dataset = generate_dataset(
        &args.world,
        &world.mdp,
        &world.rewards,
        &params,
        args.mode.plan_kind(),
        SamplingConfig {
            n: args.n,
            max_steps: args.max_steps,
            seed: args.seed,
        },
    )?;
    let mut outputs = Outputs::new(&args.out.out)?;
    let stem = format!("sample-{}-seed{}", mode_name(args.mode), args.seed);
    outputs.write(&format!("{stem}.txt"), &serialize_dataset(&dataset))?;

    let n = dataset.trajectories.len();
    println!(
        "{n} trajectories, mean length {:.2}",
        dataset.n_pairs() as f64 / n as f64
    );
    for (key, count) in terminal_shares(&world, &dataset) {
        println!("  {key}: {:.1}%", 100.0 * count as f64 / n as f64);
    }

    let mut settings = vec![
        ("world", args.world.clone()),
        ("mode", mode_name(args.mode)),
    ];
    settings.extend(param_settings(&params));
    settings.push(("seed", args.seed.to_string()));
    outputs.manifest(&stem, recorded, &settings)
}

fn de_config(de: &DeArgs, spec: &ModelSpec, basis: &RewardBasis, seed: u64) -> Result<DeConfig> {
    if !(de.bound > 0.0 && de.bound.is_finite()) {
        bail!("--bound must be positive");
    }
    let rewards = spec.dimension(basis) - usize::from(spec.free_psi);
    let mut config = DeConfig::with_dimension(rewards, -de.bound, de.bound);
    if spec.free_psi {
        config.bounds.push((0.0, de.psi_max));
    }
    config.population = de.de_pop;
    config.generations = de.de_gens;
    config.weight = de.de_f;
    config.crossover = de.de_cr;
    config.seed = seed;
    config.validate()?;
    Ok(config)
}

struct Aggregate {
    name: String,
    mean: f64,
    sd: f64,
}

/// Mean and sample standard deviation (zero for a single value).
fn aggregate(name: &str, values: &[f64]) -> Aggregate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Aggregate {
        name: name.to_string(),
        mean,
        sd,
    }
}

pub fn irl(args: &IrlArgs, recorded: &[String]) -> Result<()> {
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    let kind = args.mode.model_kind()?;
    let seeds: Vec<u64> = (0..args.replicates as u64)
        .map(|r| args.seed.wrapping_add(r.wrapping_mul(args.seed_stride)))
        .collect();

    let (world_name, datasets, params) = match &args.dataset {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let dataset =
                parse_dataset(&text).with_context(|| format!("parsing {}", path.display()))?;
            let world = args
                .world
                .clone()
                .unwrap_or_else(|| dataset.meta.world.clone());
            let params = args.model.resolve(dataset.meta.params)?;
            (world, vec![dataset; args.replicates], params)
        }
        None => {
            let world_name = args.world.clone().unwrap_or_else(|| "donut-kale".into());
            let world = load_world(&world_name)?;
            let params = args.model.resolve(DualParams::default())?;
            let datasets = seeds
                .iter()
                .map(|&seed| {
                    generate_dataset(
                        &world_name,
                        &world.mdp,
                        &world.rewards,
                        &params,
                        args.data_mode.plan_kind(),
                        SamplingConfig {
                            n: args.n,
                            max_steps: args.max_steps,
                            seed,
                        },
                    )
                })
                .collect::<dualsys::Result<Vec<_>>>()?;
            (world_name, datasets, params)
        }
    };
    let world = load_world(&world_name)?;
    let basis = RewardBasis::from_world(&world)?;
    let spec = ModelSpec {
        kind,
        params,
        free_psi: args.de.free_psi,
    };
    let configs = seeds
        .iter()
        .map(|&seed| de_config(&args.de, &spec, &basis, seed))
        .collect::<Result<Vec<_>>>()?;

    let estimates = datasets
        .par_iter()
        .zip(configs.par_iter())
        .map(|(dataset, config)| fit_irl(dataset, &world.mdp, &basis, &spec, config))
        .collect::<dualsys::Result<Vec<_>>>()?;

    let data_kind = datasets[0].meta.kind.name();
    let stem = format!("irl-{}-on-{data_kind}", kind.name());
    let mut outputs = Outputs::new(&args.out.out)?;
    let names = Theta::names(kind, &basis, spec.free_psi);

    let mut table = format!(
        "replicate,dataset_seed,de_seed,pairs,{},log_likelihood,refined_log_likelihood\n",
        names.join(",")
    );
    for (r, e) in estimates.iter().enumerate() {
        let theta: Vec<String> = e.theta.0.iter().map(f64::to_string).collect();
        writeln!(
            table,
            "{r},{},{},{},{},{},{}",
            e.dataset_seed,
            e.de_seed,
            e.n_pairs,
            theta.join(","),
            e.log_likelihood,
            e.refined_log_likelihood
        )
        .unwrap();
        outputs.write(&format!("{stem}-r{r}.txt"), &e.to_record())?;
        outputs.write(&format!("{stem}-r{r}-trace.csv"), &e.trace_csv())?;
        if args.dataset.is_none() {
            outputs.write(
                &format!("{stem}-r{r}-data.txt"),
                &serialize_dataset(&datasets[r]),
            )?;
        }
    }
    outputs.write(&format!("{stem}-estimates.csv"), &table)?;

    let mut columns: Vec<(String, Vec<f64>)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), estimates.iter().map(|e| e.theta.0[i]).collect()))
        .collect();
    columns.push((
        "log_likelihood".into(),
        estimates.iter().map(|e| e.log_likelihood).collect(),
    ));
    let mut agg = String::from("parameter,mean,sd\n");
    for (name, values) in &columns {
        let a = aggregate(name, values);
        writeln!(agg, "{},{},{}", a.name, a.mean, a.sd).unwrap();
        println!("{:>16}  mean {:>9.4}  sd {:>8.4}", a.name, a.mean, a.sd);
    }
    outputs.write(&format!("{stem}-aggregate.csv"), &agg)?;

    let mut settings = vec![
        ("world", world_name),
        ("model", kind.name().to_string()),
        ("data", data_kind.to_string()),
    ];
    settings.extend(param_settings(&params));
    settings.push((
        "seeds",
        seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    ));
    outputs.manifest(&stem, recorded, &settings)
}

pub fn experiment(args: &ExperimentArgs, recorded: &[String]) -> Result<()> {
    let params = args.model.resolve(DualParams::default())?;
    let solver = args.model.solver()?;
    let mut outputs = Outputs::new(&args.out.out)?;
    let stem = Experiment::to_possible_value(&args.name)
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let mut settings = param_settings(&params);
    match args.name {
        Experiment::Figure1 => figure1(&mut outputs, &params, solver)?,
        Experiment::Figure2 => {
            figure2(&mut outputs, args, &params)?;
            settings.push(("replicates", args.replicates.to_string()));
            settings.push(("seed", args.seed.to_string()));
        }
        Experiment::Thresholds => thresholds(&mut outputs, &args.model, &params, solver)?,
        Experiment::Stopgo => stop_go(&mut outputs, &args.model, &params, solver)?,
    }
    outputs.manifest(&stem, recorded, &settings)
}

fn figure1(outputs: &mut Outputs, params: &DualParams, solver: SolverConfig) -> Result<()> {
    let world = bundled_world("donut-kale")?;
    let layout = world.layout.clone().expect("grid world");
    let mut summary = String::from("mode,start_x,start_y,basin,steps,closest_donut_distance\n");
    for mode in [Mode::System1, Mode::System2, Mode::Naive, Mode::Soph] {
        let name = mode_name(mode);
        let plan = write_plan(
            outputs,
            &format!("figure1-{name}"),
            &world,
            mode,
            params,
            solver,
        )?;
        for &(x, y) in &layout.starts {
            let s = layout.state_of(x, y);
            let basin = world
                .basin(&plan.policy, s)
                .unwrap_or_else(|| "none".into());
            let steps = rollout(&world.mdp, &plan.policy, s).steps.len();
            let closest =
                closest_approach(&world, &plan.policy, s, "donut").expect("grid with a donut");
            writeln!(summary, "{name},{x},{y},{basin},{steps},{closest}").unwrap();
            println!("{name:>8}: start ({x},{y}) -> {basin} in {steps} steps, closest to donut {closest}");
        }
    }
    outputs.write("figure1-summary.csv", &summary)
}

/// The slot a rational estimate fills: `donut` is reported as both `donut1`
/// and `donut2`.
fn dual_view(e: &IrlEstimate, name: &str) -> f64 {
    if e.spec.kind.is_dual() {
        e.get(name).expect("dual parameter")
    } else {
        e.get(name.trim_end_matches(['1', '2']))
            .expect("rational parameter")
    }
}

fn figure2(outputs: &mut Outputs, args: &ExperimentArgs, params: &DualParams) -> Result<()> {
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    let world = bundled_world("donut-kale")?;
    let basis = RewardBasis::from_world(&world)?;
    let data_kinds = [PlanKind::Naive, PlanKind::Sophisticated];
    let seeds: Vec<u64> = (0..args.replicates as u64)
        .map(|r| args.seed.wrapping_add(r))
        .collect();

    let jobs: Vec<(PlanKind, usize)> = data_kinds
        .iter()
        .flat_map(|&k| (0..seeds.len()).map(move |r| (k, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(data_kind, r)| -> Result<(Dataset, Vec<IrlEstimate>)> {
            let dataset = generate_dataset(
                "donut-kale",
                &world.mdp,
                &world.rewards,
                params,
                data_kind,
                SamplingConfig {
                    n: args.n,
                    max_steps: 200,
                    seed: seeds[r],
                },
            )?;
            let fits = ModelKind::ALL
                .iter()
                .map(|&kind| {
                    let spec = ModelSpec {
                        kind,
                        params: *params,
                        free_psi: args.de.free_psi,
                    };
                    let config = de_config(&args.de, &spec, &basis, seeds[r])?;
                    Ok(fit_irl(&dataset, &world.mdp, &basis, &spec, &config)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((dataset, fits))
        })
        .collect::<Result<Vec<_>>>()?;

    let slots = ["donut1", "kale1", "donut2", "kale2"];
    let mut estimates = format!(
        "data,model,replicate,seed,pairs,{},log_likelihood,refined_log_likelihood\n",
        slots.join(",")
    );
    for (&(data_kind, r), (dataset, fits)) in jobs.iter().zip(&results) {
        outputs.write(
            &format!("figure2-data-{}-r{r}.txt", data_kind.name()),
            &serialize_dataset(dataset),
        )?;
        for e in fits {
            let values: Vec<String> = slots.iter().map(|s| dual_view(e, s).to_string()).collect();
            writeln!(
                estimates,
                "{},{},{r},{},{},{},{},{}",
                data_kind.name(),
                e.spec.kind.name(),
                seeds[r],
                e.n_pairs,
                values.join(","),
                e.log_likelihood,
                e.refined_log_likelihood
            )
            .unwrap();
        }
    }
    outputs.write("figure2-estimates.csv", &estimates)?;

    let mut agg = String::from("data,model,parameter,mean,sd\n");
    let mut signs =
        String::from("data,model,replicates,donut1_pos,donut2_neg,kale2_pos,sign_pattern,order\n");
    let mut groups = Vec::new();
    for data_kind in data_kinds {
        for (m, kind) in ModelKind::ALL.iter().enumerate() {
            let fits: Vec<&IrlEstimate> = jobs
                .iter()
                .zip(&results)
                .filter(|((k, _), _)| *k == data_kind)
                .map(|(_, (_, fits))| &fits[m])
                .collect();
            let column = |slot: &str| fits.iter().map(|e| dual_view(e, slot)).collect::<Vec<_>>();
            let mut bars = Vec::new();
            for slot in slots {
                let a = aggregate(slot, &column(slot));
                writeln!(
                    agg,
                    "{},{},{slot},{},{}",
                    data_kind.name(),
                    kind.name(),
                    a.mean,
                    a.sd
                )
                .unwrap();
                if kind.is_dual() || slot.ends_with('1') {
                    let label = if kind.is_dual() {
                        slot
                    } else {
                        slot.trim_end_matches('1')
                    };
                    bars.push((label.to_string(), a.mean, a.sd));
                }
            }
            groups.push(svg::BarGroup {
                label: format!("{} on {}", kind.name(), data_kind.name()),
                bars,
            });

            let count = |f: &dyn Fn(&IrlEstimate) -> bool| fits.iter().filter(|e| f(e)).count();
            let d1 = |e: &IrlEstimate| dual_view(e, "donut1");
            let k1 = |e: &IrlEstimate| dual_view(e, "kale1");
            let d2 = |e: &IrlEstimate| dual_view(e, "donut2");
            let k2 = |e: &IrlEstimate| dual_view(e, "kale2");
            writeln!(
                signs,
                "{},{},{},{},{},{},{},{}",
                data_kind.name(),
                kind.name(),
                fits.len(),
                count(&|e| d1(e) > 0.0),
                count(&|e| d2(e) < 0.0),
                count(&|e| k2(e) > 0.0),
                count(&|e| d1(e) > 0.0 && d2(e) < 0.0 && k2(e) > 0.0),
                count(&|e| d1(e) > k1(e) && k2(e) > d2(e)),
            )
            .unwrap();
        }
    }
    print!("{signs}");
    outputs.write("figure2-aggregate.csv", &agg)?;
    outputs.write("figure2-signs.csv", &signs)?;
    outputs.write(
        "figure2.svg",
        &svg::bar_chart("Inferred item rewards (mean +/- sd)", &groups),
    )
}

fn thresholds(
    outputs: &mut Outputs,
    model: &ModelArgs,
    params: &DualParams,
    solver: SolverConfig,
) -> Result<()> {
    let mut csv = String::from("world,psi,threshold,predicted,naive,soph\n");
    let mut mismatches = 0;
    for (name, threshold) in [
        ("snack-immediate", 2.0),
        ("snack-delayed", 2.0 * params.gamma2 / params.gamma1),
    ] {
        let world = bundled_world(name)?;
        for step in 0..=16 {
            let psi = step as f64 * 0.25;
            let p = model.resolve(params.with_psi(psi))?;
            let choose = |kind| -> Result<&str> {
                let plan = solve_plan(&world.mdp, &world.rewards, &p, kind, solver)?;
                Ok(world.action_names[plan.policy[0]].as_str())
            };
            let naive = choose(PlanKind::Naive)?;
            let soph = choose(PlanKind::Sophisticated)?;
            let predicted = if psi <= threshold { "kale" } else { "donut" };
            mismatches += usize::from(naive != predicted) + usize::from(soph != predicted);
            writeln!(csv, "{name},{psi},{threshold},{predicted},{naive},{soph}").unwrap();
        }
    }
    println!("{mismatches} choices differ from the closed-form thresholds");
    outputs.write("thresholds.csv", &csv)
}

fn stop_go(
    outputs: &mut Outputs,
    model: &ModelArgs,
    params: &DualParams,
    solver: SolverConfig,
) -> Result<()> {
    let world = bundled_world("stop-go")?;
    let (stop, go) = (0, 1);
    let stop_now = Policy::from_vec(vec![stop, stop, 0]);
    let stop_next = Policy::from_vec(vec![go, stop, 0]);
    let go_go = Policy::from_vec(vec![go, go, 0]);

    let mut psis: Vec<f64> = (0..=12).map(|i| i as f64 * 0.25).collect();
    if !psis.contains(&params.psi) {
        psis.push(params.psi);
        psis.sort_by(f64::total_cmp);
    }
    let mut csv = String::from(
        "psi,naive_t0,naive_t1,soph_t0,soph_t1,naive_stop0,naive_stop1,naive_gogo,soph_stop0,soph_stop1,soph_gogo\n",
    );
    for psi in psis {
        let p = model.resolve(params.with_psi(psi))?;
        let naive = solve_plan(&world.mdp, &world.rewards, &p, PlanKind::Naive, solver)?;
        let soph = solve_plan(
            &world.mdp,
            &world.rewards,
            &p,
            PlanKind::Sophisticated,
            solver,
        )?;
        let surrogate = naive_compromise_reward(&world.mdp, &world.rewards, &p, solver)?;
        let surrogate_value = |policy: &Policy| -> Result<f64> {
            Ok(policy_evaluation(&world.mdp, &surrogate, p.gamma2, policy, solver)?[0])
        };
        let objective = |policy: &Policy| -> Result<f64> {
            Ok(compromise_objective(&world.mdp, &world.rewards, &p, policy, solver)?[0])
        };
        let act = |plan: &CompromisePlan, s: usize| world.action_names[plan.policy[s]].clone();
        writeln!(
            csv,
            "{psi},{},{},{},{},{},{},{},{},{},{}",
            act(&naive, 0),
            act(&naive, 1),
            act(&soph, 0),
            act(&soph, 1),
            surrogate_value(&stop_now)?,
            surrogate_value(&stop_next)?,
            surrogate_value(&go_go)?,
            objective(&stop_now)?,
            objective(&stop_next)?,
            objective(&go_go)?,
        )
        .unwrap();
    }
    outputs.write("stopgo.csv", &csv)
}
