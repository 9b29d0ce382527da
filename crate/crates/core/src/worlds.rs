//! Bundled environments and the grid-world text format.
//!
//! A world file is UTF-8 text:
//!
//! ```text
//! grid 7x7
//! item 1 1 donut 1 -1 true
//! item 6 0 kale 0 1 true
//! start 0 6
//! ```
//!
//! `item X Y LABEL R1 R2 TERMINAL` places an item; `start X Y` marks a start
//! cell. Blank lines and `#` comments are accepted when parsing; serialisation
//! emits the canonical form above, which parses back to the identical spec.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, Policy, RewardPair, RewardTable};

pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub x: usize,
    pub y: usize,
    pub label: String,
    pub r1: f64,
    pub r2: f64,
    pub terminal: bool,
}

impl Item {
    pub fn new(x: usize, y: usize, label: &str, r1: f64, r2: f64, terminal: bool) -> Self {
        Self {
            x,
            y,
            label: label.to_string(),
            r1,
            r2,
            terminal,
        }
    }
}

/// A rectangular grid with the four cardinal moves. `y = 0` is the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    pub items: Vec<Item>,
    pub starts: Vec<(usize, usize)>,
}

impl GridWorldSpec {
    /// The bundled donut-kale layout: 7x7, kale in the top-right corner, start
    /// in the bottom-left corner, donut diagonally inside the top-left corner so
    /// that system 2's shortest path passes right next to it.
    pub fn donut_kale() -> Self {
        Self {
            width: 7,
            height: 7,
            items: vec![
                Item::new(1, 1, "donut", 1.0, -1.0, true),
                Item::new(6, 0, "kale", 0.0, 1.0, true),
            ],
            starts: vec![(0, 6)],
        }
    }

    pub fn state_of(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn cell_of(&self, state: usize) -> (usize, usize) {
        (state % self.width, state / self.width)
    }

    pub fn item(&self, label: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.label == label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidWorld(
                "grid dimensions must be positive".into(),
            ));
        }
        let mut cells = HashSet::new();
        for item in &self.items {
            if item.x >= self.width || item.y >= self.height {
                return Err(Error::InvalidWorld(format!(
                    "item '{}' at ({}, {}) lies outside the {}x{} grid",
                    item.label, item.x, item.y, self.width, self.height
                )));
            }
            if !cells.insert((item.x, item.y)) {
                return Err(Error::InvalidWorld(format!(
                    "more than one item at cell ({}, {})",
                    item.x, item.y
                )));
            }
            if !valid_label(&item.label) {
                return Err(Error::InvalidWorld(format!(
                    "item label '{}' must be non-empty without whitespace",
                    item.label
                )));
            }
            if !(item.r1.is_finite() && item.r2.is_finite()) {
                return Err(Error::InvalidWorld(format!(
                    "item '{}' has non-finite rewards",
                    item.label
                )));
            }
        }
        if !self.items.iter().any(|i| i.terminal) {
            return Err(Error::InvalidWorld(
                "at least one terminal item is required".into(),
            ));
        }
        for &(x, y) in &self.starts {
            if x >= self.width || y >= self.height {
                return Err(Error::InvalidWorld(format!(
                    "start cell ({x}, {y}) lies outside the grid"
                )));
            }
            if self
                .items
                .iter()
                .any(|i| i.terminal && i.x == x && i.y == y)
            {
                return Err(Error::InvalidWorld(format!(
                    "start cell ({x}, {y}) is a terminal item"
                )));
            }
        }
        Ok(())
    }

    fn target(&self, x: usize, y: usize, action: usize) -> (usize, usize) {
        match action {
            0 if y > 0 => (x, y - 1),
            1 if y + 1 < self.height => (x, y + 1),
            2 if x > 0 => (x - 1, y),
            3 if x + 1 < self.width => (x + 1, y),
            _ => (x, y),
        }
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(char::is_whitespace) && !label.starts_with('#')
}

/// An environment ready for planning: the MDP, both reward tables, and the
/// per-item features that rewards are built from.
#[derive(Debug, Clone)]
pub struct WorldBundle {
    pub name: String,
    pub mdp: Mdp,
    pub rewards: RewardPair,
    pub labels: Vec<String>,
    pub action_names: Vec<String>,
    /// `(item label, table)` where the table holds the probability that the
    /// `(state, action)` pair collects that item.
    pub item_features: Vec<(String, RewardTable)>,
    pub layout: Option<GridWorldSpec>,
}

impl WorldBundle {
    pub fn feature(&self, label: &str) -> Option<&RewardTable> {
        self.item_features
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, t)| t)
    }

    /// Rewards obtained by assigning `(r1, r2)` to each named item; every
    /// other `(state, action)` pair gets zero.
    pub fn rewards_for_items(&self, values: &[(&str, f64, f64)]) -> Result<RewardPair> {
        let (n, m) = (self.mdp.n_states(), self.mdp.n_actions());
        let mut r1 = RewardTable::zeros(n, m);
        let mut r2 = RewardTable::zeros(n, m);
        for &(label, v1, v2) in values {
            let feature = self
                .feature(label)
                .ok_or_else(|| Error::InvalidWorld(format!("world has no item '{label}'")))?;
            r1 = r1.add_scaled(feature, v1);
            r2 = r2.add_scaled(feature, v2);
        }
        Ok(RewardPair::new(r1, r2))
    }

    pub fn state_named(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The first item whose feature fires on `(state, action)`.
    pub fn collected_item(&self, state: usize, action: usize) -> Option<&str> {
        self.item_features
            .iter()
            .find(|(_, f)| f.get(state, action) > 0.0)
            .map(|(l, _)| l.as_str())
    }

    /// The item that ends the rollout of `policy` from `start`, or `None` if
    /// the rollout never terminates. A terminal `start` is its own basin.
    pub fn basin(&self, policy: &Policy, start: usize) -> Option<String> {
        if self.mdp.is_terminal(start) {
            return Some(self.labels[start].clone());
        }
        let path = rollout(&self.mdp, policy, start);
        if !path.terminated {
            return None;
        }
        let &(s, a) = path.steps.last().expect("non-terminal start takes a step");
        Some(
            self.collected_item(s, a)
                .map_or_else(|| self.labels[path.end].clone(), str::to_string),
        )
    }
}

/// Path of a deterministic policy, following the most likely successor (the
/// first listed on ties).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rollout {
    pub steps: Vec<(usize, usize)>,
    pub end: usize,
    pub terminated: bool,
}

impl Rollout {
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps
            .iter()
            .map(|&(s, _)| s)
            .chain(std::iter::once(self.end))
    }
}

/// Follows `policy` from `start` until a terminal state or a repeated state.
pub fn rollout(mdp: &Mdp, policy: &Policy, start: usize) -> Rollout {
    let mut seen = vec![false; mdp.n_states()];
    let mut steps = Vec::new();
    let mut state = start;
    while !mdp.is_terminal(state) && !seen[state] {
        seen[state] = true;
        let action = policy[state];
        let mut next = mdp.transition(state, action)[0];
        for &(t, p) in mdp.transition(state, action) {
            if p > next.1 {
                next = (t, p);
            }
        }
        steps.push((state, action));
        state = next.0;
    }
    Rollout {
        steps,
        end: state,
        terminated: mdp.is_terminal(state),
    }
}

/// Builds any grid world: deterministic moves, walls keep the agent in place,
/// entering an item cell pays that item's rewards, terminal items end the episode.
pub fn build_grid(spec: &GridWorldSpec, name: &str) -> Result<WorldBundle> {
    spec.validate()?;
    let n = spec.width * spec.height;
    let mut terminal = vec![false; n];
    for item in spec.items.iter().filter(|i| i.terminal) {
        terminal[spec.state_of(item.x, item.y)] = true;
    }

    let mut next = vec![Vec::new(); n];
    let mut features: Vec<(String, RewardTable)> = spec
        .items
        .iter()
        .map(|i| (i.label.clone(), RewardTable::zeros(n, 4)))
        .collect();
    for s in 0..n {
        if terminal[s] {
            continue;
        }
        let (x, y) = spec.cell_of(s);
        for a in 0..4 {
            let (tx, ty) = spec.target(x, y, a);
            let t = spec.state_of(tx, ty);
            next[s].push(t);
            if t == s {
                continue;
            }
            for (k, item) in spec.items.iter().enumerate() {
                if item.x == tx && item.y == ty {
                    features[k].1.set(s, a, 1.0);
                }
            }
        }
    }

    let mdp = Mdp::deterministic(4, terminal, next)?;
    let labels = (0..n)
        .map(|s| {
            let (x, y) = spec.cell_of(s);
            spec.items
                .iter()
                .find(|i| i.x == x && i.y == y)
                .map_or_else(|| format!("({x},{y})"), |i| i.label.clone())
        })
        .collect();

    let mut bundle = WorldBundle {
        name: name.to_string(),
        mdp,
        rewards: RewardPair::new(RewardTable::zeros(n, 4), RewardTable::zeros(n, 4)),
        labels,
        action_names: ACTION_NAMES.iter().map(|s| s.to_string()).collect(),
        item_features: features,
        layout: Some(spec.clone()),
    };
    let values: Vec<(&str, f64, f64)> = spec
        .items
        .iter()
        .map(|i| (i.label.as_str(), i.r1, i.r2))
        .collect();
    bundle.rewards = bundle.rewards_for_items(&values)?;
    Ok(bundle)
}

/// The donut-kale grid: exactly one terminal `donut` and one terminal `kale`.
pub fn build_donut_kale_grid(spec: &GridWorldSpec) -> Result<WorldBundle> {
    for label in ["donut", "kale"] {
        let matching: Vec<&Item> = spec.items.iter().filter(|i| i.label == label).collect();
        match matching.as_slice() {
            [item] if item.terminal => {}
            [_] => {
                return Err(Error::InvalidWorld(format!(
                    "the {label} item must be terminal"
                )))
            }
            [] => return Err(Error::InvalidWorld(format!("no {label} item"))),
            _ => return Err(Error::InvalidWorld(format!("more than one {label} item"))),
        }
    }
    build_grid(spec, "donut-kale")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnackDelay {
    /// Choose and eat now.
    Immediate,
    /// Choose now, eat at `t = 1`.
    Delayed,
}

/// Single snack choice. Action 0 is kale, action 1 is the donut, so ties go to kale.
pub fn build_snack_choice(delay: SnackDelay) -> WorldBundle {
    let eat = |kale: f64, donut: f64| vec![kale, donut];
    match delay {
        SnackDelay::Immediate => {
            // 0: choose, 1: done
            let mdp = Mdp::deterministic(2, vec![false, true], vec![vec![1, 1], vec![]])
                .expect("static world");
            let kale = RewardTable::from_rows(vec![eat(1.0, 0.0), eat(0.0, 0.0)]).unwrap();
            let donut = RewardTable::from_rows(vec![eat(0.0, 1.0), eat(0.0, 0.0)]).unwrap();
            finish_snack(
                "snack-immediate",
                mdp,
                vec!["choose", "done"],
                vec!["kale", "donut"],
                kale,
                donut,
            )
        }
        SnackDelay::Delayed => {
            // 0: choose, 1: kale committed, 2: donut committed, 3: done.
            // Committed states offer two identical "eat" actions.
            let mdp = Mdp::deterministic(
                2,
                vec![false, false, false, true],
                vec![vec![1, 2], vec![3, 3], vec![3, 3], vec![]],
            )
            .expect("static world");
            let kale = RewardTable::from_rows(vec![
                eat(0.0, 0.0),
                eat(1.0, 1.0),
                eat(0.0, 0.0),
                eat(0.0, 0.0),
            ])
            .unwrap();
            let donut = RewardTable::from_rows(vec![
                eat(0.0, 0.0),
                eat(0.0, 0.0),
                eat(1.0, 1.0),
                eat(0.0, 0.0),
            ])
            .unwrap();
            finish_snack(
                "snack-delayed",
                mdp,
                vec!["choose", "kale-committed", "donut-committed", "done"],
                vec!["kale", "donut"],
                kale,
                donut,
            )
        }
    }
}

fn finish_snack(
    name: &str,
    mdp: Mdp,
    labels: Vec<&str>,
    actions: Vec<&str>,
    kale: RewardTable,
    donut: RewardTable,
) -> WorldBundle {
    let mut bundle = WorldBundle {
        name: name.to_string(),
        rewards: RewardPair::new(
            RewardTable::zeros(mdp.n_states(), 2),
            RewardTable::zeros(mdp.n_states(), 2),
        ),
        mdp,
        labels: labels.into_iter().map(String::from).collect(),
        action_names: actions.into_iter().map(String::from).collect(),
        item_features: vec![("donut".into(), donut), ("kale".into(), kale)],
        layout: None,
    };
    bundle.rewards = bundle
        .rewards_for_items(&[("donut", 1.0, -1.0), ("kale", 0.0, 1.0)])
        .expect("items exist");
    bundle
}

/// Two-period Stop/Go problem. Action 0 is Stop (ends with no reward), action 1
/// is Go; going at `t1` eats the donut.
pub fn build_stop_go() -> WorldBundle {
    // 0: t0, 1: t1, 2: done
    let mdp = Mdp::deterministic(
        2,
        vec![false, false, true],
        vec![vec![2, 1], vec![2, 2], vec![]],
    )
    .expect("static world");
    let donut =
        RewardTable::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let mut bundle = WorldBundle {
        name: "stop-go".into(),
        rewards: RewardPair::new(RewardTable::zeros(3, 2), RewardTable::zeros(3, 2)),
        mdp,
        labels: vec!["t0".into(), "t1".into(), "done".into()],
        action_names: vec!["stop".into(), "go".into()],
        item_features: vec![("donut".into(), donut)],
        layout: None,
    };
    bundle.rewards = bundle
        .rewards_for_items(&[("donut", 1.0, -1.0)])
        .expect("donut exists");
    bundle
}

pub const BUNDLED_WORLDS: [&str; 4] = ["donut-kale", "snack-immediate", "snack-delayed", "stop-go"];

pub fn bundled_world(name: &str) -> Result<WorldBundle> {
    match name {
        "donut-kale" => build_donut_kale_grid(&GridWorldSpec::donut_kale()),
        "snack-immediate" => Ok(build_snack_choice(SnackDelay::Immediate)),
        "snack-delayed" => Ok(build_snack_choice(SnackDelay::Delayed)),
        "stop-go" => Ok(build_stop_go()),
        other => Err(Error::InvalidWorld(format!(
            "unknown world '{other}'; bundled worlds are: {}",
            BUNDLED_WORLDS.join(", ")
        ))),
    }
}

pub fn serialize_world(spec: &GridWorldSpec) -> String {
    let mut out = format!("grid {}x{}\n", spec.width, spec.height);
    for i in &spec.items {
        writeln!(
            out,
            "item {} {} {} {} {} {}",
            i.x, i.y, i.label, i.r1, i.r2, i.terminal
        )
        .unwrap();
    }
    for (x, y) in &spec.starts {
        writeln!(out, "start {x} {y}").unwrap();
    }
    out
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn split(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(b)) => {
                    items.push((b, &text[b..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(b) = start {
            items.push((b, &text[b..]));
        }
        Self { line, items }
    }

    fn err(&self, index: usize, message: String) -> Error {
        let column = self
            .items
            .get(index)
            .or(self.items.last())
            .map_or(1, |(c, _)| c + 1);
        Error::Parse {
            line: self.line,
            column,
            message,
        }
    }

    fn expect_len(&self, n: usize, form: &str) -> Result<()> {
        if self.items.len() != n {
            return Err(self.err(
                self.items.len().min(n),
                format!("expected `{form}`, found {} fields", self.items.len()),
            ));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&self, index: usize, what: &str) -> Result<T> {
        let raw = self.items[index].1;
        raw.parse()
            .map_err(|_| self.err(index, format!("invalid {what} '{raw}'")))
    }
}

pub fn parse_world_file(text: &str) -> Result<GridWorldSpec> {
    let mut dims: Option<(usize, usize)> = None;
    let mut items = Vec::new();
    let mut starts = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens = Tokens::split(i + 1, content);
        let Some(&(_, keyword)) = tokens.items.first() else {
            continue;
        };
        match keyword {
            "grid" => {
                tokens.expect_len(2, "grid WIDTHxHEIGHT")?;
                if dims.is_some() {
                    return Err(tokens.err(0, "duplicate grid line".into()));
                }
                let (w, h) = tokens.items[1]
                    .1
                    .split_once('x')
                    .ok_or_else(|| tokens.err(1, "expected WIDTHxHEIGHT".into()))?;
                let parse_dim = |s: &str| {
                    s.parse::<usize>()
                        .ok()
                        .filter(|&d| d > 0)
                        .ok_or_else(|| tokens.err(1, format!("invalid grid dimension '{s}'")))
                };
                dims = Some((parse_dim(w)?, parse_dim(h)?));
            }
            "item" => {
                tokens.expect_len(7, "item X Y LABEL R1 R2 TERMINAL")?;
                let r1: f64 = tokens.parse(4, "reward")?;
                let r2: f64 = tokens.parse(5, "reward")?;
                if !r1.is_finite() {
                    return Err(tokens.err(4, "reward must be finite".into()));
                }
                if !r2.is_finite() {
                    return Err(tokens.err(5, "reward must be finite".into()));
                }
                items.push(Item {
                    x: tokens.parse(1, "x coordinate")?,
                    y: tokens.parse(2, "y coordinate")?,
                    label: tokens.items[3].1.to_string(),
                    r1,
                    r2,
                    terminal: tokens.parse(6, "terminal flag (true/false)")?,
                });
            }
            "start" => {
                tokens.expect_len(3, "start X Y")?;
                starts.push((
                    tokens.parse(1, "x coordinate")?,
                    tokens.parse(2, "y coordinate")?,
                ));
            }
            other => {
                return Err(tokens.err(0, format!("unknown directive '{other}'")));
            }
        }
    }

    let (width, height) = dims.ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "missing `grid WIDTHxHEIGHT` line".into(),
    })?;
    let spec = GridWorldSpec {
        width,
        height,
        items,
        starts,
    };
    spec.validate()?;
    Ok(spec)
}
