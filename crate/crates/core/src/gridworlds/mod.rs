//! Side-effect gridworlds compiled into tabular MDPs.
//!
//! A [`GridSpec`] lists the objects placed on a grid and the features exposed
//! to the reward. [`compile`] enumerates every reachable world configuration
//! and produces an [`EnvInstance`] whose states index those configurations.

mod scenarios;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::TabularMdp;

pub use scenarios::{
    build_apple_collection, build_batteries, build_far_away_vase, build_room_with_vase,
    build_scenario, build_toy_train, PriorMode, ScenarioBundle, SCENARIO_NAMES,
};

/// `(x, y)` with `x` growing rightwards and `y` growing downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u8,
    pub y: u8,
}

pub const fn cell(x: u8, y: u8) -> Cell {
    Cell { x, y }
}

impl Cell {
    pub fn manhattan(self, other: Cell) -> usize {
        (self.x.abs_diff(other.x) + self.y.abs_diff(other.y)) as usize
    }

    fn adjacent(self, other: Cell) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Noop,
    Harvest,
    Deposit,
}

impl Action {
    pub const MOVES: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Noop];

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Noop => "NOOP",
            Action::Harvest => "HARVEST",
            Action::Deposit => "DEPOSIT",
        }
    }

    fn delta(self) -> (i16, i16) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            _ => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DoorColor {
    Black,
    Purple,
}

/// A train running around a closed loop of track cells, one cell per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub track: Vec<Cell>,
    /// Entering the train's cell breaks it.
    pub breakable: bool,
    /// Steps of charge a delivered battery provides; `None` for an
    /// uncharged train that runs forever.
    pub battery_charge: Option<u8>,
}

/// Features exposed to rewards, in the order they appear in `f(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    BrokenVases,
    OnCarpet,
    AtDoor(DoorColor),
    TrainBroken,
    TrainAt(u8),
    TrainOperational,
    Batteries,
    BasketApples,
    TreeApples,
    Carrying,
    AgentAt(Cell),
}

impl FeatureKind {
    pub fn label(&self) -> String {
        match self {
            FeatureKind::BrokenVases => "broken_vases".into(),
            FeatureKind::OnCarpet => "on_carpet".into(),
            FeatureKind::AtDoor(DoorColor::Black) => "at_black_door".into(),
            FeatureKind::AtDoor(DoorColor::Purple) => "at_purple_door".into(),
            FeatureKind::TrainBroken => "train_broken".into(),
            FeatureKind::TrainAt(i) => format!("train_at_{i}"),
            FeatureKind::TrainOperational => "train_operational".into(),
            FeatureKind::Batteries => "batteries".into(),
            FeatureKind::BasketApples => "basket_apples".into(),
            FeatureKind::TreeApples => "tree_apples".into(),
            FeatureKind::Carrying => "carrying_apple".into(),
            FeatureKind::AgentAt(c) => format!("agent_at_{}_{}", c.x, c.y),
        }
    }
}

/// Grid layout, object placements and feature list of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: u8,
    pub height: u8,
    pub walls: BTreeSet<Cell>,
    pub vases: Vec<Cell>,
    pub carpets: Vec<Cell>,
    pub doors: Vec<(DoorColor, Cell)>,
    /// Trees and the basket block movement.
    pub trees: Vec<Cell>,
    pub basket: Option<Cell>,
    pub batteries: Vec<Cell>,
    pub train: Option<TrainSpec>,
    /// Per-step probability that an empty tree grows an apple.
    pub apple_regrowth: f64,
    /// Largest basket count represented; deposits beyond it are no-ops.
    pub basket_capacity: u8,
    pub features: Vec<FeatureKind>,
}

impl GridSpec {
    pub fn empty(width: u8, height: u8) -> Self {
        Self {
            width,
            height,
            walls: BTreeSet::new(),
            vases: Vec::new(),
            carpets: Vec::new(),
            doors: Vec::new(),
            trees: Vec::new(),
            basket: None,
            batteries: Vec::new(),
            train: None,
            apple_regrowth: 0.0,
            basket_capacity: 0,
            features: Vec::new(),
        }
    }

    fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Cells the agent may stand on.
    pub fn walkable(&self, c: Cell) -> bool {
        self.in_bounds(c)
            && !self.walls.contains(&c)
            && !self.trees.contains(&c)
            && self.basket != Some(c)
    }

    pub fn walkable_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| cell(x, y)))
            .filter(|&c| self.walkable(c))
            .collect()
    }

    pub fn actions(&self) -> Vec<Action> {
        let mut actions = Action::MOVES.to_vec();
        if !self.trees.is_empty() || self.basket.is_some() {
            actions.extend([Action::Harvest, Action::Deposit]);
        }
        actions
    }

    pub fn validate(&self) -> Result<()> {
        let placed = self
            .vases
            .iter()
            .chain(&self.carpets)
            .chain(self.doors.iter().map(|(_, c)| c))
            .chain(&self.batteries);
        for &c in placed {
            if !self.walkable(c) {
                return invalid(format!("object at {c} is out of bounds or blocked"));
            }
        }
        for &c in self.trees.iter().chain(&self.basket) {
            if !self.in_bounds(c) || self.walls.contains(&c) {
                return invalid(format!("tree or basket at {c} is out of bounds or on a wall"));
            }
        }
        if self.vases.len() > 8 || self.trees.len() > 8 || self.batteries.len() > 8 {
            return invalid("at most eight vases, trees and batteries are supported");
        }
        if let Some(train) = &self.train {
            let n = train.track.len();
            if n < 2 {
                return invalid("a train track needs at least two cells");
            }
            let distinct: BTreeSet<_> = train.track.iter().collect();
            if distinct.len() != n {
                return invalid("train track visits a cell twice");
            }
            for i in 0..n {
                let (a, b) = (train.track[i], train.track[(i + 1) % n]);
                if !self.walkable(a) {
                    return invalid(format!("track cell {a} is blocked"));
                }
                if !a.adjacent(b) {
                    return invalid(format!("track cells {a} and {b} are not adjacent"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.apple_regrowth) {
            return invalid("regrowth probability outside [0, 1]");
        }
        for kind in &self.features {
            match kind {
                FeatureKind::TrainAt(i) => match &self.train {
                    Some(t) if (*i as usize) < t.track.len() => {}
                    _ => return invalid(format!("feature {} refers to a missing track cell", kind.label())),
                },
                FeatureKind::AgentAt(c) if !self.walkable(*c) => {
                    return invalid(format!("feature {} refers to a blocked cell", kind.label()))
                }
                FeatureKind::AtDoor(color) if !self.doors.iter().any(|(d, _)| d == color) => {
                    return invalid(format!("feature {} refers to a missing door", kind.label()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn door(&self, color: DoorColor) -> Option<Cell> {
        self.doors.iter().find(|(d, _)| *d == color).map(|(_, c)| *c)
    }
}

/// Train position and condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainState {
    /// Index into the track loop.
    pub pos: u8,
    pub broken: bool,
    /// Remaining steps of charge; unused for uncharged trains.
    pub charge: u8,
}

/// One configuration of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct World {
    pub agent: Cell,
    /// Bit `i` set when vase `i` is broken.
    pub broken_vases: u8,
    pub train: Option<TrainState>,
    /// Bit `i` set when battery `i` still lies on the map.
    pub batteries: u8,
    /// Whether the agent holds a battery.
    pub holding_battery: bool,
    /// Bit `i` set when tree `i` bears an apple.
    pub tree_apples: u8,
    pub carrying_apple: bool,
    pub basket: u8,
}

impl World {
    pub fn at(agent: Cell) -> Self {
        Self {
            agent,
            broken_vases: 0,
            train: None,
            batteries: 0,
            holding_battery: false,
            tree_apples: 0,
            carrying_apple: false,
            basket: 0,
        }
    }

    pub fn train_operational(&self, spec: &GridSpec) -> bool {
        match (self.train, &spec.train) {
            (Some(t), Some(ts)) => !t.broken && (ts.battery_charge.is_none() || t.charge > 0),
            _ => false,
        }
    }

    pub fn describe(&self, spec: &GridSpec) -> String {
        let mut out = format!("agent{}", self.agent);
        if !spec.vases.is_empty() {
            out += &format!(" broken_vases={}", self.broken_vases.count_ones());
        }
        if let Some(t) = self.train {
            out += &format!(" train@{}", t.pos);
            if t.broken {
                out += " broken";
            }
            if spec.train.as_ref().is_some_and(|s| s.battery_charge.is_some()) {
                out += &format!(" charge={}", t.charge);
            }
        }
        if !spec.batteries.is_empty() {
            out += &format!(
                " batteries={} holding={}",
                self.batteries.count_ones(),
                self.holding_battery as u8
            );
        }
        if !spec.trees.is_empty() {
            out += &format!(
                " trees={:0width$b} carrying={} basket={}",
                self.tree_apples,
                self.carrying_apple as u8,
                self.basket,
                width = spec.trees.len()
            );
        }
        out
    }
}

/// Deterministic part of one step; apple regrowth is applied afterwards.
fn step_world(spec: &GridSpec, w: &World, action: Action) -> World {
    let mut next = *w;
    let (dx, dy) = action.delta();
    if (dx, dy) != (0, 0) {
        let x = w.agent.x as i16 + dx;
        let y = w.agent.y as i16 + dy;
        if x >= 0 && y >= 0 {
            let target = cell(x as u8, y as u8);
            if spec.walkable(target) {
                next.agent = target;
            }
        }
    }
    match action {
        Action::Harvest if !w.carrying_apple => {
            if let Some(i) = spec
                .trees
                .iter()
                .enumerate()
                .position(|(i, &t)| w.tree_apples & (1 << i) != 0 && t.adjacent(w.agent))
            {
                next.tree_apples &= !(1 << i);
                next.carrying_apple = true;
            }
        }
        Action::Deposit => {
            if let Some(b) = spec.basket {
                if w.carrying_apple && b.adjacent(w.agent) && w.basket < spec.basket_capacity {
                    next.carrying_apple = false;
                    next.basket += 1;
                }
            }
        }
        _ => {}
    }
    for (i, &v) in spec.vases.iter().enumerate() {
        if next.agent == v {
            next.broken_vases |= 1 << i;
        }
    }
    if !next.holding_battery {
        if let Some(i) = spec
            .batteries
            .iter()
            .enumerate()
            .position(|(i, &b)| next.batteries & (1 << i) != 0 && b == next.agent)
        {
            next.batteries &= !(1 << i);
            next.holding_battery = true;
        }
    }
    if let (Some(ts), Some(mut t)) = (&spec.train, w.train) {
        let running = !t.broken && (ts.battery_charge.is_none() || t.charge > 0);
        if running {
            t.pos = ((t.pos as usize + 1) % ts.track.len()) as u8;
            if ts.battery_charge.is_some() {
                t.charge -= 1;
            }
        }
        if ts.track[t.pos as usize] == next.agent {
            if ts.breakable {
                t.broken = true;
            }
            if let Some(full) = ts.battery_charge {
                if next.holding_battery {
                    next.holding_battery = false;
                    t.charge = full;
                }
            }
        }
        next.train = Some(t);
    }
    next
}

/// Successor distribution of `w` under `action`.
pub fn transition(spec: &GridSpec, w: &World, action: Action) -> Vec<(World, f64)> {
    let base = step_world(spec, w, action);
    let empty: Vec<usize> = (0..spec.trees.len())
        .filter(|&i| w.tree_apples & (1 << i) == 0)
        .collect();
    if spec.apple_regrowth == 0.0 || empty.is_empty() {
        return vec![(base, 1.0)];
    }
    let p = spec.apple_regrowth;
    let mut out = Vec::with_capacity(1 << empty.len());
    for mask in 0u32..(1 << empty.len()) {
        let mut next = base;
        let mut prob = 1.0;
        for (k, &i) in empty.iter().enumerate() {
            if mask & (1 << k) != 0 {
                next.tree_apples |= 1 << i;
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        if prob > 0.0 {
            out.push((next, prob));
        }
    }
    out
}

/// Feature vector of a world configuration.
pub fn world_features(spec: &GridSpec, w: &World) -> Vec<f64> {
    spec.features
        .iter()
        .map(|kind| match *kind {
            FeatureKind::BrokenVases => w.broken_vases.count_ones() as f64,
            FeatureKind::OnCarpet => spec.carpets.contains(&w.agent) as u8 as f64,
            FeatureKind::AtDoor(color) => (spec.door(color) == Some(w.agent)) as u8 as f64,
            FeatureKind::TrainBroken => w.train.is_some_and(|t| t.broken) as u8 as f64,
            FeatureKind::TrainAt(i) => w.train.is_some_and(|t| t.pos == i) as u8 as f64,
            FeatureKind::TrainOperational => w.train_operational(spec) as u8 as f64,
            FeatureKind::Batteries => w.batteries.count_ones() as f64,
            FeatureKind::BasketApples => w.basket as f64,
            FeatureKind::TreeApples => w.tree_apples.count_ones() as f64,
            FeatureKind::Carrying => w.carrying_apple as u8 as f64,
            FeatureKind::AgentAt(c) => (w.agent == c) as u8 as f64,
        })
        .collect()
}

/// A compiled environment: the MDP plus the world configuration behind every
/// state index.
#[derive(Debug, Clone)]
pub struct EnvInstance {
    pub name: String,
    pub spec: GridSpec,
    pub mdp: TabularMdp,
    pub actions: Vec<Action>,
    worlds: Vec<World>,
    index: HashMap<World, usize>,
}

impl EnvInstance {
    pub fn feature_names(&self) -> Vec<String> {
        self.spec.features.iter().map(FeatureKind::label).collect()
    }

    pub fn encode(&self, w: &World) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn decode(&self, state: usize) -> &World {
        &self.worlds[state]
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn action_index(&self, action: Action) -> Option<usize> {
        self.actions.iter().position(|&a| a == action)
    }

    pub fn feature_index(&self, kind: FeatureKind) -> Option<usize> {
        self.spec.features.iter().position(|&k| k == kind)
    }
}

/// Enumerates every configuration reachable from `seeds` and builds the MDP.
///
/// States are numbered in breadth-first discovery order from the seeds, so
/// the numbering is a pure function of the spec and seeds.
pub fn compile(name: &str, spec: GridSpec, seeds: &[World]) -> Result<EnvInstance> {
    spec.validate()?;
    if spec.features.is_empty() {
        return invalid("an environment needs at least one feature");
    }
    let actions = spec.actions();
    let mut worlds: Vec<World> = Vec::new();
    let mut index: HashMap<World, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for seed in seeds {
        if !spec.walkable(seed.agent) {
            return invalid(format!("seed world places the agent on blocked cell {}", seed.agent));
        }
        if index.contains_key(seed) {
            continue;
        }
        index.insert(*seed, worlds.len());
        worlds.push(*seed);
        queue.push_back(*seed);
    }
    let mut successors: Vec<Vec<(World, f64)>> = Vec::new();
    while let Some(w) = queue.pop_front() {
        for &a in &actions {
            let dist = transition(&spec, &w, a);
            for (n, _) in &dist {
                if !index.contains_key(n) {
                    index.insert(*n, worlds.len());
                    worlds.push(*n);
                    queue.push_back(*n);
                }
            }
            successors.push(dist);
        }
    }
    let rows = successors
        .into_iter()
        .map(|dist| dist.into_iter().map(|(n, p)| (index[&n], p)).collect())
        .collect();
    let features = worlds.iter().map(|w| world_features(&spec, w)).collect();
    let names = worlds.iter().map(|w| w.describe(&spec)).collect();
    let mdp = TabularMdp::from_sparse(actions.len(), rows, features, Some(names))?;
    Ok(EnvInstance {
        name: name.to_string(),
        spec,
        mdp,
        actions,
        worlds,
        index,
    })
}
