//! Exact stochastic simulation of the kinetic model.
//!
//! Every interior lattice cell carries one propensity: the summed attachment
//! rate of all tiles that could bind there (empty cell) or its detachment rate
//! (occupied, non-seed cell). Propensities live in a binary sum tree, so an
//! event is drawn in `O(log cells)` and only the touched cell and its four
//! neighbors are recomputed afterwards.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::atam::{terminal_assembly, Assembly, AssemblyError};
use crate::ktam::KineticParams;
use crate::report::fmt_num;
use crate::rng::stream_rng;
use crate::tile::{ConcentrationVector, Configuration, Direction, Pos, TileSystem};

/// Growth bound used when a reference assembly has to be computed on the fly.
pub const DEFAULT_MAX_POSITIONS: usize = 1_000_000;

const EMPTY: u16 = u16::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("no concentration for tile \"{0}\", which appears outside the seed")]
    MissingConcentration(String),
    #[error(transparent)]
    System(#[from] crate::error::SystemError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("too many tile types for the simulator ({0})")]
    TooManyTiles(usize),
}

/// Which events the simulator allows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Model {
    /// Full kinetic model: attachments with at least one matched bond (or
    /// zero with `allow_zero_bond`) and strength-dependent detachments.
    #[default]
    Kinetic,
    /// Only attachments at or above the temperature and no detachments.
    Irreversible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Defaults to 50 times the reference footprint size.
    pub max_events: Option<u64>,
    pub time_cap: Option<f64>,
    pub allow_zero_bond: bool,
    /// Stop as soon as every reference position is occupied.
    pub stop_when_complete: bool,
    pub record_events: bool,
    /// Free cells kept around the reference footprint. Cells beyond it form
    /// a wall that never receives tiles.
    pub margin: i64,
    pub model: Model,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_events: None,
            time_cap: None,
            allow_zero_bond: false,
            stop_when_complete: true,
            record_events: false,
            margin: 24,
            model: Model::Kinetic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    FootprintFilled,
    EventBudget,
    TimeCap,
    Stuck,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::FootprintFilled => "footprint-filled",
            Termination::EventBudget => "event-budget",
            Termination::TimeCap => "time-cap",
            Termination::Stuck => "stuck",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Attach,
    Detach,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub pos: Pos,
    pub tile: usize,
    /// Matched strength at the moment of the event.
    pub bond: u32,
}

impl Event {
    /// Tab-separated `time, A|D, x, y, tile, b`.
    pub fn log_line(&self, system: &TileSystem) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            fmt_num(self.time),
            match self.kind {
                EventKind::Attach => 'A',
                EventKind::Detach => 'D',
            },
            self.pos.x,
            self.pos.y,
            system.tile_name(self.tile),
            self.bond
        )
    }
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub final_config: Configuration,
    pub elapsed: f64,
    pub attachments: u64,
    pub detachments: u64,
    pub terminated_by: Termination,
    pub rng_seed: u64,
    pub run_index: u64,
    pub events: Vec<Event>,
}

/// Binary sum tree over cell propensities.
#[derive(Clone, Debug)]
struct RateTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    fn new(n: usize) -> Self {
        let leaves = n.next_power_of_two().max(1);
        RateTree {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut j = self.leaves + i;
        if self.nodes[j] == v {
            return;
        }
        self.nodes[j] = v;
        while j > 1 {
            j /= 2;
            self.nodes[j] = self.nodes[2 * j] + self.nodes[2 * j + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u`, for `0 <= u < total`.
    fn find(&self, mut u: f64) -> usize {
        let mut j = 1;
        while j < self.leaves {
            let left = self.nodes[2 * j];
            if u < left {
                j *= 2;
            } else {
                u -= left;
                j = 2 * j + 1;
            }
        }
        j - self.leaves
    }
}

/// Immutable per-batch setup: canvas geometry, rate tables and the
/// reference footprint. Cheap to share across threads.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    system: &'a TileSystem,
    reference: Assembly,
    options: SimOptions,
    max_events: u64,
    x0: i64,
    y0: i64,
    width: usize,
    height: usize,
    // (cell, tile) for every seed position
    seed_cells: Vec<(usize, u16)>,
    is_seed: Vec<bool>,
    footprint: Vec<bool>,
    footprint_target: usize,
    free_tiles: Vec<usize>,
    attach_rate: Vec<f64>,
    detach_rate: Vec<f64>,
    edges: Vec<[usize; 4]>,
    strengths: Vec<u32>,
    threshold: u32,
}

impl<'a> Simulator<'a> {
    /// Computes the reference terminal assembly and prepares a simulator.
    pub fn new(
        system: &'a TileSystem,
        conc: &ConcentrationVector,
        params: &KineticParams,
        options: SimOptions,
    ) -> Result<Self, SimError> {
        let reference = terminal_assembly(system, DEFAULT_MAX_POSITIONS)?;
        Self::with_reference(system, reference, conc, params, options)
    }

    pub fn with_reference(
        system: &'a TileSystem,
        reference: Assembly,
        conc: &ConcentrationVector,
        params: &KineticParams,
        options: SimOptions,
    ) -> Result<Self, SimError> {
        let n_tiles = system.tile_count();
        if n_tiles >= EMPTY as usize {
            return Err(SimError::TooManyTiles(n_tiles));
        }
        let per_tile = conc.for_system(system)?;
        for (i, &n) in reference.counts().iter().enumerate() {
            if n > 0 && per_tile[i].is_none() {
                return Err(SimError::MissingConcentration(system.tile_name(i).to_string()));
            }
        }
        let free_tiles: Vec<usize> = (0..n_tiles).filter(|&i| per_tile[i].is_some()).collect();
        let attach_rate: Vec<f64> = per_tile
            .iter()
            .map(|c| c.map_or(0.0, |c| params.forward_rate(c)))
            .collect();

        let (lo, hi) = reference
            .config()
            .bounds()
            .unwrap_or((Pos::new(0, 0), Pos::new(0, 0)));
        let pad = options.margin.max(0) + 1;
        let x0 = lo.x - pad;
        let y0 = lo.y - pad;
        let width = (hi.x - lo.x + 1 + 2 * pad) as usize;
        let height = (hi.y - lo.y + 1 + 2 * pad) as usize;

        let mut sim = Simulator {
            system,
            options: options.clone(),
            max_events: 0,
            x0,
            y0,
            width,
            height,
            seed_cells: Vec::new(),
            is_seed: vec![false; width * height],
            footprint: vec![false; width * height],
            footprint_target: 0,
            free_tiles,
            attach_rate,
            detach_rate: Vec::new(),
            edges: (0..n_tiles)
                .map(|t| Direction::ALL.map(|d| system.edge_id(t, d)))
                .collect(),
            strengths: Vec::new(),
            threshold: match options.model {
                Model::Kinetic if options.allow_zero_bond => 0,
                Model::Kinetic => 1,
                Model::Irreversible => system.temperature(),
            },
            reference,
        };
        sim.strengths = (0..=system.glues().len())
            .map(|id| system.glue_strength_by_id(id))
            .collect();
        let max_bond: u32 = 4 * sim.strengths.iter().copied().max().unwrap_or(0);
        sim.detach_rate = (0..=max_bond).map(|b| params.reverse_rate(b)).collect();
        for (p, t) in system.seed().iter() {
            let c = sim.cell(p).expect("seed inside canvas");
            sim.seed_cells.push((c, t as u16));
            sim.is_seed[c] = true;
        }
        for p in sim.reference.footprint().collect::<Vec<_>>() {
            let c = sim.cell(p).expect("footprint inside canvas");
            sim.footprint[c] = true;
        }
        sim.footprint_target = sim.reference.grown_len();
        sim.max_events = options
            .max_events
            .unwrap_or(50 * sim.reference.footprint_len() as u64);
        Ok(sim)
    }

    pub fn system(&self) -> &TileSystem {
        self.system
    }

    pub fn reference(&self) -> &Assembly {
        &self.reference
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }

    pub fn max_events(&self) -> u64 {
        self.max_events
    }

    fn cell(&self, p: Pos) -> Option<usize> {
        let cx = p.x - self.x0;
        let cy = p.y - self.y0;
        if cx < 0 || cy < 0 || cx >= self.width as i64 || cy >= self.height as i64 {
            return None;
        }
        Some(cy as usize * self.width + cx as usize)
    }

    fn pos(&self, c: usize) -> Pos {
        Pos::new(self.x0 + (c % self.width) as i64, self.y0 + (c / self.width) as i64)
    }

    fn is_wall(&self, c: usize) -> bool {
        let cx = c % self.width;
        let cy = c / self.width;
        cx == 0 || cy == 0 || cx + 1 == self.width || cy + 1 == self.height
    }

    #[inline]
    fn neighbors(&self, c: usize) -> [usize; 4] {
        // Indexed by Direction: N, E, S, W.
        [c + self.width, c + 1, c - self.width, c - 1]
    }

    /// Fresh state holding only the seed.
    pub fn state(&self) -> SimState<'_, 'a> {
        let mut st = SimState {
            sim: self,
            grid: vec![EMPTY; self.width * self.height],
            tree: RateTree::new(self.width * self.height),
            time: 0.0,
            attachments: 0,
            detachments: 0,
            filled: 0,
            events: Vec::new(),
        };
        for &(c, t) in &self.seed_cells {
            st.grid[c] = t;
        }
        for c in 0..st.grid.len() {
            if !self.is_wall(c) {
                let r = st.propensity(c);
                st.tree.set(c, r);
            }
        }
        st
    }

    /// One complete run on stream `run_index` of `rng_seed`.
    pub fn run(&self, rng_seed: u64, run_index: u64) -> SimResult {
        let mut rng = stream_rng(rng_seed, run_index);
        let mut st = self.state();
        let terminated_by = st.run_to_end(&mut rng);
        SimResult {
            final_config: st.config(),
            elapsed: st.time,
            attachments: st.attachments,
            detachments: st.detachments,
            terminated_by,
            rng_seed,
            run_index,
            events: std::mem::take(&mut st.events),
        }
    }
}

/// Outcome of a single [`SimState::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Event(Event),
    Stuck,
    TimeCap,
}

/// Mutable state of one simulation run.
#[derive(Clone, Debug)]
pub struct SimState<'s, 'a> {
    sim: &'s Simulator<'a>,
    grid: Vec<u16>,
    tree: RateTree,
    time: f64,
    attachments: u64,
    detachments: u64,
    filled: usize,
    events: Vec<Event>,
}

impl<'s, 'a> SimState<'s, 'a> {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.attachments + self.detachments
    }

    pub fn attachments(&self) -> u64 {
        self.attachments
    }

    pub fn detachments(&self) -> u64 {
        self.detachments
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// True when every reference footprint position holds some tile.
    pub fn is_complete(&self) -> bool {
        self.filled == self.sim.footprint_target
    }

    pub fn tile_at(&self, p: Pos) -> Option<usize> {
        self.sim
            .cell(p)
            .and_then(|c| (self.grid[c] != EMPTY).then_some(self.grid[c] as usize))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn config(&self) -> Configuration {
        let mut config = Configuration::new();
        for (c, &t) in self.grid.iter().enumerate() {
            if t == EMPTY {
                continue;
            }
            let p = self.sim.pos(c);
            if self.sim.is_seed[c] {
                config.place_seed(p, t as usize);
            } else {
                config.attach(p, t as usize);
            }
        }
        config
    }

    #[inline]
    fn bond(&self, tile: usize, c: usize) -> u32 {
        let sim = self.sim;
        let edges = &sim.edges[tile];
        let nb = sim.neighbors(c);
        let mut b = 0;
        for d in 0..4 {
            let n = self.grid[nb[d]];
            if n != EMPTY {
                let g = edges[d];
                if g == sim.edges[n as usize][(d + 2) % 4] {
                    b += sim.strengths[g];
                }
            }
        }
        b
    }

    fn has_occupied_neighbor(&self, c: usize) -> bool {
        self.sim.neighbors(c).iter().any(|&n| self.grid[n] != EMPTY)
    }

    fn propensity(&self, c: usize) -> f64 {
        let sim = self.sim;
        let t = self.grid[c];
        if t != EMPTY {
            if sim.is_seed[c] || sim.options.model == Model::Irreversible {
                return 0.0;
            }
            return sim.detach_rate[self.bond(t as usize, c) as usize];
        }
        if !self.has_occupied_neighbor(c) {
            return 0.0;
        }
        sim.free_tiles
            .iter()
            .filter(|&&tile| self.bond(tile, c) >= sim.threshold)
            .map(|&tile| sim.attach_rate[tile])
            .sum()
    }

    fn refresh(&mut self, c: usize) {
        for n in std::iter::once(c).chain(self.sim.neighbors(c)) {
            if !self.sim.is_wall(n) {
                let r = self.propensity(n);
                self.tree.set(n, r);
            }
        }
    }

    /// Draws and applies the next event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Step {
        let total = self.tree.total();
        if !(total > 0.0) {
            return Step::Stuck;
        }
        let wait: f64 = Exp1.sample(rng);
        let next = self.time + wait / total;
        if let Some(cap) = self.sim.options.time_cap {
            if next > cap {
                self.time = cap;
                return Step::TimeCap;
            }
        }
        self.time = next;

        let c = loop {
            let u = rng.random::<f64>() * total;
            let c = self.tree.find(u);
            if self.tree.get(c) > 0.0 {
                break c;
            }
        };
        let sim = self.sim;
        let event = if self.grid[c] == EMPTY {
            let candidates: Vec<(usize, u32)> = sim
                .free_tiles
                .iter()
                .map(|&t| (t, self.bond(t, c)))
                .filter(|&(_, b)| b >= sim.threshold)
                .collect();
            let rate = self.tree.get(c);
            let mut u = rng.random::<f64>() * rate;
            let mut chosen = *candidates.last().expect("positive propensity");
            for &(t, b) in &candidates {
                let r = sim.attach_rate[t];
                if u < r {
                    chosen = (t, b);
                    break;
                }
                u -= r;
            }
            self.grid[c] = chosen.0 as u16;
            self.attachments += 1;
            if sim.footprint[c] && !sim.is_seed[c] {
                self.filled += 1;
            }
            Event {
                time: self.time,
                kind: EventKind::Attach,
                pos: sim.pos(c),
                tile: chosen.0,
                bond: chosen.1,
            }
        } else {
            let t = self.grid[c] as usize;
            let b = self.bond(t, c);
            self.grid[c] = EMPTY;
            self.detachments += 1;
            if sim.footprint[c] {
                self.filled -= 1;
            }
            Event {
                time: self.time,
                kind: EventKind::Detach,
                pos: sim.pos(c),
                tile: t,
                bond: b,
            }
        };
        self.refresh(c);
        if sim.options.record_events {
            self.events.push(event);
        }
        Step::Event(event)
    }

    /// Steps until completion (if requested), the event budget, the time cap
    /// or a state with no possible events.
    pub fn run_to_end<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Termination {
        loop {
            if self.sim.options.stop_when_complete && self.is_complete() {
                return Termination::FootprintFilled;
            }
            if self.event_count() >= self.sim.max_events {
                return Termination::EventBudget;
            }
            match self.step(rng) {
                Step::Event(_) => {}
                Step::Stuck => return Termination::Stuck,
                Step::TimeCap => return Termination::TimeCap,
            }
        }
    }
}

/// Runs one simulation of `system`.
pub fn simulate(
    system: &TileSystem,
    conc: &ConcentrationVector,
    params: &KineticParams,
    rng_seed: u64,
    options: SimOptions,
) -> Result<SimResult, SimError> {
    Ok(Simulator::new(system, conc, params, options)?.run(rng_seed, 0))
}
