//! Error-free (combinatorial) assembly: attachability, terminal assemblies,
//! tile counts, rectilinearity and assembly depth.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::tile::{Configuration, DirSet, Direction, Pos, TileSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("nondeterministic at {pos}: {{{}}}", .tiles.join(","))]
    Nondeterministic { pos: Pos, tiles: Vec<String> },
    #[error("growth bound exceeded ({0} attachments)")]
    GrowthBound(usize),
}

/// One attachment in the growth order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attachment {
    pub pos: Pos,
    pub tile: usize,
    pub inputs: DirSet,
    pub depth: u32,
}

/// The terminal assembly of a deterministic system together with the
/// attachment history that produced it.
#[derive(Clone, Debug)]
pub struct Assembly {
    config: Configuration,
    counts: Vec<u64>,
    depth: u32,
    order: Vec<Attachment>,
    max_frontier: usize,
}

impl Assembly {
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    /// `N_i` per tile index: occurrences outside the seed.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Longest dependency chain in the attachment order.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn order(&self) -> &[Attachment] {
        &self.order
    }

    /// Largest number of attachable (position, tile) pairs seen at any step.
    pub fn max_frontier(&self) -> usize {
        self.max_frontier
    }

    pub fn footprint(&self) -> impl Iterator<Item = Pos> + '_ {
        self.config.iter().map(|(p, _)| p)
    }

    pub fn footprint_len(&self) -> usize {
        self.config.len()
    }

    /// Number of non-seed positions.
    pub fn grown_len(&self) -> usize {
        self.config.len() - self.config.seed_len()
    }

    pub fn tile_at(&self, pos: Pos) -> Option<usize> {
        self.config.get(pos)
    }
}

/// All `(position, tile)` pairs attachable to `config` at the system temperature.
pub fn frontier(config: &Configuration, system: &TileSystem) -> BTreeSet<(Pos, usize)> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for (p, _) in config.iter() {
        for d in Direction::ALL {
            let q = p.step(d);
            if config.is_occupied(q) || !seen.insert(q) {
                continue;
            }
            for t in 0..system.tile_count() {
                if strength_at(system, config, t, q) >= system.temperature() {
                    out.insert((q, t));
                }
            }
        }
    }
    out
}

fn strength_at(system: &TileSystem, config: &Configuration, tile: usize, pos: Pos) -> u32 {
    Direction::ALL
        .iter()
        .map(|&d| system.bond_in_direction(config, tile, pos, d))
        .sum()
}

fn attachable(system: &TileSystem, config: &Configuration, pos: Pos) -> Result<Option<usize>, AssemblyError> {
    if config.is_occupied(pos) {
        return Ok(None);
    }
    let hits: Vec<usize> = (0..system.tile_count())
        .filter(|&t| strength_at(system, config, t, pos) >= system.temperature())
        .collect();
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some(hits[0])),
        _ => Err(AssemblyError::Nondeterministic {
            pos,
            tiles: hits.iter().map(|&t| system.tile_name(t).to_string()).collect(),
        }),
    }
}

/// Grows the seed to its terminal assembly, attaching in row-major order.
pub fn terminal_assembly(system: &TileSystem, max_positions: usize) -> Result<Assembly, AssemblyError> {
    grow(system, system.seed().clone(), max_positions, |_| 0)
}

/// Grows `start` until no tile is attachable. `choose(n)` picks which of the
/// `n` attachable positions (in row-major order) is filled next.
pub fn grow(
    system: &TileSystem,
    start: Configuration,
    max_positions: usize,
    mut choose: impl FnMut(usize) -> usize,
) -> Result<Assembly, AssemblyError> {
    let mut config = start;
    let mut depth: HashMap<Pos, u32> = config.iter().map(|(p, _)| (p, 0)).collect();
    let mut ready: BTreeMap<(i64, i64), usize> = BTreeMap::new();

    let mut initial = BTreeSet::new();
    for (p, _) in config.iter() {
        for d in Direction::ALL {
            initial.insert(p.step(d));
        }
    }
    for q in initial {
        if let Some(t) = attachable(system, &config, q)? {
            ready.insert(q.row_major(), t);
        }
    }

    let mut order = Vec::new();
    let mut max_frontier = ready.len();
    while !ready.is_empty() {
        max_frontier = max_frontier.max(ready.len());
        let k = choose(ready.len()).min(ready.len() - 1);
        let (&(y, x), &tile) = ready.iter().nth(k).expect("index in range");
        ready.remove(&(y, x));
        let pos = Pos::new(x, y);
        let inputs = system.input_edges(&config, tile, pos);
        let d = 1 + inputs.iter().map(|dir| depth[&pos.step(dir)]).max().unwrap_or(0);
        config.attach(pos, tile);
        depth.insert(pos, d);
        order.push(Attachment {
            pos,
            tile,
            inputs,
            depth: d,
        });
        if order.len() > max_positions {
            return Err(AssemblyError::GrowthBound(max_positions));
        }
        for dir in Direction::ALL {
            let q = pos.step(dir);
            match attachable(system, &config, q)? {
                Some(t) => {
                    ready.insert(q.row_major(), t);
                }
                None => {
                    ready.remove(&q.row_major());
                }
            }
        }
    }

    let mut counts = vec![0u64; system.tile_count()];
    for (_, t) in config.grown() {
        counts[t] += 1;
    }
    Ok(Assembly {
        depth: order.iter().map(|a| a.depth).max().unwrap_or(0),
        config,
        counts,
        order,
        max_frontier,
    })
}

/// `N_i` keyed by tile name, including tiles that never appear.
pub fn tile_counts(system: &TileSystem, assembly: &Assembly) -> BTreeMap<String, u64> {
    assembly
        .counts()
        .iter()
        .enumerate()
        .map(|(i, &n)| (system.tile_name(i).to_string(), n))
        .collect()
}

pub fn assembly_depth(system: &TileSystem, max_positions: usize) -> Result<u32, AssemblyError> {
    terminal_assembly(system, max_positions).map(|a| a.depth())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub tile: String,
    pub pos: Pos,
    pub inputs: DirSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectilinearReport {
    pub is_rectilinear: bool,
    /// The input-edge set shared by all attachments (the most common set
    /// when the system is not rectilinear).
    pub input_edges: DirSet,
    pub violations: Vec<Violation>,
    /// Set when growth hit a position with several attachable tiles.
    pub nondeterminism: Option<String>,
}

pub fn check_rectilinear(system: &TileSystem, max_positions: usize) -> Result<RectilinearReport, AssemblyError> {
    let assembly = match terminal_assembly(system, max_positions) {
        Ok(a) => a,
        Err(AssemblyError::Nondeterministic { pos, tiles }) => {
            let msg = AssemblyError::Nondeterministic {
                pos,
                tiles: tiles.clone(),
            }
            .to_string();
            return Ok(RectilinearReport {
                is_rectilinear: false,
                input_edges: DirSet::EMPTY,
                violations: vec![Violation {
                    tile: tiles.join(","),
                    pos,
                    inputs: DirSet::EMPTY,
                }],
                nondeterminism: Some(msg),
            });
        }
        Err(e) => return Err(e),
    };
    let mut tally: BTreeMap<DirSet, usize> = BTreeMap::new();
    for a in assembly.order() {
        *tally.entry(a.inputs).or_default() += 1;
    }
    let common = tally
        .iter()
        .max_by_key(|(set, n)| (**n, std::cmp::Reverse(**set)))
        .map(|(s, _)| *s)
        .unwrap_or_default();
    let violations: Vec<Violation> = assembly
        .order()
        .iter()
        .filter(|a| a.inputs != common)
        .map(|a| Violation {
            tile: system.tile_name(a.tile).to_string(),
            pos: a.pos,
            inputs: a.inputs,
        })
        .collect();
    Ok(RectilinearReport {
        is_rectilinear: violations.is_empty(),
        input_edges: common,
        violations,
        nondeterminism: None,
    })
}

/// Text grid: one row per y from north to south, `.` for empty, seed tiles
/// in brackets.
pub fn render_grid(system: &TileSystem, config: &Configuration) -> String {
    let Some((lo, hi)) = config.bounds() else {
        return String::new();
    };
    let mut out = String::new();
    for y in (lo.y..=hi.y).rev() {
        let row: Vec<String> = (lo.x..=hi.x)
            .map(|x| {
                let p = Pos::new(x, y);
                match config.get(p) {
                    None => ".".to_string(),
                    Some(t) if config.is_seed(p) => format!("[{}]", system.tile_name(t)),
                    Some(t) => system.tile_name(t).to_string(),
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
