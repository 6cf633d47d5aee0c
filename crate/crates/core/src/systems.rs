//! Builders for the benchmark systems.
//!
//! The A and B families share two growth tiles at temperature 2, with all
//! glues of strength 1:
//!
//! ```text
//!        N     E     S     W
//!   X   "0"   "x"   "0"   "x"
//!   Y   "0"   "y"   "0"   "x"
//! ```
//!
//! Both tiles take their inputs from the south and east and present the same
//! outputs, so a wrong tile only affects its own position. Y can only attach
//! next to a seed tile that presents `y` to the west; everything else is X.
//!
//! A systems have an L-shaped seed: a south arm under `width` growth columns
//! and an east column of `height` rows. Rows listed in `y_rows` start with Y,
//! so the Y tiles form (part of) the first column and every row waits for
//! its Y before it can grow west.
//!
//! B systems add a middle seed column at `x = 0`. The left portion (west of
//! it) is all X; the right portion between the middle and east columns has
//! `width` columns whose first column follows `y_rows`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::atam::{check_rectilinear, terminal_assembly, AssemblyError};
use crate::error::SystemError;
use crate::tile::{Glue, Pos, Tile, TileSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("constructed N_X:N_Y = {got_x}:{got_y}, requested {want_x}:{want_y}")]
    RatioMismatch {
        got_x: u64,
        got_y: u64,
        want_x: u64,
        want_y: u64,
    },
    #[error("unknown builtin system \"{0}\"")]
    UnknownBuiltin(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    A,
    B,
    Chain,
    Fanout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemSpec {
    A {
        width: usize,
        height: usize,
        y_rows: Vec<usize>,
        /// Required `N_X : N_Y`, checked against the terminal assembly.
        ratio: Option<(u64, u64)>,
    },
    B {
        left_width: usize,
        width: usize,
        height: usize,
        y_rows: Vec<usize>,
        ratio: Option<(u64, u64)>,
    },
    Chain {
        length: usize,
    },
    Fanout {
        positions: usize,
        types: usize,
    },
}

impl SystemSpec {
    pub fn kind(&self) -> SystemKind {
        match self {
            SystemSpec::A { .. } => SystemKind::A,
            SystemSpec::B { .. } => SystemKind::B,
            SystemSpec::Chain { .. } => SystemKind::Chain,
            SystemSpec::Fanout { .. } => SystemKind::Fanout,
        }
    }

    /// Named benchmark systems. `A1`/`B1` have `N_X:N_Y = 25:1`, `A2`/`B2`
    /// have `64:1`; `chain` has length 10 and `fanout` 100 positions with
    /// two tile types.
    pub fn builtin(name: &str) -> Result<SystemSpec, BuildError> {
        let all = |h: usize| (0..h).collect::<Vec<_>>();
        Ok(match name {
            "A1" => SystemSpec::A {
                width: 26,
                height: 50,
                y_rows: all(50),
                ratio: Some((25, 1)),
            },
            "A2" => SystemSpec::A {
                width: 65,
                height: 64,
                y_rows: all(64),
                ratio: Some((64, 1)),
            },
            "B1" => SystemSpec::B {
                left_width: 25,
                width: 1,
                height: 50,
                y_rows: all(50),
                ratio: Some((25, 1)),
            },
            "B2" => SystemSpec::B {
                left_width: 64,
                width: 1,
                height: 64,
                y_rows: all(64),
                ratio: Some((64, 1)),
            },
            "chain" => SystemSpec::Chain { length: 10 },
            "fanout" => SystemSpec::Fanout {
                positions: 100,
                types: 2,
            },
            other => return Err(BuildError::UnknownBuiltin(other.to_string())),
        })
    }

    /// Same spec with a different number of growth rows. A spec whose every
    /// row selected Y keeps doing so; otherwise rows beyond the new height
    /// are dropped.
    pub fn with_height(&self, new_height: usize) -> SystemSpec {
        let rows = |height: usize, y_rows: &[usize]| -> Vec<usize> {
            if y_rows.len() == height && y_rows.iter().enumerate().all(|(i, &r)| i == r) {
                (0..new_height).collect()
            } else {
                y_rows.iter().copied().filter(|&r| r < new_height).collect()
            }
        };
        match self {
            SystemSpec::A {
                width,
                height,
                y_rows,
                ratio,
            } => SystemSpec::A {
                width: *width,
                height: new_height,
                y_rows: rows(*height, y_rows),
                ratio: *ratio,
            },
            SystemSpec::B {
                left_width,
                width,
                height,
                y_rows,
                ratio,
            } => SystemSpec::B {
                left_width: *left_width,
                width: *width,
                height: new_height,
                y_rows: rows(*height, y_rows),
                ratio: *ratio,
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildReport {
    pub counts: BTreeMap<String, u64>,
    /// `N_X / N_Y` for the A and B families.
    pub ratio: Option<f64>,
    pub depth: u32,
    pub footprint: usize,
}

pub const BUILD_MAX_POSITIONS: usize = 4_000_000;

pub fn build(spec: &SystemSpec) -> Result<(TileSystem, BuildReport), BuildError> {
    let system = match spec {
        SystemSpec::A {
            width, height, y_rows, ..
        } => build_a(*width, *height, y_rows)?,
        SystemSpec::B {
            left_width,
            width,
            height,
            y_rows,
            ..
        } => build_b(*left_width, *width, *height, y_rows)?,
        SystemSpec::Chain { length } => build_chain(*length)?,
        SystemSpec::Fanout { positions, types } => build_fanout(*positions, *types)?,
    };
    let assembly = terminal_assembly(&system, BUILD_MAX_POSITIONS)?;
    let counts: BTreeMap<String, u64> = crate::atam::tile_counts(&system, &assembly);
    let mut ratio = None;
    if let SystemSpec::A { ratio: want, .. } | SystemSpec::B { ratio: want, .. } = spec {
        let nx = counts["X"];
        let ny = counts["Y"];
        if ny > 0 {
            ratio = Some(nx as f64 / ny as f64);
        }
        if let Some((a, b)) = *want {
            if nx * b != ny * a {
                return Err(BuildError::RatioMismatch {
                    got_x: nx,
                    got_y: ny,
                    want_x: a,
                    want_y: b,
                });
            }
        }
    }
    let report = BuildReport {
        counts,
        ratio,
        depth: assembly.depth(),
        footprint: assembly.footprint_len(),
    };
    Ok((system, report))
}

fn growth_tiles() -> (Vec<Glue>, Vec<Tile>) {
    (
        vec![Glue::new("0", 1), Glue::new("x", 1), Glue::new("y", 1)],
        vec![Tile::new("X", "0", "x", "0", "x"), Tile::new("Y", "0", "y", "0", "x")],
    )
}

fn seed_tiles() -> Vec<Tile> {
    vec![
        // south arm
        Tile::new("SA", "0", "null", "null", "null"),
        // corners and other inert seed positions
        Tile::new("SC", "null", "null", "null", "null"),
        // seed columns selecting X or Y in the row to their west
        Tile::new("SX", "null", "null", "null", "x"),
        Tile::new("SY", "null", "null", "null", "y"),
    ]
}

fn check_rows(height: usize, y_rows: &[usize]) -> Result<(), BuildError> {
    if let Some(&r) = y_rows.iter().find(|&&r| r >= height) {
        return Err(BuildError::Spec(format!("row {r} is outside 0..{height}")));
    }
    Ok(())
}

fn column_tile(y: usize, y_rows: &[usize]) -> &'static str {
    if y_rows.contains(&y) {
        "SY"
    } else {
        "SX"
    }
}

fn build_a(width: usize, height: usize, y_rows: &[usize]) -> Result<TileSystem, BuildError> {
    if width == 0 || height == 0 {
        return Err(BuildError::Spec("width and height must be positive".into()));
    }
    check_rows(height, y_rows)?;
    let (glues, mut tiles) = growth_tiles();
    tiles.extend(seed_tiles());
    let w = width as i64;
    let mut seed = Vec::new();
    for x in 0..w {
        seed.push((Pos::new(x, -1), "SA".to_string()));
    }
    seed.push((Pos::new(w, -1), "SC".to_string()));
    for y in 0..height {
        seed.push((Pos::new(w, y as i64), column_tile(y, y_rows).to_string()));
    }
    Ok(TileSystem::new(2, glues, tiles, &seed)?)
}

fn build_b(left_width: usize, width: usize, height: usize, y_rows: &[usize]) -> Result<TileSystem, BuildError> {
    if left_width == 0 || width == 0 || height == 0 {
        return Err(BuildError::Spec("widths and height must be positive".into()));
    }
    check_rows(height, y_rows)?;
    let (glues, mut tiles) = growth_tiles();
    tiles.extend(seed_tiles());
    let (l, w) = (left_width as i64, width as i64);
    let mut seed = Vec::new();
    for x in -l..=w {
        let name = if x == 0 { "SC" } else { "SA" };
        seed.push((Pos::new(x, -1), name.to_string()));
    }
    seed.push((Pos::new(w + 1, -1), "SC".to_string()));
    for y in 0..height as i64 {
        seed.push((Pos::new(0, y), "SX".to_string()));
        seed.push((Pos::new(w + 1, y), column_tile(y as usize, y_rows).to_string()));
    }
    Ok(TileSystem::new(2, glues, tiles, &seed)?)
}

fn build_chain(length: usize) -> Result<TileSystem, BuildError> {
    let tiles = vec![
        Tile::new("C", "null", "c", "null", "c"),
        Tile::new("S", "null", "c", "null", "null"),
        Tile::new("stop", "null", "null", "null", "null"),
    ];
    let seed = [
        (Pos::new(0, 0), "S".to_string()),
        (Pos::new(length as i64 + 1, 0), "stop".to_string()),
    ];
    Ok(TileSystem::new(2, vec![Glue::new("c", 2)], tiles, &seed)?)
}

fn build_fanout(positions: usize, types: usize) -> Result<TileSystem, BuildError> {
    if positions == 0 || types == 0 || types > positions {
        return Err(BuildError::Spec(format!(
            "fan-out needs 1 <= types <= positions, got {types} types for {positions} positions"
        )));
    }
    let glues: Vec<Glue> = (0..types).map(|t| Glue::new(format!("f{t}"), 2)).collect();
    let mut tiles = Vec::new();
    for t in 0..types {
        let g = format!("f{t}");
        tiles.push(Tile::new(format!("F{t}"), "null", "null", g.clone(), "null"));
        tiles.push(Tile::new(format!("S{t}"), g, "null", "null", "null"));
    }
    let seed: Vec<(Pos, String)> = (0..positions)
        .map(|x| (Pos::new(x as i64, 0), format!("S{}", x % types)))
        .collect();
    Ok(TileSystem::new(2, glues, tiles, &seed)?)
}

/// Builds a spec and confirms the system is rectilinear, returning the
/// shared input edges alongside the system.
pub fn build_checked(spec: &SystemSpec) -> Result<(TileSystem, BuildReport, crate::tile::DirSet), BuildError> {
    let (system, report) = build(spec)?;
    let rect = check_rectilinear(&system, BUILD_MAX_POSITIONS)?;
    if !rect.is_rectilinear {
        return Err(BuildError::Spec("built system is not rectilinear".into()));
    }
    Ok((system, report, rect.input_edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atam::grow;
    use crate::format::{parse_tile_system, serialize_tile_system};
    use crate::tile::{DirSet, Direction};

    fn south_east() -> DirSet {
        DirSet::of(&[Direction::South, Direction::East])
    }

    #[test]
    fn builtin_ratios() {
        for (name, nx, ny) in [("A1", 1250, 50), ("A2", 4096, 64), ("B1", 1250, 50), ("B2", 4096, 64)] {
            let (sys, report, inputs) = build_checked(&SystemSpec::builtin(name).unwrap()).unwrap();
            assert_eq!((report.counts["X"], report.counts["Y"]), (nx, ny), "{name}");
            assert_eq!(inputs, south_east(), "{name}");
            assert_eq!(sys.temperature(), 2);
        }
    }

    #[test]
    fn small_a_depth() {
        let (_, report) = build(&SystemSpec::A {
            width: 4,
            height: 3,
            y_rows: vec![1],
            ratio: Some((11, 1)),
        })
        .unwrap();
        assert_eq!(report.depth, 6);
        assert_eq!(report.counts["Y"], 1);
    }

    #[test]
    fn ratio_mismatch_is_an_error() {
        let err = build(&SystemSpec::A {
            width: 4,
            height: 3,
            y_rows: vec![0],
            ratio: Some((25, 1)),
        })
        .unwrap_err();
        assert!(matches!(err, BuildError::RatioMismatch { got_x: 11, got_y: 1, .. }));
    }

    #[test]
    fn chain_and_fanout() {
        let (_, r) = build(&SystemSpec::Chain { length: 10 }).unwrap();
        assert_eq!((r.counts["C"], r.depth), (10, 10));
        let (_, r) = build(&SystemSpec::Fanout {
            positions: 100,
            types: 2,
        })
        .unwrap();
        assert_eq!((r.counts["F0"], r.counts["F1"], r.depth), (50, 50, 1));
    }

    #[test]
    fn identical_outputs_confine_errors() {
        let spec = SystemSpec::A {
            width: 5,
            height: 4,
            y_rows: vec![0, 2],
            ratio: None,
        };
        let (sys, _) = build(&spec).unwrap();
        let reference = terminal_assembly(&sys, 1000).unwrap();
        let (x, y) = (sys.tile_index("X").unwrap(), sys.tile_index("Y").unwrap());
        for (k, att) in reference.order().iter().enumerate() {
            // Replay up to this attachment, put the other tile there, regrow.
            let mut start = sys.seed().clone();
            for a in &reference.order()[..k] {
                start.attach(a.pos, a.tile);
            }
            start.attach(att.pos, if att.tile == x { y } else { x });
            let regrown = grow(&sys, start, 1000, |_| 0).unwrap();
            for p in reference.footprint() {
                if p != att.pos {
                    assert_eq!(regrown.tile_at(p), reference.tile_at(p), "swap at {}", att.pos);
                }
            }
            assert_eq!(regrown.footprint_len(), reference.footprint_len());
        }
    }

    #[test]
    fn serialization_round_trip() {
        for name in ["A1", "B1", "chain", "fanout"] {
            let (sys, _) = build(&SystemSpec::builtin(name).unwrap()).unwrap();
            let text = serialize_tile_system(&sys);
            let back = parse_tile_system(&text).unwrap();
            assert_eq!(back, sys);
            assert_eq!(serialize_tile_system(&back), text);
        }
    }

    #[test]
    fn unknown_builtin() {
        assert_eq!(
            SystemSpec::builtin("C3"),
            Err(BuildError::UnknownBuiltin("C3".into()))
        );
    }
}
