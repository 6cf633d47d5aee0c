//! Line-oriented tile-system file format.
//!
//! ```text
//! temperature 2
//! glue a 1
//! tile X a a a a
//! seed 0 0 X
//! ```
//!
//! `#` starts a comment and blank lines are ignored. The temperature line
//! comes first and seed lines come last; a glue must be declared before any
//! tile uses it.
//! The `null` glue is implicit.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind, SystemError};
use crate::tile::{is_identifier, Direction, Glue, Pos, Tile, TileSystem, NULL_GLUE};

#[derive(PartialEq, PartialOrd)]
enum Section {
    Start,
    Glues,
    Tiles,
    Seed,
}

fn err(line: usize, kind: impl Into<ParseErrorKind>) -> ParseError {
    ParseError {
        line,
        kind: kind.into(),
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    err(line, ParseErrorKind::Syntax(msg.into()))
}

fn ident(line: usize, tok: &str) -> Result<String, ParseError> {
    if is_identifier(tok) {
        Ok(tok.to_string())
    } else {
        Err(err(line, SystemError::BadIdentifier(tok.to_string())))
    }
}

pub fn parse_tile_system(text: &str) -> Result<TileSystem, ParseError> {
    let mut section = Section::Start;
    let mut temperature = None;
    let mut glues: Vec<Glue> = Vec::new();
    let mut glue_names: HashSet<String> = HashSet::new();
    let mut tiles: Vec<Tile> = Vec::new();
    let mut tile_names: HashSet<String> = HashSet::new();
    let mut seed: Vec<(Pos, String)> = Vec::new();
    let mut seed_at: HashMap<Pos, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = toks.first() else {
            continue;
        };
        let arity = |n: usize| -> Result<(), ParseError> {
            if toks.len() == n {
                Ok(())
            } else {
                Err(syntax(
                    line,
                    format!("\"{keyword}\" takes {} arguments, got {}", n - 1, toks.len() - 1),
                ))
            }
        };
        match keyword {
            "temperature" => {
                arity(2)?;
                if section != Section::Start || temperature.is_some() {
                    return Err(err(line, ParseErrorKind::Order("temperature must be the first declaration")));
                }
                let t: i64 = toks[1]
                    .parse()
                    .map_err(|_| syntax(line, format!("bad temperature \"{}\"", toks[1])))?;
                if t < 1 {
                    return Err(err(line, SystemError::Temperature(t.max(0) as u32)));
                }
                temperature = Some(u32::try_from(t).map_err(|_| syntax(line, "temperature out of range"))?);
                section = Section::Glues;
            }
            "glue" => {
                arity(3)?;
                if section == Section::Start {
                    return Err(err(line, ParseErrorKind::Order("temperature must be the first declaration")));
                }
                if section > Section::Glues {
                    return Err(err(line, ParseErrorKind::Order("glues must precede tiles and seed")));
                }
                let label = ident(line, toks[1])?;
                if label == NULL_GLUE {
                    return Err(err(line, SystemError::NullRedeclared));
                }
                let strength: u32 = toks[2]
                    .parse()
                    .map_err(|_| syntax(line, format!("bad glue strength \"{}\"", toks[2])))?;
                if !glue_names.insert(label.clone()) {
                    return Err(err(line, SystemError::DuplicateGlue(label)));
                }
                glues.push(Glue::new(label, strength));
            }
            "tile" => {
                arity(6)?;
                if section == Section::Start {
                    return Err(err(line, ParseErrorKind::Order("temperature must be the first declaration")));
                }
                if section == Section::Seed {
                    return Err(err(line, ParseErrorKind::Order("seed lines must come last")));
                }
                section = Section::Tiles;
                let name = ident(line, toks[1])?;
                let mut edges: [String; 4] = Default::default();
                for (k, tok) in toks[2..6].iter().enumerate() {
                    let label = ident(line, tok)?;
                    if label != NULL_GLUE && !glue_names.contains(&label) {
                        return Err(err(
                            line,
                            SystemError::UnknownGlue {
                                tile: name.clone(),
                                label,
                            },
                        ));
                    }
                    edges[k] = label;
                }
                if !tile_names.insert(name.clone()) {
                    return Err(err(line, SystemError::DuplicateTile(name)));
                }
                tiles.push(Tile { name, edges });
            }
            "seed" => {
                arity(4)?;
                if section == Section::Start {
                    return Err(err(line, ParseErrorKind::Order("temperature must be the first declaration")));
                }
                section = Section::Seed;
                let x: i64 = toks[1]
                    .parse()
                    .map_err(|_| syntax(line, format!("bad coordinate \"{}\"", toks[1])))?;
                let y: i64 = toks[2]
                    .parse()
                    .map_err(|_| syntax(line, format!("bad coordinate \"{}\"", toks[2])))?;
                let name = ident(line, toks[3])?;
                if !tile_names.contains(&name) {
                    return Err(err(line, SystemError::UnknownTile(name)));
                }
                let pos = Pos::new(x, y);
                if seed_at.insert(pos, line).is_some() {
                    return Err(err(line, SystemError::SeedCollision(pos)));
                }
                seed.push((pos, name));
            }
            other => return Err(syntax(line, format!("unknown keyword \"{other}\""))),
        }
    }

    let temperature = temperature.ok_or_else(|| err(1, ParseErrorKind::Order("missing temperature declaration")))?;
    TileSystem::new(temperature, glues, tiles, &seed).map_err(|e| err(0, e))
}

/// Canonical serialization: glues sorted by label, tiles by name, seed by (y, x).
pub fn serialize_tile_system(system: &TileSystem) -> String {
    let mut out = String::new();
    writeln!(out, "temperature {}", system.temperature()).unwrap();
    for g in system.glues() {
        writeln!(out, "glue {} {}", g.label, g.strength).unwrap();
    }
    for t in system.tiles() {
        write!(out, "tile {}", t.name).unwrap();
        for d in Direction::ALL {
            write!(out, " {}", t.edge(d)).unwrap();
        }
        out.push('\n');
    }
    let mut seed: Vec<(Pos, usize)> = system.seed().iter().collect();
    seed.sort_by_key(|(p, _)| p.row_major());
    for (p, t) in seed {
        writeln!(out, "seed {} {} {}", p.x, p.y, system.tile_name(t)).unwrap();
    }
    out
}
