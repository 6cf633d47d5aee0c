//! Tiles, glues, lattice positions and configurations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{BondError, SystemError};

/// The glue label that never bonds.
pub const NULL_GLUE: &str = "null";

/// A lattice position. `x` grows east, `y` grows north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: i64,
    pub y: i64,
}

impl Pos {
    pub const fn new(x: i64, y: i64) -> Self {
        Pos { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.offset();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn translate(self, dx: i64, dy: i64) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    /// Sort key used by the file format and the text grid: row-major from south.
    pub fn row_major(self) -> (i64, i64) {
        (self.y, self.x)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub const fn offset(self) -> (i64, i64) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }

    pub const fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn letter(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::East => 'E',
            Direction::South => 'S',
            Direction::West => 'W',
        }
    }
}

/// A set of edge directions, stored as a 4-bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirSet(u8);

impl DirSet {
    pub const EMPTY: DirSet = DirSet(0);

    pub fn of(dirs: &[Direction]) -> DirSet {
        dirs.iter().fold(DirSet::EMPTY, |s, &d| s.with(d))
    }

    pub fn with(self, d: Direction) -> DirSet {
        DirSet(self.0 | (1 << d.index()))
    }

    pub fn contains(self, d: Direction) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Direction> {
        Direction::ALL.into_iter().filter(move |&d| self.contains(d))
    }
}

impl fmt::Display for DirSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .iter()
            .map(|d| match d {
                Direction::North => "north",
                Direction::East => "east",
                Direction::South => "south",
                Direction::West => "west",
            })
            .collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Glue {
    pub label: String,
    pub strength: u32,
}

impl Glue {
    pub fn new(label: impl Into<String>, strength: u32) -> Self {
        Glue {
            label: label.into(),
            strength,
        }
    }
}

/// An oriented square tile. Edge labels are indexed by [`Direction::index`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tile {
    pub name: String,
    pub edges: [String; 4],
}

impl Tile {
    pub fn new(
        name: impl Into<String>,
        north: impl Into<String>,
        east: impl Into<String>,
        south: impl Into<String>,
        west: impl Into<String>,
    ) -> Self {
        Tile {
            name: name.into(),
            edges: [north.into(), east.into(), south.into(), west.into()],
        }
    }

    pub fn edge(&self, dir: Direction) -> &str {
        &self.edges[dir.index()]
    }
}

/// Identifier syntax shared by tile names and glue labels.
pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '\''))
}

/// A partial assembly. Tiles are referenced by their index in the owning
/// [`TileSystem`]; seed positions are immutable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Configuration {
    occupied: BTreeMap<Pos, usize>,
    seed: BTreeSet<Pos>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, pos: Pos) -> Option<usize> {
        self.occupied.get(&pos).copied()
    }

    pub fn is_occupied(&self, pos: Pos) -> bool {
        self.occupied.contains_key(&pos)
    }

    pub fn is_seed(&self, pos: Pos) -> bool {
        self.seed.contains(&pos)
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn seed_len(&self) -> usize {
        self.seed.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pos, usize)> + '_ {
        self.occupied.iter().map(|(&p, &t)| (p, t))
    }

    pub fn seed_positions(&self) -> impl Iterator<Item = Pos> + '_ {
        self.seed.iter().copied()
    }

    /// Occupied positions that are not part of the seed.
    pub fn grown(&self) -> impl Iterator<Item = (Pos, usize)> + '_ {
        self.iter().filter(|(p, _)| !self.seed.contains(p))
    }

    pub(crate) fn place_seed(&mut self, pos: Pos, tile: usize) -> bool {
        if self.occupied.contains_key(&pos) {
            return false;
        }
        self.occupied.insert(pos, tile);
        self.seed.insert(pos);
        true
    }

    /// Places a non-seed tile. Returns false if the position is occupied.
    pub fn attach(&mut self, pos: Pos, tile: usize) -> bool {
        if self.occupied.contains_key(&pos) {
            return false;
        }
        self.occupied.insert(pos, tile);
        true
    }

    /// Removes a non-seed tile. Seed tiles are never removed.
    pub fn detach(&mut self, pos: Pos) -> Option<usize> {
        if self.seed.contains(&pos) {
            return None;
        }
        self.occupied.remove(&pos)
    }

    /// Overwrites the tile at an occupied non-seed position.
    pub fn replace(&mut self, pos: Pos, tile: usize) -> Option<usize> {
        if self.seed.contains(&pos) {
            return None;
        }
        self.occupied.get_mut(&pos).map(|t| std::mem::replace(t, tile))
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Configuration {
        Configuration {
            occupied: self
                .occupied
                .iter()
                .map(|(p, &t)| (p.translate(dx, dy), t))
                .collect(),
            seed: self.seed.iter().map(|p| p.translate(dx, dy)).collect(),
        }
    }

    /// Inclusive bounding box `(min, max)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(Pos, Pos)> {
        let mut it = self.occupied.keys();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Pos::new(lo.x.min(p.x), lo.y.min(p.y)),
                Pos::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}

/// A tile system: tiles, glue strengths, temperature and seed.
///
/// Tiles are kept sorted by name and glues by label, so tile indices are
/// stable across a serialize/parse round trip.
#[derive(Clone, Debug)]
pub struct TileSystem {
    temperature: u32,
    glues: Vec<Glue>,
    tiles: Vec<Tile>,
    seed: Configuration,
    // Glue ids per tile edge; id 0 is the null glue.
    edge_ids: Vec<[usize; 4]>,
    strengths: Vec<u32>,
    tile_index: HashMap<String, usize>,
}

impl PartialEq for TileSystem {
    fn eq(&self, other: &Self) -> bool {
        self.temperature == other.temperature
            && self.glues == other.glues
            && self.tiles == other.tiles
            && self.seed == other.seed
    }
}

impl TileSystem {
    /// Validates and builds a system. `glues` must not contain the null glue.
    pub fn new(
        temperature: u32,
        mut glues: Vec<Glue>,
        mut tiles: Vec<Tile>,
        seed: &[(Pos, String)],
    ) -> Result<Self, SystemError> {
        if temperature < 1 {
            return Err(SystemError::Temperature(temperature));
        }
        glues.sort_by(|a, b| a.label.cmp(&b.label));
        for w in glues.windows(2) {
            if w[0].label == w[1].label {
                return Err(SystemError::DuplicateGlue(w[0].label.clone()));
            }
        }
        let mut glue_ids: HashMap<&str, usize> = HashMap::new();
        glue_ids.insert(NULL_GLUE, 0);
        let mut strengths = vec![0];
        for g in &glues {
            if g.label == NULL_GLUE {
                return Err(SystemError::NullRedeclared);
            }
            if !is_identifier(&g.label) {
                return Err(SystemError::BadIdentifier(g.label.clone()));
            }
            glue_ids.insert(&g.label, strengths.len());
            strengths.push(g.strength);
        }

        tiles.sort_by(|a, b| a.name.cmp(&b.name));
        let mut tile_index = HashMap::new();
        let mut edge_ids = Vec::with_capacity(tiles.len());
        for (i, t) in tiles.iter().enumerate() {
            if !is_identifier(&t.name) {
                return Err(SystemError::BadIdentifier(t.name.clone()));
            }
            if tile_index.insert(t.name.clone(), i).is_some() {
                return Err(SystemError::DuplicateTile(t.name.clone()));
            }
            let mut ids = [0; 4];
            for d in Direction::ALL {
                let label = t.edge(d);
                ids[d.index()] = *glue_ids.get(label).ok_or_else(|| SystemError::UnknownGlue {
                    tile: t.name.clone(),
                    label: label.to_string(),
                })?;
            }
            edge_ids.push(ids);
        }

        let mut config = Configuration::new();
        for (pos, name) in seed {
            let t = *tile_index
                .get(name)
                .ok_or_else(|| SystemError::UnknownTile(name.clone()))?;
            if !config.place_seed(*pos, t) {
                return Err(SystemError::SeedCollision(*pos));
            }
        }

        Ok(TileSystem {
            temperature,
            glues,
            tiles,
            seed: config,
            edge_ids,
            strengths,
            tile_index,
        })
    }

    pub fn temperature(&self) -> u32 {
        self.temperature
    }

    pub fn glues(&self) -> &[Glue] {
        &self.glues
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile(&self, index: usize) -> &Tile {
        &self.tiles[index]
    }

    pub fn tile_name(&self, index: usize) -> &str {
        &self.tiles[index].name
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn tile_index(&self, name: &str) -> Option<usize> {
        self.tile_index.get(name).copied()
    }

    pub fn seed(&self) -> &Configuration {
        &self.seed
    }

    pub(crate) fn edge_id(&self, tile: usize, dir: Direction) -> usize {
        self.edge_ids[tile][dir.index()]
    }

    pub(crate) fn glue_strength_by_id(&self, id: usize) -> u32 {
        self.strengths[id]
    }

    /// Strength of the glue on one edge of a tile.
    pub fn edge_strength(&self, tile: usize, dir: Direction) -> u32 {
        self.strengths[self.edge_id(tile, dir)]
    }

    /// Bond strength between `tile` placed at `pos` and its neighbor in `dir`,
    /// if that neighbor is occupied in `config`.
    pub fn bond_in_direction(&self, config: &Configuration, tile: usize, pos: Pos, dir: Direction) -> u32 {
        match config.get(pos.step(dir)) {
            Some(nbr) => {
                let a = self.edge_id(tile, dir);
                if a == self.edge_id(nbr, dir.opposite()) {
                    self.strengths[a]
                } else {
                    0
                }
            }
            None => 0,
        }
    }

    /// Total matched-glue strength `tile` would have at the empty position `pos`.
    pub fn bond_strength(&self, config: &Configuration, tile: usize, pos: Pos) -> Result<u32, BondError> {
        if config.is_occupied(pos) {
            return Err(BondError::Occupied(pos));
        }
        Ok(Direction::ALL
            .iter()
            .map(|&d| self.bond_in_direction(config, tile, pos, d))
            .sum())
    }

    /// Directions with positive bond contribution for `tile` at `pos`.
    pub fn input_edges(&self, config: &Configuration, tile: usize, pos: Pos) -> DirSet {
        Direction::ALL
            .iter()
            .filter(|&&d| self.bond_in_direction(config, tile, pos, d) > 0)
            .fold(DirSet::EMPTY, |s, &d| s.with(d))
    }

    /// Indices of tiles that occupy at least one seed position.
    pub fn seed_tiles(&self) -> BTreeSet<usize> {
        self.seed.iter().map(|(_, t)| t).collect()
    }
}

/// Per-tile relative concentrations, keyed by tile name.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationVector {
    entries: BTreeMap<String, f64>,
}

impl ConcentrationVector {
    pub fn new<I, S>(entries: I) -> Result<Self, SystemError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, c) in entries {
            let name = name.into();
            if !(c > 0.0 && c.is_finite()) {
                return Err(SystemError::Concentration { tile: name, value: c });
            }
            if map.insert(name.clone(), c).is_some() {
                return Err(SystemError::DuplicateTile(name));
            }
        }
        Ok(ConcentrationVector { entries: map })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn normalized(&self) -> ConcentrationVector {
        self.scaled(1.0 / self.total())
    }

    pub fn scaled(&self, factor: f64) -> ConcentrationVector {
        ConcentrationVector {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// True when the entries sum to one within 1e-12.
    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= 1e-12
    }

    /// Concentrations in tile-index order of `system`; `None` for tiles
    /// without an entry.
    pub fn for_system(&self, system: &TileSystem) -> Result<Vec<Option<f64>>, SystemError> {
        for name in self.entries.keys() {
            if system.tile_index(name).is_none() {
                return Err(SystemError::UnknownTile(name.clone()));
            }
        }
        Ok(system.tiles().iter().map(|t| self.get(&t.name)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tile_system() -> TileSystem {
        TileSystem::new(
            2,
            vec![Glue::new("a", 1), Glue::new("b", 1)],
            vec![
                Tile::new("S", "a", "a", "null", "null"),
                Tile::new("T", "null", "null", "a", "a"),
                Tile::new("U", "null", "null", "b", "null"),
            ],
            &[(Pos::new(0, 0), "S".to_string())],
        )
        .unwrap()
    }

    #[test]
    fn single_matched_bond() {
        let sys = two_tile_system();
        let t = sys.tile_index("T").unwrap();
        // South edge "a" faces the seed's north "a".
        assert_eq!(sys.bond_strength(sys.seed(), t, Pos::new(0, 1)).unwrap(), 1);
    }

    #[test]
    fn null_and_mismatched_labels_do_not_bond() {
        let sys = two_tile_system();
        let u = sys.tile_index("U").unwrap();
        assert_eq!(sys.bond_strength(sys.seed(), u, Pos::new(0, 1)).unwrap(), 0);
        let s = sys.tile_index("S").unwrap();
        // S's south edge is null; the seed's north edge is "a".
        assert_eq!(sys.bond_strength(sys.seed(), s, Pos::new(0, 1)).unwrap(), 0);
    }

    #[test]
    fn bonds_add_across_directions() {
        let sys = two_tile_system();
        let s = sys.tile_index("S").unwrap();
        let t = sys.tile_index("T").unwrap();
        let mut c = sys.seed().clone();
        c.attach(Pos::new(-1, 1), s);
        assert_eq!(sys.bond_strength(&c, t, Pos::new(0, 1)).unwrap(), 2);
        assert_eq!(
            sys.input_edges(&c, t, Pos::new(0, 1)),
            DirSet::of(&[Direction::South, Direction::West])
        );
    }

    #[test]
    fn occupied_position_is_an_error() {
        let sys = two_tile_system();
        assert!(matches!(
            sys.bond_strength(sys.seed(), 0, Pos::new(0, 0)),
            Err(BondError::Occupied(_))
        ));
    }

    #[test]
    fn validation_errors() {
        let unknown = TileSystem::new(1, vec![], vec![Tile::new("X", "z", "null", "null", "null")], &[]);
        assert!(matches!(unknown, Err(SystemError::UnknownGlue { .. })));
        let dup = TileSystem::new(
            1,
            vec![],
            vec![Tile::new("X", "null", "null", "null", "null"); 2],
            &[],
        );
        assert!(matches!(dup, Err(SystemError::DuplicateTile(_))));
        assert!(matches!(
            TileSystem::new(0, vec![], vec![], &[]),
            Err(SystemError::Temperature(0))
        ));
        let collide = TileSystem::new(
            1,
            vec![],
            vec![Tile::new("X", "null", "null", "null", "null")],
            &[(Pos::new(0, 0), "X".into()), (Pos::new(0, 0), "X".into())],
        );
        assert!(matches!(collide, Err(SystemError::SeedCollision(_))));
    }

    #[test]
    fn seed_tiles_never_detach() {
        let sys = two_tile_system();
        let mut c = sys.seed().clone();
        assert_eq!(c.detach(Pos::new(0, 0)), None);
        assert!(c.is_occupied(Pos::new(0, 0)));
    }

    #[test]
    fn concentrations_must_be_positive() {
        assert!(ConcentrationVector::new([("X", 0.0)]).is_err());
        let c = ConcentrationVector::new([("X", 5.0), ("Y", 1.0)]).unwrap();
        assert!(c.normalized().is_normalized());
        assert!(!c.is_normalized());
    }
}
