use thiserror::Error;

use crate::tile::Pos;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("temperature must be at least 1, got {0}")]
    Temperature(u32),
    #[error("duplicate glue \"{0}\"")]
    DuplicateGlue(String),
    #[error("duplicate tile \"{0}\"")]
    DuplicateTile(String),
    #[error("the null glue is implicit and may not be redeclared")]
    NullRedeclared,
    #[error("invalid identifier \"{0}\"")]
    BadIdentifier(String),
    #[error("unknown glue \"{label}\" on tile \"{tile}\"")]
    UnknownGlue { tile: String, label: String },
    #[error("unknown tile \"{0}\"")]
    UnknownTile(String),
    #[error("seed positions collide at {0}")]
    SeedCollision(Pos),
    #[error("concentration of \"{tile}\" must be positive and finite, got {value}")]
    Concentration { tile: String, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{0}")]
    Order(&'static str),
    #[error(transparent)]
    Invalid(#[from] SystemError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BondError {
    #[error("position {0} is already occupied")]
    Occupied(Pos),
}
