use crate::atam::Assembly;
use crate::tile::{Configuration, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErrorSite {
    pub pos: Pos,
    /// Reference tile, or `None` outside the terminal footprint.
    pub expected: Option<usize>,
    pub observed: usize,
}

/// Growth and facet errors of a final configuration against the reference
/// terminal assembly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErrorReport {
    /// Wrong tile at a footprint position.
    pub growth_errors: usize,
    /// Any tile outside the footprint.
    pub facet_errors: usize,
    pub per_position: Vec<ErrorSite>,
    /// Footprint positions still empty. Not counted as errors.
    pub incomplete: usize,
    /// Occupied non-seed footprint positions.
    pub filled: usize,
}

impl ErrorReport {
    pub fn total(&self) -> usize {
        self.growth_errors + self.facet_errors
    }

    /// Fraction of filled footprint positions holding the wrong tile.
    pub fn growth_error_fraction(&self) -> f64 {
        if self.filled == 0 {
            0.0
        } else {
            self.growth_errors as f64 / self.filled as f64
        }
    }
}

pub fn classify_errors(final_config: &Configuration, reference: &Assembly) -> ErrorReport {
    let mut report = ErrorReport::default();
    for (pos, tile) in final_config.grown() {
        match reference.tile_at(pos) {
            Some(expected) => {
                report.filled += 1;
                if expected != tile {
                    report.growth_errors += 1;
                    report.per_position.push(ErrorSite {
                        pos,
                        expected: Some(expected),
                        observed: tile,
                    });
                }
            }
            None => {
                report.facet_errors += 1;
                report.per_position.push(ErrorSite {
                    pos,
                    expected: None,
                    observed: tile,
                });
            }
        }
    }
    let ref_cfg = reference.config();
    report.incomplete = ref_cfg
        .grown()
        .filter(|(p, _)| !final_config.is_occupied(*p))
        .count();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atam::terminal_assembly;
    use crate::tile::{Glue, Tile, TileSystem};

    fn system() -> TileSystem {
        TileSystem::new(
            2,
            vec![Glue::new("c", 2)],
            vec![
                Tile::new("C", "null", "c", "null", "c"),
                Tile::new("D", "null", "null", "null", "null"),
                Tile::new("S", "null", "c", "null", "null"),
            ],
            &[(Pos::new(0, 0), "S".into()), (Pos::new(4, 0), "D".into())],
        )
        .unwrap()
    }

    #[test]
    fn classification() {
        let sys = system();
        let reference = terminal_assembly(&sys, 10).unwrap();
        let r = classify_errors(reference.config(), &reference);
        assert_eq!((r.growth_errors, r.facet_errors, r.incomplete), (0, 0, 0));

        let mut cfg = reference.config().clone();
        cfg.replace(Pos::new(2, 0), 1);
        let r = classify_errors(&cfg, &reference);
        assert_eq!((r.growth_errors, r.facet_errors), (1, 0));

        let mut cfg = reference.config().clone();
        cfg.attach(Pos::new(1, 1), 0);
        cfg.detach(Pos::new(3, 0));
        let r = classify_errors(&cfg, &reference);
        assert_eq!((r.growth_errors, r.facet_errors, r.incomplete), (0, 1, 1));
        assert_eq!(r.total(), r.per_position.len());
        assert_eq!(r.per_position[0].expected, None);
    }
}
