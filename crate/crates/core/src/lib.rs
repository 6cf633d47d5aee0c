//! Tile self-assembly in the abstract and kinetic tile assembly models.
//!
//! The crate covers four layers:
//!
//! * [`tile`] and [`format`]: tiles, glues, configurations and the
//!   line-oriented tile-system file format.
//! * [`atam`]: error-free growth, terminal assemblies, tile counts and
//!   assembly depth.
//! * [`ktam`]: exact stochastic simulation of attachment and detachment,
//!   plus the per-site growth-error model.
//! * [`optimize`] and [`timing`]: concentrations that minimize growth errors
//!   or assembly time, and Monte Carlo time estimation.
//!
//! [`systems`] builds the benchmark systems used by [`experiment`].

// Negated comparisons such as `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atam;
pub mod error;
pub mod experiment;
pub mod format;
pub mod ktam;
pub mod optimize;
pub mod report;
pub mod rng;
pub mod systems;
pub mod tile;
pub mod timing;

pub use atam::{
    assembly_depth, check_rectilinear, frontier, render_grid, terminal_assembly, tile_counts, Assembly,
    AssemblyError, RectilinearReport,
};
pub use error::{BondError, ParseError, ParseErrorKind, SystemError};
pub use format::{parse_tile_system, serialize_tile_system};
pub use ktam::{classify_errors, simulate, ErrorReport, KineticParams, SimOptions, SimResult, Simulator};
pub use optimize::{minimize_error_numeric, sqrt_concentrations, ErrorObjective, OptimizeError};
pub use tile::{ConcentrationVector, Configuration, DirSet, Direction, Glue, Pos, Tile, TileSystem};
pub use experiment::{run_sweep, SweepConfig, SweepRow};
pub use systems::{build, SystemSpec};
pub use timing::{estimate_time_mc, RunPlan, TimeEstimate, TimingOptions};
