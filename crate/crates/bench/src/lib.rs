//! Fixtures shared by the criterion benchmarks.

use tilesa::{build, terminal_assembly, Assembly, ConcentrationVector, KineticParams, SystemSpec, TileSystem};

/// A builtin system with its terminal assembly.
pub fn builtin(name: &str) -> (TileSystem, Assembly) {
    let spec = SystemSpec::builtin(name).expect("known builtin");
    let (system, _) = build(&spec).expect("builtin builds");
    let reference = terminal_assembly(&system, 4_000_000).expect("builtin terminates");
    (system, reference)
}

/// X:Y concentrations at `ratio` with `c_X + c_Y = e^-16`, and matching
/// kinetic parameters.
pub fn xy_kinetics(ratio: f64, gse: f64) -> (ConcentrationVector, KineticParams) {
    let total = (-16f64).exp();
    let (cx, cy) = (ratio / (1.0 + ratio) * total, total / (1.0 + ratio));
    let conc = ConcentrationVector::new([("X", cx), ("Y", cy)]).expect("positive");
    let params = KineticParams::new(1.0, 1.0, gse, cx.min(cy), cx.max(cy)).expect("valid");
    (conc, params)
}
