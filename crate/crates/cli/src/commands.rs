use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use tilesa::experiment::{default_gse, run_sweep, SweepConfig};
use tilesa::ktam::{Model, Termination};
use tilesa::optimize::{minimize_error_numeric, sqrt_concentrations};
use tilesa::report::{fmt_num, SampleStats};
use tilesa::systems::{build, SystemSpec};
use tilesa::timing::{estimate_time_mc, RunPlan, TimingOptions};
use tilesa::{
    check_rectilinear, classify_errors, parse_tile_system, render_grid, serialize_tile_system, terminal_assembly,
    Assembly, ConcentrationVector, ErrorObjective, KineticParams, SimOptions, Simulator, TileSystem,
};

use crate::args::{EstimateTimeArgs, ExperimentArgs, OptimizeArgs, SimulateArgs, TerminalArgs};

pub const SIMULATE_HEADER: &str = "run,elapsed,growth_errors,facet_errors,terminated_by";
pub const EXPERIMENT_HEADER: &str =
    "ratio,runs,mean_per_tile_error,stderr,mean_growth_errors,mean_facet_errors,fraction_runs_with_error";
pub const OPTIMIZE_HEADER: &str =
    "tile,count,closed_form,numeric,objective_closed_form,objective_numeric,residual_closed_form,residual_numeric";
pub const ESTIMATE_TIME_HEADER: &str =
    "runs,mean,variance,ci95,s_upper,planned_runs,variance_bound_24S2,tail_violations";

const MAX_POSITIONS: usize = 4_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Truncated(String),
    #[error("{0}")]
    Module(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Truncated(_) => 3,
            CliError::Module(_) | CliError::Io(_) => 4,
        }
    }
}

fn module<E: Display>(e: E) -> CliError {
    CliError::Module(e.to_string())
}

fn usage<E: Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn load_system(path: &Path) -> Result<TileSystem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_tile_system(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Concentrations from `--conc` pairs, or `total` split equally over the
/// tiles that occur at non-seed positions.
fn concentrations(
    system: &TileSystem,
    reference: &Assembly,
    pairs: &[(String, f64)],
    total: f64,
) -> Result<ConcentrationVector, CliError> {
    if !pairs.is_empty() {
        return ConcentrationVector::new(pairs.iter().cloned()).map_err(usage);
    }
    let growth: Vec<&str> = (0..system.tile_count())
        .filter(|&i| reference.counts()[i] > 0)
        .map(|i| system.tile_name(i))
        .collect();
    if growth.is_empty() {
        return Err(CliError::Module("the terminal assembly is just the seed".into()));
    }
    let each = total / growth.len() as f64;
    ConcentrationVector::new(growth.into_iter().map(|n| (n, each))).map_err(usage)
}

fn params_for(kf: f64, kr: f64, gse: f64, conc: &ConcentrationVector) -> Result<KineticParams, CliError> {
    let (lo, hi) = conc
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, c)| (lo.min(c), hi.max(c)));
    KineticParams::new(kf, kr, gse, lo, hi).map_err(usage)
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let system = load_system(&args.system)?;
    let reference = terminal_assembly(&system, MAX_POSITIONS).map_err(module)?;
    let conc = concentrations(&system, &reference, &args.conc, args.ctotal)?;
    let params = params_for(args.kinetics.kf, args.kinetics.kr, args.kinetics.gse.unwrap_or(9.0), &conc)?;
    for w in params.regime_warnings(system.temperature()) {
        log::warn!("{w}");
    }
    let options = SimOptions {
        max_events: args.max_events,
        time_cap: args.time_cap,
        allow_zero_bond: args.allow_zero_bond,
        record_events: args.events_log.is_some(),
        ..SimOptions::default()
    };
    let sim = Simulator::with_reference(&system, reference, &conc, &params, options).map_err(module)?;
    let results: Vec<_> = (0..args.runs)
        .into_par_iter()
        .map(|i| {
            let r = sim.run(args.rng_seed, i);
            let report = classify_errors(&r.final_config, sim.reference());
            (r, report)
        })
        .collect();

    if let Some(path) = &args.events_log {
        let mut log = BufWriter::new(File::create(path)?);
        for (r, _) in &results {
            writeln!(log, "# run {}", r.run_index)?;
            for e in &r.events {
                writeln!(log, "{}", e.log_line(&system))?;
            }
        }
        log.flush()?;
    }

    writeln!(out, "{SIMULATE_HEADER}")?;
    let mut elapsed = SampleStats::new();
    let mut growth = SampleStats::new();
    let mut facet = SampleStats::new();
    let mut truncated = Vec::new();
    for (r, report) in &results {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.run_index,
            fmt_num(r.elapsed),
            report.growth_errors,
            report.facet_errors,
            r.terminated_by.as_str()
        )?;
        elapsed.push(r.elapsed);
        growth.push(report.growth_errors as f64);
        facet.push(report.facet_errors as f64);
        if r.terminated_by != Termination::FootprintFilled {
            truncated.push(r.run_index);
        }
    }
    writeln!(
        out,
        "mean,{},{},{},truncated:{}",
        fmt_num(elapsed.mean()),
        fmt_num(growth.mean()),
        fmt_num(facet.mean()),
        truncated.len()
    )?;
    check_truncated(&truncated, args.allow_truncated)
}

fn check_truncated(runs: &[u64], allowed: bool) -> Result<(), CliError> {
    if runs.is_empty() {
        return Ok(());
    }
    let msg = format!("{} run(s) stopped before filling the footprint: {:?}", runs.len(), runs);
    if allowed {
        log::warn!("{msg}");
        Ok(())
    } else {
        Err(CliError::Truncated(msg))
    }
}

pub fn experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (system, family_gse) = match (&args.builtin, &args.system) {
        (Some(name), _) => {
            let mut spec = SystemSpec::builtin(name).map_err(usage)?;
            if let Some(h) = args.height {
                spec = spec.with_height(h);
            }
            if let Some(n) = args.length {
                spec = match spec {
                    SystemSpec::Chain { .. } => SystemSpec::Chain { length: n },
                    SystemSpec::Fanout { types, .. } => SystemSpec::Fanout { positions: n, types },
                    _ => return Err(usage("--length applies to the chain and fanout builtins")),
                };
            }
            let (system, report) = build(&spec).map_err(module)?;
            log::info!("{name}: tile counts {:?}, depth {}", report.counts, report.depth);
            (system, default_gse(name))
        }
        (None, Some(path)) => (load_system(path)?, None),
        (None, None) => return Err(usage("one of --builtin or --system is required")),
    };
    if let Some(path) = &args.emit_system {
        std::fs::write(path, serialize_tile_system(&system))?;
        if args.runs == 0 || system.tile_index("X").is_none() || system.tile_index("Y").is_none() {
            log::info!("wrote {} and skipped the sweep", path.display());
            return Ok(());
        }
    }
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if args.ratios.is_empty() {
        return Err(usage("--ratios needs at least one value"));
    }

    let mut config = SweepConfig::new(args.kinetics.gse.or(family_gse).unwrap_or(9.0), args.ratios.clone());
    config.kf = args.kinetics.kf;
    config.kr = args.kinetics.kr;
    config.c_total = args.ctotal;
    config.runs = args.runs;
    config.master_seed = args.rng_seed;
    config.sim.max_events = Some(args.max_events);
    config.sim.allow_zero_bond = args.allow_zero_bond;

    let reference = terminal_assembly(&system, MAX_POSITIONS).map_err(module)?;
    let rows = run_sweep(&system, &reference, &config).map_err(module)?;

    writeln!(out, "{EXPERIMENT_HEADER}")?;
    let mut truncated = 0;
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_num(row.ratio),
            row.runs,
            fmt_num(row.mean_per_tile_error),
            fmt_num(row.stderr),
            fmt_num(row.mean_growth_errors),
            fmt_num(row.mean_facet_errors),
            fmt_num(row.fraction_runs_with_error)
        )?;
        truncated += row.truncated;
    }
    if truncated > 0 {
        let msg = format!("{truncated} run(s) stopped on the event budget");
        if args.allow_truncated {
            log::warn!("{msg}");
        } else {
            return Err(CliError::Truncated(msg));
        }
    }
    Ok(())
}

pub fn optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let system = load_system(&args.system)?;
    let reference = terminal_assembly(&system, MAX_POSITIONS).map_err(module)?;
    let rect = check_rectilinear(&system, MAX_POSITIONS).map_err(module)?;
    let k = &args.kinetics;
    let mut params =
        KineticParams::new(k.kf, k.kr, k.gse.unwrap_or(9.0), args.conc_scale, args.conc_scale).map_err(usage)?;
    if let Some(r) = args.r {
        params = params.with_r(r).map_err(usage)?;
    }
    let mut objective = ErrorObjective::for_system(&system, &reference, &rect, &params).map_err(module)?;
    if let Some(b) = &args.bounds {
        objective = objective.with_bounds(b[0], b[1]).map_err(usage)?;
    }

    let counts: Vec<u64> = objective.counts.iter().map(|&n| n as u64).collect();
    let closed = sqrt_concentrations(&counts).map_err(module)?;
    let obj_closed = objective.total_growth_error(&closed).map_err(module)?;
    let res_closed = objective.stationarity_residual(&closed);
    let numeric = if args.numeric {
        let init = vec![1.0 / counts.len() as f64; counts.len()];
        Some(minimize_error_numeric(&objective, &init, args.tol).map_err(module)?)
    } else {
        None
    };

    writeln!(out, "{OPTIMIZE_HEADER}")?;
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    for (i, name) in objective.tiles.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            name,
            counts[i],
            fmt_num(closed[i]),
            opt(numeric.as_ref().map(|s| s.conc[i])),
            fmt_num(obj_closed),
            opt(numeric.as_ref().map(|s| s.objective)),
            fmt_num(res_closed),
            opt(numeric.as_ref().map(|s| s.residual)),
        )?;
    }
    Ok(())
}

pub fn estimate_time(args: &EstimateTimeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let system = load_system(&args.system)?;
    let reference = terminal_assembly(&system, MAX_POSITIONS).map_err(module)?;
    let conc = concentrations(&system, &reference, &args.conc, 1.0)?;
    let params = params_for(args.kinetics.kf, args.kinetics.kr, args.kinetics.gse.unwrap_or(15.0), &conc)?;
    let plan = match (args.runs, args.eps) {
        (_, Some(eps)) => RunPlan::Accuracy(eps),
        (Some(n), None) => RunPlan::Runs(n),
        (None, None) => RunPlan::Runs(1000),
    };
    let options = TimingOptions {
        model: if args.kinetic { Model::Kinetic } else { Model::Irreversible },
        ignore_errors: args.ignore_errors,
        max_events: args.max_events,
        time_cap: args.time_cap,
        max_positions: MAX_POSITIONS,
    };
    let est = estimate_time_mc(&system, &conc, &params, plan, args.rng_seed, &options).map_err(module)?;
    if est.variance_exceeds_bound {
        log::warn!("sample variance exceeds 24 * mean^2 beyond sampling noise");
    }
    writeln!(out, "{ESTIMATE_TIME_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        est.runs,
        fmt_num(est.mean),
        fmt_num(est.variance),
        est.ci_halfwidth.map(fmt_num).unwrap_or_default(),
        fmt_num(est.s_upper),
        est.planned_runs,
        fmt_num(est.variance_bound),
        est.tail_violations
    )?;
    Ok(())
}

pub fn terminal(args: &TerminalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let system = load_system(&args.system)?;
    let assembly = terminal_assembly(&system, args.max_positions).map_err(module)?;
    write!(out, "{}", render_grid(&system, assembly.config()))?;
    Ok(())
}
