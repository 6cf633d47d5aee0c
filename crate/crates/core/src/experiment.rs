//! Error-rate sweeps over the concentration ratio `c_X : c_Y`.

use rayon::prelude::*;

use crate::atam::Assembly;
use crate::ktam::{classify_errors, KineticParams, ParamError, SimError, SimOptions, Simulator, Termination};
use crate::report::SampleStats;
use crate::tile::{ConcentrationVector, TileSystem};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("the system has no tile named \"{0}\"")]
    MissingTile(&'static str),
    #[error("ratio must be positive and finite, got {0}")]
    BadRatio(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub kf: f64,
    pub kr: f64,
    pub gse: f64,
    /// `c_X + c_Y`.
    pub c_total: f64,
    /// Lock-in rate; only used for reporting, the simulator does not need it.
    pub r: Option<f64>,
    pub ratios: Vec<f64>,
    pub runs: u64,
    pub master_seed: u64,
    pub sim: SimOptions,
}

impl SweepConfig {
    /// Defaults for the benchmark systems: `k_f = k_r = 1`,
    /// `c_X + c_Y = e^-16`, 2000 runs per ratio.
    pub fn new(gse: f64, ratios: Vec<f64>) -> Self {
        SweepConfig {
            kf: 1.0,
            kr: 1.0,
            gse,
            c_total: (-16f64).exp(),
            r: None,
            ratios,
            runs: 2000,
            master_seed: 0,
            sim: SimOptions::default(),
        }
    }

    pub fn params_for(&self, ratio: f64) -> Result<KineticParams, SweepError> {
        let (cx, cy) = split(ratio, self.c_total)?;
        let p = KineticParams::new(self.kf, self.kr, self.gse, cx.min(cy), cx.max(cy))?;
        Ok(match self.r {
            Some(r) => p.with_r(r)?,
            None => p,
        })
    }
}

/// Default `G_se` for a builtin family: 9 for A systems, 11 for B systems.
pub fn default_gse(builtin: &str) -> Option<f64> {
    match builtin {
        "A1" | "A2" => Some(9.0),
        "B1" | "B2" => Some(11.0),
        _ => None,
    }
}

/// `c_X = ρ/(1+ρ) c_total`, `c_Y = c_total/(1+ρ)`.
pub fn split(ratio: f64, c_total: f64) -> Result<(f64, f64), SweepError> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(SweepError::BadRatio(ratio));
    }
    Ok((ratio / (1.0 + ratio) * c_total, c_total / (1.0 + ratio)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub runs: u64,
    /// Mean over runs of wrong tiles in the footprint divided by the filled
    /// non-seed footprint positions. Tiles outside the footprint are not
    /// footprint positions and only show up in `mean_facet_errors`.
    pub mean_per_tile_error: f64,
    /// Sample standard deviation of the per-run value over `sqrt(runs)`.
    pub stderr: f64,
    pub mean_growth_errors: f64,
    pub mean_facet_errors: f64,
    pub fraction_runs_with_error: f64,
    /// Runs that stopped on the event budget or time cap.
    pub truncated: u64,
    pub mean_events: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOutcome {
    pub growth_errors: usize,
    pub facet_errors: usize,
    pub filled: usize,
    pub events: u64,
    pub terminated_by: Termination,
}

impl RunOutcome {
    pub fn per_tile_error(&self) -> f64 {
        if self.filled == 0 {
            0.0
        } else {
            self.growth_errors as f64 / self.filled as f64
        }
    }
}

/// Runs every ratio of the sweep. Run `i` of ratio index `k` uses random
/// stream `(k << 32) | i`.
pub fn run_sweep(system: &TileSystem, reference: &Assembly, config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    let x = system.tile_index("X").ok_or(SweepError::MissingTile("X"))?;
    let y = system.tile_index("Y").ok_or(SweepError::MissingTile("Y"))?;
    let mut rows = Vec::with_capacity(config.ratios.len());
    for (k, &ratio) in config.ratios.iter().enumerate() {
        let (cx, cy) = split(ratio, config.c_total)?;
        let conc = ConcentrationVector::new([(system.tile_name(x), cx), (system.tile_name(y), cy)])
            .expect("positive concentrations");
        let params = config.params_for(ratio)?;
        for w in params.regime_warnings(system.temperature()) {
            log::info!("ratio {ratio}: {w}");
        }
        let sim = Simulator::with_reference(system, reference.clone(), &conc, &params, config.sim.clone())?;
        let outcomes = run_batch(&sim, config.master_seed, (k as u64) << 32, config.runs);
        rows.push(summarize(ratio, &outcomes));
    }
    Ok(rows)
}

/// Runs `runs` simulations on streams `offset + i` and classifies each final
/// configuration. Results come back in run order.
pub fn run_batch(sim: &Simulator<'_>, master_seed: u64, offset: u64, runs: u64) -> Vec<RunOutcome> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let r = sim.run(master_seed, offset + i);
            let report = classify_errors(&r.final_config, sim.reference());
            RunOutcome {
                growth_errors: report.growth_errors,
                facet_errors: report.facet_errors,
                filled: report.filled,
                events: r.attachments + r.detachments,
                terminated_by: r.terminated_by,
            }
        })
        .collect()
}

pub fn summarize(ratio: f64, outcomes: &[RunOutcome]) -> SweepRow {
    let n = outcomes.len() as f64;
    let per_tile: SampleStats = outcomes.iter().map(RunOutcome::per_tile_error).collect();
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    SweepRow {
        ratio,
        runs: outcomes.len() as u64,
        mean_per_tile_error: per_tile.mean(),
        stderr: per_tile.std_err(),
        mean_growth_errors: mean(&|o| o.growth_errors as f64),
        mean_facet_errors: mean(&|o| o.facet_errors as f64),
        fraction_runs_with_error: mean(&|o| (o.growth_errors > 0) as u8 as f64),
        truncated: outcomes
            .iter()
            .filter(|o| o.terminated_by != Termination::FootprintFilled)
            .count() as u64,
        mean_events: mean(&|o| o.events as f64),
    }
}
