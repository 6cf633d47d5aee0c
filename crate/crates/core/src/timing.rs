//! Expected assembly time. Sequential and fan-out systems have closed forms;
//! everything else goes through Monte Carlo estimation with run-count
//! planning, checked on small systems against an exact configuration-graph
//! solver.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::atam::{terminal_assembly, Assembly, AssemblyError};
use crate::ktam::{classify_errors, KineticParams, Model, SimError, SimOptions, Simulator, Termination};
use crate::optimize::{sqrt_concentrations, OptimizeError};
use crate::tile::{ConcentrationVector, Configuration, Pos, TileSystem};

/// Refuse Monte Carlo plans beyond this many runs.
pub const MAX_PLANNED_RUNS: u64 = 100_000_000;

/// Largest number of non-seed positions the exact solver accepts.
pub const MAX_EXACT_POSITIONS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimingError {
    #[error("tile {0} occurs in the assembly but has zero concentration")]
    ZeroConcentration(usize),
    #[error("length mismatch: {0} counts, {1} concentrations")]
    Length(usize, usize),
    #[error("runs hit the event budget or time cap: {0:?}")]
    Truncated(Vec<u64>),
    #[error("runs finished with wrong tiles (use ignore_errors to accept): {0:?}")]
    ErroneousRuns(Vec<u64>),
    #[error("planned {0} runs, more than the limit of {MAX_PLANNED_RUNS}")]
    TooManyRuns(u64),
    #[error("{0} non-seed positions; the exact solver handles at most {MAX_EXACT_POSITIONS}")]
    TooLarge(usize),
    #[error("assembly cannot complete from a reachable configuration")]
    Stuck,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// `(1/k_f) * sum_i N_i / c_i` over any numeric type, so rational inputs
/// give exact results.
pub fn sequential_time<T>(counts: &[T], conc: &[T], kf: T) -> Result<T, TimingError>
where
    T: Clone + Zero + One + PartialEq + std::ops::Div<Output = T>,
{
    if counts.len() != conc.len() {
        return Err(TimingError::Length(counts.len(), conc.len()));
    }
    let mut total = T::zero();
    for (i, (n, c)) in counts.iter().zip(conc).enumerate() {
        if n.is_zero() {
            continue;
        }
        if c.is_zero() {
            return Err(TimingError::ZeroConcentration(i));
        }
        total = total + n.clone() / c.clone();
    }
    Ok(total / kf)
}

/// Expected time of a system whose tiles attach one at a time.
pub fn expected_time_sequential(counts: &[u64], conc: &[f64], kf: f64) -> Result<f64, TimingError> {
    let n: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    sequential_time(&n, conc, kf)
}

/// `c_i = sqrt(N_i) / sum_j sqrt(N_j)`, which minimizes `sum_i N_i / c_i`
/// on the simplex.
pub fn min_time_concentrations(counts: &[u64]) -> Result<Vec<f64>, TimingError> {
    Ok(sqrt_concentrations(counts)?)
}

/// True when at most one `(position, tile)` pair was attachable at every
/// step of error-free growth, i.e. tiles can only attach one by one.
pub fn is_sequential(assembly: &Assembly) -> bool {
    assembly.max_frontier() <= 1
}

pub fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

/// Expected completion time of a fan-out system: the mean of the maximum
/// of independent exponential fill times, with `counts[t]` positions filled
/// at rate `k_f * conc[t]`.
///
/// A single rate gives `H_N / (k_f c)`. Mixed rates are integrated
/// numerically: `E[max] = ∫ 1 - prod_t (1 - e^{-λ_t s})^{n_t} ds`.
pub fn fanout_expected_time(counts: &[u64], conc: &[f64], kf: f64) -> Result<f64, TimingError> {
    if counts.len() != conc.len() {
        return Err(TimingError::Length(counts.len(), conc.len()));
    }
    let mut groups: Vec<(u64, f64)> = Vec::new();
    for (i, (&n, &c)) in counts.iter().zip(conc).enumerate() {
        if n == 0 {
            continue;
        }
        if !(c > 0.0) {
            return Err(TimingError::ZeroConcentration(i));
        }
        groups.push((n, kf * c));
    }
    if groups.is_empty() {
        return Ok(0.0);
    }
    let rate0 = groups[0].1;
    if groups.iter().all(|g| g.1 == rate0) {
        let n: u64 = groups.iter().map(|g| g.0).sum();
        return Ok(harmonic(n) / rate0);
    }
    Ok(max_exponential_mean(&groups))
}

fn max_exponential_mean(groups: &[(u64, f64)]) -> f64 {
    let survival = |s: f64| -> f64 {
        let log_cdf: f64 = groups
            .iter()
            .map(|&(n, rate)| n as f64 * (-(-rate * s).exp()).ln_1p())
            .sum();
        -log_cdf.exp_m1()
    };
    // Past `end` the survival function is below 1e-18.
    let end = groups
        .iter()
        .map(|&(n, rate)| ((n as f64).ln() + 18.0 * std::f64::consts::LN_10) / rate)
        .fold(0.0, f64::max);
    // Split into panels so the adaptive rule sees the shape of the integrand.
    let panels = 64;
    let h = end / panels as f64;
    (0..panels)
        .map(|k| {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            adaptive_simpson(&survival, a, b, 1e-15 * end, 40)
        })
        .sum()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Concentration floor `1 / (k ln N)` that every entry of a time-optimal
/// vector for a fan-out system with `k` tile types and `N` positions meets.
pub fn fanout_concentration_floor(k: usize, n: u64) -> f64 {
    1.0 / (k as f64 * (n as f64).ln())
}

/// Indices of the entries of a normalized concentration vector that fall
/// below [`fanout_concentration_floor`].
pub fn fanout_floor_violations(conc: &[f64], n: u64) -> Vec<usize> {
    let floor = fanout_concentration_floor(conc.len(), n);
    (0..conc.len()).filter(|&i| conc[i] < floor).collect()
}

/// Runs needed so the sample mean lies within `eps` of the expected time
/// with probability at least 3/4: `ceil(48 S^2 / eps)`.
pub fn sample_count(s_upper: f64, eps: f64) -> u64 {
    (48.0 * s_upper * s_upper / eps).ceil() as u64
}

/// Planning bound `d / (k_f c_min)` on the expected assembly time, where
/// `d` is the assembly depth.
pub fn s_upper_bound(system: &TileSystem, c_min: f64, kf: f64, max_positions: usize) -> Result<f64, TimingError> {
    let a = terminal_assembly(system, max_positions)?;
    Ok(a.depth() as f64 / (kf * c_min))
}

/// Exact expected completion time under error-free kinetics: every
/// attachable correct tile attaches at rate `k_f c` and nothing detaches.
/// Solved on the graph of reachable partial assemblies.
pub fn exact_expected_time(
    system: &TileSystem,
    conc: &ConcentrationVector,
    kf: f64,
    max_positions: usize,
) -> Result<f64, TimingError> {
    let reference = terminal_assembly(system, max_positions)?;
    let positions: Vec<(Pos, usize)> = reference.config().grown().collect();
    if positions.len() > MAX_EXACT_POSITIONS {
        return Err(TimingError::TooLarge(positions.len()));
    }
    let per_tile = conc.for_system(system).map_err(SimError::from)?;
    let mut rates = Vec::with_capacity(positions.len());
    for &(_, t) in &positions {
        match per_tile[t] {
            Some(c) => rates.push(kf * c),
            None => return Err(TimingError::ZeroConcentration(t)),
        }
    }
    let full: u32 = if positions.is_empty() { 0 } else { u32::MAX >> (32 - positions.len()) };
    let mut memo = HashMap::new();
    solve_mask(system, &positions, &rates, 0, full, &mut memo)
}

fn solve_mask(
    system: &TileSystem,
    positions: &[(Pos, usize)],
    rates: &[f64],
    mask: u32,
    full: u32,
    memo: &mut HashMap<u32, f64>,
) -> Result<f64, TimingError> {
    if mask == full {
        return Ok(0.0);
    }
    if let Some(&v) = memo.get(&mask) {
        return Ok(v);
    }
    let mut config: Configuration = system.seed().clone();
    for (k, &(p, t)) in positions.iter().enumerate() {
        if mask & (1 << k) != 0 {
            config.attach(p, t);
        }
    }
    let tau = system.temperature();
    let mut total = 0.0;
    let mut next = Vec::new();
    for (k, &(p, t)) in positions.iter().enumerate() {
        if mask & (1 << k) == 0 && system.bond_strength(&config, t, p).unwrap_or(0) >= tau {
            total += rates[k];
            next.push(k);
        }
    }
    if total == 0.0 {
        return Err(TimingError::Stuck);
    }
    let mut value = 1.0;
    for k in next {
        value += rates[k] * solve_mask(system, positions, rates, mask | (1 << k), full, memo)?;
    }
    let value = value / total;
    memo.insert(mask, value);
    Ok(value)
}

/// How many simulations to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunPlan {
    Runs(u64),
    /// Target accuracy; the run count comes from [`sample_count`].
    Accuracy(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingOptions {
    /// `Irreversible` grows only with correct, temperature-meeting
    /// attachments and no detachments. `Kinetic` runs the full simulator
    /// and measures time until the footprint is covered.
    pub model: Model,
    /// Accept kinetic runs that finish with wrong tiles.
    pub ignore_errors: bool,
    pub max_events: Option<u64>,
    pub time_cap: Option<f64>,
    pub max_positions: usize,
}

impl Default for TimingOptions {
    fn default() -> Self {
        TimingOptions {
            model: Model::Irreversible,
            ignore_errors: false,
            max_events: None,
            time_cap: None,
            max_positions: crate::ktam::sim::DEFAULT_MAX_POSITIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeEstimate {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Half-width of the normal-approximation 95% interval. `None` for a
    /// single run.
    pub ci_halfwidth: Option<f64>,
    pub runs: u64,
    pub s_upper: f64,
    pub planned_runs: u64,
    /// `24 * mean^2`.
    pub variance_bound: f64,
    /// Sample variance above `variance_bound` by more than three standard
    /// errors.
    pub variance_exceeds_bound: bool,
    /// Number of `k` in 1..=4 with `P(T > 2kS)` above `2^-k` by more than
    /// three standard errors, taking `S` as the sample mean.
    pub tail_violations: u32,
    pub times: Vec<f64>,
}

/// Empirical `P(T > 2kS)` and its standard error for `k = 1..=4`.
pub fn tail_fractions(times: &[f64], s: f64) -> [(f64, f64); 4] {
    let n = times.len() as f64;
    std::array::from_fn(|i| {
        let k = (i + 1) as f64;
        let p = times.iter().filter(|&&t| t > 2.0 * k * s).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    })
}

fn summarize(times: Vec<f64>, s_upper: f64, planned_runs: u64) -> TimeEstimate {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let (m2, m4) = times.iter().fold((0.0, 0.0), |(a, b), &t| {
        let d = (t - mean) * (t - mean);
        (a + d, b + d * d)
    });
    let variance = if times.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let ci_halfwidth = (times.len() > 1).then(|| 1.96 * (variance / n).sqrt());
    let variance_se = ((m4 / n - (m2 / n).powi(2)).max(0.0) / n).sqrt();
    let variance_bound = 24.0 * mean * mean;
    let tail_violations = tail_fractions(&times, mean)
        .iter()
        .enumerate()
        .filter(|(i, (p, se))| *p > 0.5f64.powi(*i as i32 + 1) + 3.0 * se)
        .count() as u32;
    TimeEstimate {
        mean,
        variance,
        ci_halfwidth,
        runs: times.len() as u64,
        s_upper,
        planned_runs,
        variance_bound,
        variance_exceeds_bound: variance > variance_bound + 3.0 * variance_se,
        tail_violations,
        times,
    }
}

/// Monte Carlo estimate of the expected assembly time.
///
/// Run `i` uses random stream `i` of `master_seed`; results are collected
/// in run order, so the estimate does not depend on the thread count.
pub fn estimate_time_mc(
    system: &TileSystem,
    conc: &ConcentrationVector,
    params: &KineticParams,
    plan: RunPlan,
    master_seed: u64,
    options: &TimingOptions,
) -> Result<TimeEstimate, TimingError> {
    let reference = terminal_assembly(system, options.max_positions)?;
    let per_tile = conc.for_system(system).map_err(SimError::from)?;
    let c_min = reference
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .filter_map(|(i, _)| per_tile[i])
        .fold(f64::INFINITY, f64::min);
    let s_upper = if c_min.is_finite() {
        reference.depth() as f64 / (params.kf * c_min)
    } else {
        0.0
    };
    let planned_runs = match plan {
        RunPlan::Runs(n) => n,
        RunPlan::Accuracy(eps) => {
            if !(eps > 0.0) {
                return Err(TimingError::Invalid(format!("accuracy must be positive, got {eps}")));
            }
            sample_count(s_upper, eps).max(1)
        }
    };
    if planned_runs == 0 {
        return Err(TimingError::Invalid("at least one run is required".into()));
    }
    if planned_runs > MAX_PLANNED_RUNS {
        return Err(TimingError::TooManyRuns(planned_runs));
    }

    let sim_options = SimOptions {
        max_events: options.max_events,
        time_cap: options.time_cap,
        model: options.model,
        ..SimOptions::default()
    };
    let sim = Simulator::with_reference(system, reference, conc, params, sim_options)?;
    let outcomes: Vec<(f64, Termination, bool)> = (0..planned_runs)
        .into_par_iter()
        .map(|i| {
            let r = sim.run(master_seed, i);
            let wrong = classify_errors(&r.final_config, sim.reference()).total() > 0;
            (r.elapsed, r.terminated_by, wrong)
        })
        .collect();

    let truncated: Vec<u64> = (0..planned_runs)
        .filter(|&i| outcomes[i as usize].1 != Termination::FootprintFilled)
        .collect();
    if !truncated.is_empty() {
        return Err(TimingError::Truncated(truncated));
    }
    if !options.ignore_errors {
        let wrong: Vec<u64> = (0..planned_runs).filter(|&i| outcomes[i as usize].2).collect();
        if !wrong.is_empty() {
            return Err(TimingError::ErroneousRuns(wrong));
        }
    }
    let times = outcomes.into_iter().map(|o| o.0).collect();
    Ok(summarize(times, s_upper, planned_runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tile::{Glue, Tile};
    use num_rational::Ratio;

    fn chain(len: i64) -> TileSystem {
        TileSystem::new(
            2,
            vec![Glue::new("c", 2)],
            vec![
                Tile::new("C", "null", "c", "null", "c"),
                Tile::new("S", "null", "c", "null", "null"),
                Tile::new("stop", "null", "null", "null", "null"),
            ],
            &[(Pos::new(0, 0), "S".into()), (Pos::new(len + 1, 0), "stop".into())],
        )
        .unwrap()
    }

    #[test]
    fn sequential_examples() {
        let t = expected_time_sequential(&[25, 1], &[5.0 / 6.0, 1.0 / 6.0], 1.0).unwrap();
        assert!((t - 36.0).abs() < 1e-12);
        assert_eq!(expected_time_sequential(&[25, 1], &[0.5, 0.5], 1.0).unwrap(), 52.0);
        assert_eq!(expected_time_sequential(&[1], &[1.0], 1.0).unwrap(), 1.0);
        assert_eq!(
            expected_time_sequential(&[1, 2], &[1.0, 0.0], 1.0),
            Err(TimingError::ZeroConcentration(1))
        );
    }

    #[test]
    fn rational_optimum_is_exact() {
        let n = [Ratio::from_integer(25i64), Ratio::from_integer(1)];
        let c = [Ratio::new(5i64, 6), Ratio::new(1, 6)];
        assert_eq!(sequential_time(&n, &c, Ratio::from_integer(1)).unwrap(), Ratio::from_integer(36));
    }

    #[test]
    fn min_time_examples() {
        assert_eq!(min_time_concentrations(&[9, 9, 9, 9]).unwrap(), vec![0.25; 4]);
        let c = min_time_concentrations(&[64, 1]).unwrap();
        assert!((c[0] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn fanout_closed_and_numeric_forms_agree() {
        assert_eq!(fanout_expected_time(&[1], &[1.0], 1.0).unwrap(), 1.0);
        let t = fanout_expected_time(&[50, 50], &[0.5, 0.5], 1.0).unwrap();
        assert!((t - 10.374_755_2).abs() < 1e-6, "{t}");
        let numeric = max_exponential_mean(&[(100, 0.5)]);
        assert!((numeric - t).abs() < 1e-9 * t, "{numeric} vs {t}");
    }

    #[test]
    fn fanout_mixed_rates_match_inclusion_exclusion() {
        // E[max] = sum over nonempty subsets S of (-1)^{|S|+1} / sum_{p in S} rate_p.
        let rates = [0.3, 0.3, 0.3, 1.1, 1.1];
        let mut exact = 0.0;
        for s in 1u32..(1 << rates.len()) {
            let sum: f64 = (0..rates.len()).filter(|i| s & (1 << i) != 0).map(|i| rates[i]).sum();
            let sign = if s.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            exact += sign / sum;
        }
        let t = fanout_expected_time(&[3, 2], &[0.3, 1.1], 1.0).unwrap();
        assert!((t - exact).abs() < 1e-10 * exact, "{t} vs {exact}");
    }

    #[test]
    fn planning_helpers() {
        assert_eq!(sample_count(10.0, 0.5), 9600);
        assert_eq!(sample_count(1.0, 48.0), 1);
        assert_eq!(sample_count(2.0, 1.0), 192);
        assert_eq!(s_upper_bound(&chain(10), 0.1, 1.0, 100).unwrap(), 100.0);
        assert!((fanout_concentration_floor(2, 100) - 0.108_573_620_5).abs() < 1e-9);
        assert_eq!(fanout_floor_violations(&[0.95, 0.05], 100), vec![1]);
    }

    #[test]
    fn exact_solver_on_chain() {
        let sys = chain(6);
        let conc = ConcentrationVector::new([("C", 0.5)]).unwrap();
        let t = exact_expected_time(&sys, &conc, 1.0, 100).unwrap();
        assert!((t - 12.0).abs() < 1e-12);
        assert!(is_sequential(&terminal_assembly(&sys, 100).unwrap()));
    }

    #[test]
    fn mc_on_short_chain() {
        let sys = chain(5);
        let conc = ConcentrationVector::new([("C", 1.0)]).unwrap();
        let params = KineticParams::new(1.0, 1.0, 20.0, 1.0, 1.0).unwrap();
        let est = estimate_time_mc(&sys, &conc, &params, RunPlan::Runs(4000), 11, &TimingOptions::default()).unwrap();
        assert!((est.mean - 5.0).abs() < 3.0 * (5.0f64 / 4000.0).sqrt(), "{}", est.mean);
        assert_eq!(est.s_upper, 5.0);
        assert!(!est.variance_exceeds_bound);
        assert_eq!(est.tail_violations, 0);

        let one = estimate_time_mc(&sys, &conc, &params, RunPlan::Runs(1), 11, &TimingOptions::default()).unwrap();
        assert_eq!(one.ci_halfwidth, None);
        assert_eq!(one.variance, 0.0);

        let planned = estimate_time_mc(&sys, &conc, &params, RunPlan::Accuracy(60.0), 3, &TimingOptions::default()).unwrap();
        assert_eq!(planned.planned_runs, 20);
    }

    #[test]
    fn budget_hits_are_reported() {
        let sys = chain(5);
        let conc = ConcentrationVector::new([("C", 1.0)]).unwrap();
        let params = KineticParams::new(1.0, 1.0, 20.0, 1.0, 1.0).unwrap();
        let opts = TimingOptions {
            max_events: Some(3),
            ..TimingOptions::default()
        };
        let e = estimate_time_mc(&sys, &conc, &params, RunPlan::Runs(2), 0, &opts).unwrap_err();
        assert_eq!(e, TimingError::Truncated(vec![0, 1]));
    }
}
