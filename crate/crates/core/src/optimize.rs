//! Tile concentrations that minimize the expected number of growth errors
//!
//! ```text
//! E(c) = sum_i N_i * (sum_{j != i} eps_ij c_j) / c_i
//! ```
//!
//! over the simplex `sum_i c_i = 1`, optionally with box bounds. For
//! symmetric `eps` the minimizer is `c_i ∝ sqrt(N_i)`.

use std::collections::BTreeMap;

use ndarray::Array2;
use thiserror::Error;

use crate::atam::{Assembly, RectilinearReport};
use crate::ktam::{epsilon_matrix, AnalysisError, KineticParams};
use crate::tile::{ConcentrationVector, TileSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("all tile counts are zero")]
    AllZero,
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("objective undefined: tile \"{0}\" has zero concentration")]
    Undefined(String),
    #[error("bounds [{lo}, {hi}] admit no point with {k} entries summing to 1")]
    InfeasibleBounds { lo: f64, hi: f64, k: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// `sqrt(N_i) / sum_j sqrt(N_j)`. Tiles with `N_i = 0` get 0 and a warning.
pub fn sqrt_concentrations(counts: &[u64]) -> Result<Vec<f64>, OptimizeError> {
    if counts.iter().all(|&n| n == 0) {
        return Err(OptimizeError::AllZero);
    }
    if counts.contains(&0) {
        log::warn!("tiles with zero count receive zero concentration");
    }
    let positive: Vec<u64> = counts.iter().copied().filter(|&n| n > 0).collect();
    if positive.len() == counts.len() && positive.windows(2).all(|w| w[0] == w[1]) {
        return Ok(vec![1.0 / counts.len() as f64; counts.len()]);
    }
    let roots: Vec<f64> = counts.iter().map(|&n| (n as f64).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    Ok(roots.iter().map(|r| r / total).collect())
}

/// Named form of [`sqrt_concentrations`]. Tiles with zero count are left
/// out of the returned vector and listed separately.
pub fn sqrt_concentrations_named(
    counts: &BTreeMap<String, u64>,
) -> Result<(ConcentrationVector, Vec<String>), OptimizeError> {
    let values: Vec<u64> = counts.values().copied().collect();
    let conc = sqrt_concentrations(&values)?;
    let zero: Vec<String> = counts
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(k, _)| k.clone())
        .collect();
    let vector = ConcentrationVector::new(
        counts
            .keys()
            .zip(conc)
            .filter(|(_, c)| *c > 0.0)
            .map(|(k, c)| (k.clone(), c)),
    )
    .expect("positive entries");
    Ok((vector, zero))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorObjective {
    pub tiles: Vec<String>,
    pub counts: Vec<f64>,
    pub eps: Array2<f64>,
    pub bounds: Option<(f64, f64)>,
}

impl ErrorObjective {
    pub fn new(tiles: Vec<String>, counts: Vec<f64>, eps: Array2<f64>) -> Result<Self, OptimizeError> {
        let k = counts.len();
        if tiles.len() != k || eps.dim() != (k, k) {
            return Err(OptimizeError::InvalidObjective(format!(
                "{} tiles, {} counts, eps {:?}",
                tiles.len(),
                k,
                eps.dim()
            )));
        }
        if counts.iter().any(|&n| !(n >= 0.0)) {
            return Err(OptimizeError::InvalidObjective("negative count".into()));
        }
        if counts.iter().all(|&n| n == 0.0) {
            return Err(OptimizeError::AllZero);
        }
        for i in 0..k {
            if eps[[i, i]] != 0.0 {
                return Err(OptimizeError::InvalidObjective("eps diagonal must be zero".into()));
            }
        }
        if eps.iter().any(|&e| !(0.0..1.0).contains(&e)) {
            return Err(OptimizeError::InvalidObjective("eps entries must lie in [0, 1)".into()));
        }
        Ok(ErrorObjective {
            tiles,
            counts,
            eps,
            bounds: None,
        })
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<Self, OptimizeError> {
        let k = self.counts.len();
        if !(lo >= 0.0 && lo <= hi) || lo * k as f64 > 1.0 + 1e-12 || hi * (k as f64) < 1.0 - 1e-12 {
            return Err(OptimizeError::InfeasibleBounds { lo, hi, k });
        }
        self.bounds = Some((lo, hi));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn inner(&self, i: usize, c: &[f64]) -> f64 {
        (0..c.len())
            .filter(|&j| j != i)
            .map(|j| self.eps[[i, j]] * c[j])
            .sum()
    }

    /// Expected number of growth errors at concentrations `c`.
    pub fn total_growth_error(&self, c: &[f64]) -> Result<f64, OptimizeError> {
        let mut total = 0.0;
        for i in 0..c.len() {
            if self.counts[i] == 0.0 {
                continue;
            }
            if c[i] <= 0.0 {
                return Err(OptimizeError::Undefined(self.tiles[i].clone()));
            }
            total += self.counts[i] * self.inner(i, c) / c[i];
        }
        Ok(total)
    }

    /// Evaluates at a named concentration vector.
    pub fn total_growth_error_named(&self, conc: &ConcentrationVector) -> Result<f64, OptimizeError> {
        let c = self.align(conc)?;
        self.total_growth_error(&c)
    }

    fn align(&self, conc: &ConcentrationVector) -> Result<Vec<f64>, OptimizeError> {
        self.tiles
            .iter()
            .map(|t| conc.get(t).ok_or_else(|| OptimizeError::Undefined(t.clone())))
            .collect()
    }

    /// `dE/dc_k = -N_k (sum_{j != k} eps_kj c_j) / c_k^2 + sum_{i != k} N_i eps_ik / c_i`.
    pub fn gradient(&self, c: &[f64]) -> Vec<f64> {
        let k = c.len();
        (0..k)
            .map(|m| {
                let own = if self.counts[m] > 0.0 {
                    -self.counts[m] * self.inner(m, c) / (c[m] * c[m])
                } else {
                    0.0
                };
                let cross: f64 = (0..k)
                    .filter(|&i| i != m && self.counts[i] > 0.0)
                    .map(|i| self.counts[i] * self.eps[[i, m]] / c[i])
                    .sum();
                own + cross
            })
            .collect()
    }

    /// Largest deviation of a gradient component from the mean component.
    /// Zero exactly at stationary points of the simplex-constrained problem.
    pub fn stationarity_residual(&self, c: &[f64]) -> f64 {
        centered_max(&self.gradient(c))
    }

    /// Stationarity residual that accounts for active box bounds: components
    /// at a bound only count when the gradient pushes further outward.
    pub fn kkt_residual(&self, c: &[f64]) -> f64 {
        let g = self.gradient(c);
        let (lo, hi) = self.bounds.unwrap_or((0.0, f64::INFINITY));
        let tol = 1e-12;
        let free: Vec<usize> = (0..c.len()).filter(|&i| c[i] > lo + tol && c[i] < hi - tol).collect();
        if free.is_empty() {
            return 0.0;
        }
        let lambda = free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
        (0..c.len())
            .map(|i| {
                let d = g[i] - lambda;
                if c[i] <= lo + tol {
                    (-d).max(0.0)
                } else if c[i] >= hi - tol {
                    d.max(0.0)
                } else {
                    d.abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Magnitude of the individual gradient terms, used to scale tolerances.
    fn gradient_scale(&self, c: &[f64]) -> f64 {
        let k = c.len();
        (0..k)
            .map(|m| {
                let own = if self.counts[m] > 0.0 {
                    self.counts[m] * self.inner(m, c) / (c[m] * c[m])
                } else {
                    0.0
                };
                let cross: f64 = (0..k)
                    .filter(|&i| i != m && self.counts[i] > 0.0)
                    .map(|i| self.counts[i] * self.eps[[i, m]] / c[i])
                    .sum();
                own + cross
            })
            .fold(0.0, f64::max)
    }

    /// Builds the objective for the tiles that occur outside the seed.
    pub fn for_system(
        system: &TileSystem,
        assembly: &Assembly,
        rect: &RectilinearReport,
        params: &KineticParams,
    ) -> Result<Self, OptimizeError> {
        let tiles: Vec<usize> = (0..system.tile_count()).filter(|&i| assembly.counts()[i] > 0).collect();
        let eps = epsilon_matrix(system, rect, params, &tiles)?;
        ErrorObjective::new(
            tiles.iter().map(|&i| system.tile_name(i).to_string()).collect(),
            tiles.iter().map(|&i| assembly.counts()[i] as f64).collect(),
            eps.values,
        )
    }
}

fn centered_max(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max)
}

/// Euclidean projection onto `{c : sum c = 1, lo <= c_i <= hi}`.
pub fn project_simplex_box(y: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let clip = |theta: f64| -> Vec<f64> { y.iter().map(|&v| (v - theta).clamp(lo, hi)).collect() };
    let sum = |theta: f64| -> f64 { y.iter().map(|&v| (v - theta).clamp(lo, hi)).sum() };
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    // sum(theta) is non-increasing; bracket the root.
    let mut a = ymin - hi.min(1.0) - 1.0;
    let mut b = ymax - lo;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if sum(mid) > 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut c = clip(0.5 * (a + b));
    // Spread the rounding residue over the free coordinates.
    let free: Vec<usize> = (0..c.len()).filter(|&i| c[i] > lo && c[i] < hi).collect();
    if !free.is_empty() {
        let adj = (1.0 - c.iter().sum::<f64>()) / free.len() as f64;
        for i in free {
            c[i] = (c[i] + adj).clamp(lo, hi);
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericSolution {
    pub conc: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub const MAX_ITERATIONS: usize = 200_000;

/// Objective values remembered by the nonmonotone line search.
const HISTORY: usize = 10;

/// Spectral projected-gradient descent on the simplex (intersected with the
/// box bounds, if any). Each iteration projects a Barzilai-Borwein step and
/// backtracks along the projected direction until the objective drops below
/// the maximum of the last few values. Stops once the KKT residual is at most
/// `tol` times the gradient scale.
pub fn minimize_error_numeric(
    obj: &ErrorObjective,
    init: &[f64],
    tol: f64,
) -> Result<NumericSolution, OptimizeError> {
    let k = obj.len();
    if k == 1 {
        return Ok(NumericSolution {
            conc: vec![1.0],
            objective: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    let (lo, hi) = obj.bounds.unwrap_or((0.0, f64::INFINITY));
    let eval = |c: &[f64]| obj.total_growth_error(c).unwrap_or(f64::INFINITY);

    let mut c = project_simplex_box(init, lo, hi);
    let mut f = eval(&c);
    if !f.is_finite() {
        return Err(OptimizeError::Undefined("initial point".into()));
    }
    let mut g = obj.gradient(&c);
    let mut step = 1.0 / centered_max(&g).max(f64::MIN_POSITIVE);
    let mut residual = obj.kkt_residual(&c);
    let mut history = std::collections::VecDeque::from([f]);
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let scale = obj.gradient_scale(&c).max(f64::MIN_POSITIVE);
        if residual <= tol * scale {
            break;
        }
        iterations += 1;
        let target = project_simplex_box(
            &c.iter().zip(&g).map(|(ci, gi)| ci - step * gi).collect::<Vec<_>>(),
            lo,
            hi,
        );
        let d: Vec<f64> = target.iter().zip(&c).map(|(a, b)| a - b).collect();
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            break;
        }
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&d).map(|(ci, di)| ci + lambda * di).collect();
            let ft = eval(&trial);
            if ft.is_finite() && ft <= reference + 1e-4 * lambda * slope {
                accepted = Some((trial, ft));
                break;
            }
            lambda *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            // No further decrease representable in floating point.
            break;
        };
        let gnext = obj.gradient(&next);
        let s: Vec<f64> = next.iter().zip(&c).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { step * 2.0 };
        c = next;
        f = fnext;
        g = gnext;
        residual = obj.kkt_residual(&c);
        if history.len() == HISTORY {
            history.pop_front();
        }
        history.push_back(f);
    }
    let scale = obj.gradient_scale(&c).max(f64::MIN_POSITIVE);
    if residual <= tol * scale {
        return Ok(NumericSolution {
            conc: c,
            objective: f,
            residual,
            iterations,
        });
    }
    Err(OptimizeError::NonConvergence {
        iterations,
        residual,
        best: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn uniform_eps(k: usize, e: f64) -> Array2<f64> {
        Array2::from_shape_fn((k, k), |(i, j)| if i == j { 0.0 } else { e })
    }

    fn obj(counts: &[f64], eps: Array2<f64>) -> ErrorObjective {
        let tiles = (0..counts.len()).map(|i| format!("T{i}")).collect();
        ErrorObjective::new(tiles, counts.to_vec(), eps).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let c = sqrt_concentrations(&[25, 1]).unwrap();
        assert!((c[0] - 5.0 / 6.0).abs() < 1e-12 && (c[1] - 1.0 / 6.0).abs() < 1e-12);
        let c = sqrt_concentrations(&[64, 1]).unwrap();
        assert!((c[0] - 8.0 / 9.0).abs() < 1e-12 && (c[1] - 1.0 / 9.0).abs() < 1e-12);
        assert_eq!(sqrt_concentrations(&[7]).unwrap(), vec![1.0]);
        let c = sqrt_concentrations(&[4, 4, 1]).unwrap();
        for (a, b) in c.iter().zip([0.4, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(sqrt_concentrations(&[3, 3, 3]).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(sqrt_concentrations(&[0, 0]), Err(OptimizeError::AllZero));
        assert_eq!(sqrt_concentrations(&[4, 0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn named_closed_form_skips_zero_tiles() {
        let counts: BTreeMap<String, u64> = [("X".to_string(), 25), ("Y".into(), 1), ("seed".into(), 0)].into();
        let (c, zero) = sqrt_concentrations_named(&counts).unwrap();
        assert_eq!(zero, vec!["seed".to_string()]);
        assert_eq!(c.len(), 2);
        assert!((c.get("X").unwrap() / c.get("Y").unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn objective_examples() {
        let o = obj(&[25.0, 1.0], uniform_eps(2, 0.01));
        assert!((o.total_growth_error(&[5.0 / 6.0, 1.0 / 6.0]).unwrap() - 0.1).abs() < 1e-12);
        assert!((o.total_growth_error(&[0.5, 0.5]).unwrap() - 0.26).abs() < 1e-12);
        let single = obj(&[9.0], array![[0.0]]);
        assert_eq!(single.total_growth_error(&[1.0]).unwrap(), 0.0);
        assert!(matches!(o.total_growth_error(&[1.0, 0.0]), Err(OptimizeError::Undefined(_))));
    }

    #[test]
    fn residual_vanishes_at_closed_form() {
        let o = obj(&[25.0, 1.0], array![[0.0, 0.3], [0.3, 0.0]]);
        let c = sqrt_concentrations(&[25, 1]).unwrap();
        assert!(o.stationarity_residual(&c) < 1e-10);
        assert!(o.stationarity_residual(&[0.84, 0.16]) > 1e-6);
        assert_eq!(obj(&[3.0], array![[0.0]]).stationarity_residual(&[1.0]), 0.0);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let o = obj(&[25.0, 1.0], array![[0.0, 0.37], [0.37, 0.0]]);
        let sol = minimize_error_numeric(&o, &[0.5, 0.5], 1e-12).unwrap();
        assert!((sol.conc[0] - 5.0 / 6.0).abs() < 1e-6, "{sol:?}");
        assert!(sol.objective <= o.total_growth_error(&[0.5, 0.5]).unwrap());
        let one = minimize_error_numeric(&obj(&[4.0], array![[0.0]]), &[1.0], 1e-9).unwrap();
        assert_eq!(one.conc, vec![1.0]);
    }

    #[test]
    fn asymmetric_boundary_solution() {
        let o = obj(&[25.0, 1.0], array![[0.0, 0.01], [0.0, 0.0]])
            .with_bounds(0.01, 1.0)
            .unwrap();
        let sol = minimize_error_numeric(&o, &[0.5, 0.5], 1e-10).unwrap();
        // Brute-force grid oracle over the feasible segment.
        let best = (1..=9800)
            .map(|k| 0.01 + k as f64 * 1e-4)
            .map(|cy| (cy, o.total_growth_error(&[1.0 - cy, cy]).unwrap()))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!((best.0 - 0.0101).abs() < 1e-9);
        assert!((sol.conc[0] - 0.99).abs() < 1e-9 && (sol.conc[1] - 0.01).abs() < 1e-9, "{sol:?}");
    }

    #[test]
    fn projection_properties() {
        let p = project_simplex_box(&[0.9, 0.9, -3.0], 0.0, f64::INFINITY);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let p = project_simplex_box(&[5.0, 0.0, 0.0], 0.1, 0.6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
        assert!(obj(&[1.0, 1.0], uniform_eps(2, 0.1)).with_bounds(0.6, 1.0).is_err());
    }
}
