//! Per-site growth-error model for rectilinear systems.

use ndarray::Array2;
use thiserror::Error;

use crate::atam::RectilinearReport;
use crate::ktam::{epsilon, KineticParams};
use crate::tile::TileSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("system is not rectilinear; input edges are undefined")]
    NotRectilinear,
}

/// Lock-in probabilities between competing tiles.
///
/// Row `i` is the correct tile, column `j` the competitor; the diagonal is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonMatrix {
    pub tiles: Vec<usize>,
    pub mismatch: Array2<u32>,
    pub values: Array2<f64>,
}

/// Builds `eps[i][j]` for the given tiles. The mismatch `m_ij` is the total
/// strength of tile `i`'s input glues that differ from tile `j`'s.
pub fn epsilon_matrix(
    system: &TileSystem,
    rect: &RectilinearReport,
    params: &KineticParams,
    tiles: &[usize],
) -> Result<EpsilonMatrix, AnalysisError> {
    if !rect.is_rectilinear {
        return Err(AnalysisError::NotRectilinear);
    }
    let k = tiles.len();
    let tau = system.temperature();
    let mut mismatch = Array2::zeros((k, k));
    let mut values = Array2::zeros((k, k));
    for (a, &ti) in tiles.iter().enumerate() {
        for (b, &tj) in tiles.iter().enumerate() {
            if a == b {
                continue;
            }
            let m: u32 = rect
                .input_edges
                .iter()
                .filter(|&d| system.tile(ti).edge(d) != system.tile(tj).edge(d))
                .map(|d| system.edge_strength(ti, d))
                .sum();
            if m == 0 {
                log::warn!(
                    "tiles {} and {} share all input glues",
                    system.tile_name(ti),
                    system.tile_name(tj)
                );
            }
            mismatch[[a, b]] = m;
            values[[a, b]] = epsilon(m, tau, params);
        }
    }
    Ok(EpsilonMatrix {
        tiles: tiles.to_vec(),
        mismatch,
        values,
    })
}

/// First-order probability of a growth error at a site owned by tile `i`:
/// `sum_{j != i} eps_ij c_j / c_i`.
pub fn site_error_probability(i: usize, conc: &[f64], eps: &Array2<f64>) -> f64 {
    let ci = conc[i];
    (0..conc.len())
        .filter(|&j| j != i)
        .map(|j| eps[[i, j]] * conc[j])
        .sum::<f64>()
        / ci
}

/// Exact probability that a competitor `j` ends up locked in at a site owned
/// by `i`, for the four-state chain
///
/// ```text
/// empty --kf c_i--> i (correct, absorbing)
/// empty --kf c_j--> j --kr e^{-(tau-m)gse}--> empty
///                   j --r--> locked (absorbing)
/// ```
///
/// Solving `p = c_j/(c_i+c_j) * (eps + (1 - eps) p)` with
/// `eps = r/(r + kr e^{-(tau-m)gse})` gives `p = c_j eps / (c_i + c_j eps)`.
pub fn markov_site_oracle(i: usize, j: usize, conc: &[f64], params: &KineticParams, tau: u32, m: u32) -> f64 {
    let eps = epsilon(m, tau, params);
    let ci = params.kf * conc[i];
    let cj = params.kf * conc[j];
    if cj == 0.0 || eps == 0.0 {
        return 0.0;
    }
    cj * eps / (ci + cj * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn site_probability_examples() {
        let eps = array![[0.0, 0.001], [0.001, 0.0]];
        let p = site_error_probability(0, &[5.0 / 6.0, 1.0 / 6.0], &eps);
        assert!((p - 2e-4).abs() < 1e-15);
        assert_eq!(site_error_probability(0, &[1.0], &array![[0.0]]), 0.0);
        assert_eq!(site_error_probability(0, &[1.0, 0.0], &eps), 0.0);
    }

    #[test]
    fn oracle_limits() {
        let p = KineticParams::new(1.0, 1.0, 9.0, 0.1, 1.0).unwrap();
        assert_eq!(markov_site_oracle(0, 1, &[0.5, 0.5], &p.with_r(0.0).unwrap(), 2, 1), 0.0);
        assert_eq!(markov_site_oracle(0, 1, &[0.5, 0.0], &p, 2, 1), 0.0);
    }

    #[test]
    fn oracle_matches_first_order_at_benchmark_scale() {
        let c = (-16f64).exp();
        let conc = [c * 5.0 / 6.0, c / 6.0];
        let p = KineticParams::new(1.0, 1.0, 9.0, conc[1], c)
            .unwrap()
            .with_r(2.0 * c)
            .unwrap();
        let exact = markov_site_oracle(0, 1, &conc, &p, 2, 1);
        let eps = p.epsilon(1, 2);
        let first = conc[1] / conc[0] * eps;
        // The first-order form drops c_j eps from the denominator.
        assert!(exact < first);
        assert!((first - exact) / first <= conc[1] / conc[0] * eps * 1.0001);
    }

    #[test]
    fn oracle_against_brute_force_chain() {
        // Value iteration on the absorbing chain, independent of the closed form.
        let p = KineticParams::new(1.0, 1.0, 1.5, 0.1, 1.0).unwrap().with_r(0.4).unwrap();
        let conc = [0.6, 0.3];
        let (a, b) = (conc[0], conc[1]);
        let off = p.reverse_rate(1);
        let r = p.r;
        let (mut pe, mut pj) = (0.0f64, 0.0f64);
        for _ in 0..10_000 {
            pe = b / (a + b) * pj;
            pj = r / (r + off) + off / (r + off) * pe;
        }
        let exact = markov_site_oracle(0, 1, &conc, &p, 2, 1);
        assert!((exact - pe).abs() < 1e-12, "{exact} vs {pe}");
    }
}
