//! Google matrix construction and classical PageRank.
//!
//! `P1` (row-normalized adjacency) -> `P2` (dangling rows replaced by `e/n`)
//! -> `G = alpha * P2^T + (1 - alpha) * v e^T`. `G` is dense, strictly positive
//! and column-stochastic, so power iteration converges from any probability
//! vector to the unique PageRank vector.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Schur};
use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::Rng as _;
use thiserror::Error;

use crate::par::Execution;
use crate::seed;
use crate::webgraph::{reverse_graph, DirectedGraph};

/// Largest `n` for which the full non-symmetric spectrum of `G` is computed.
pub const DENSE_SPECTRUM_CAP: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("invalid personalization vector: {0}")]
    InvalidPersonalization(String),
    #[error("power iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("Schur iteration did not converge for n = {0}")]
    EigenFailure(usize),
    #[error("n = {n} exceeds the dense spectrum cap {cap}")]
    SizeCap { n: usize, cap: usize },
}

/// Row-normalized adjacency; dangling rows are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(pub DMatrix<f64>);

/// Row-stochastic matrix with dangling rows patched to the uniform vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(pub DMatrix<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct GoogleMatrix {
    pub matrix: DMatrix<f64>,
    pub alpha: f64,
    pub v: DVector<f64>,
}

impl GoogleMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankVector {
    pub p: DVector<f64>,
    /// `||G p - p||_1` of the returned vector (0 for Monte Carlo estimates).
    pub residual: f64,
    pub iterations: usize,
}

pub fn uniform(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / n as f64)
}

pub fn transition_matrix(g: &DirectedGraph) -> TransitionMatrix {
    let n = g.n();
    let degrees = g.out_degrees();
    let mut p1 = DMatrix::zeros(n, n);
    for (src, dst) in g.edges() {
        p1[(src, dst)] = 1.0 / degrees[src] as f64;
    }
    TransitionMatrix(p1)
}

pub fn patch_dangling(p1: &TransitionMatrix) -> StochasticMatrix {
    let n = p1.0.nrows();
    let mut p2 = p1.0.clone();
    for mut row in p2.row_iter_mut() {
        if row.iter().all(|&x| x == 0.0) {
            row.fill(1.0 / n as f64);
        }
    }
    StochasticMatrix(p2)
}

fn check_personalization(v: &DVector<f64>, n: usize) -> Result<(), RankError> {
    if v.len() != n {
        return Err(RankError::InvalidPersonalization(format!("length {} != n = {n}", v.len())));
    }
    if let Some(x) = v.iter().find(|&&x| !(x > 0.0)) {
        return Err(RankError::InvalidPersonalization(format!("nonpositive entry {x}")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(RankError::InvalidPersonalization(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// `G = alpha * P2^T + (1 - alpha) * v e^T`.
///
/// `alpha = 0` is accepted as the rank-one limit `G = v e^T`.
pub fn google_matrix(p2: &StochasticMatrix, alpha: f64, v: &DVector<f64>) -> Result<GoogleMatrix, RankError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(RankError::InvalidAlpha(alpha));
    }
    let n = p2.0.nrows();
    check_personalization(v, n)?;
    let mut g = p2.0.transpose() * alpha;
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] += (1.0 - alpha) * v[i];
        }
    }
    Ok(GoogleMatrix { matrix: g, alpha, v: v.clone() })
}

/// Convenience: the Google matrix of a graph with uniform personalization.
pub fn google_matrix_of(g: &DirectedGraph, alpha: f64) -> Result<GoogleMatrix, RankError> {
    google_matrix(&patch_dangling(&transition_matrix(g)), alpha, &uniform(g.n()))
}

/// Power iteration `p <- G p` from `p0` (default `e/n`) until `||G p - p||_1 <= tol`.
pub fn pagerank_power(
    g: &GoogleMatrix,
    p0: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<PageRankVector, RankError> {
    if !(tol > 0.0) {
        return Err(RankError::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let n = g.n();
    let mut p = match p0 {
        Some(p0) => {
            if p0.len() != n || p0.iter().any(|&x| x < 0.0) || (p0.sum() - 1.0).abs() > 1e-9 {
                return Err(RankError::InvalidConfig("p0 must be a probability vector of length n".into()));
            }
            p0.clone()
        }
        None => uniform(n),
    };
    let mut residual = f64::INFINITY;
    for iterations in 0..=max_iter {
        let next = &g.matrix * &p;
        residual = (&next - &p).lp_norm(1);
        if residual <= tol {
            let total = p.sum();
            return Ok(PageRankVector { p: p / total, residual, iterations });
        }
        p = next;
    }
    Err(RankError::NoConvergence { iterations: max_iter, residual })
}

/// Default truncation for Monte Carlo walks: `10 * ceil(1 / (1 - alpha))`.
pub fn default_max_len(alpha: f64) -> usize {
    ((1.0 / (1.0 - alpha)).ceil() as usize).saturating_mul(10)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub alpha: f64,
    pub num_walks: usize,
    pub max_len: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl McmcConfig {
    pub fn new(alpha: f64, num_walks: usize, seed: u64) -> Self {
        McmcConfig { alpha, num_walks, max_len: default_max_len(alpha), seed, execution: Execution::default() }
    }
}

const WALKS_PER_CHUNK: usize = 4096;

/// Monte Carlo PageRank by terminal-visit counting.
///
/// Each walk starts at a `v`-distributed node, stops with probability
/// `1 - alpha` before every step, otherwise follows a uniform out-link (uniform
/// random node from a dangling node). Walk `i` draws from its own stream seeded
/// by `(seed, i)`, so the estimate does not depend on the worker count.
pub fn pagerank_mcmc(g: &DirectedGraph, v: &DVector<f64>, cfg: &McmcConfig) -> Result<PageRankVector, RankError> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(RankError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if cfg.num_walks < 1 {
        return Err(RankError::InvalidConfig("num_walks must be at least 1".into()));
    }
    let n = g.n();
    check_personalization(v, n)?;
    let adj = g.adjacency();
    let start = WeightedIndex::new(v.iter().copied())
        .map_err(|e| RankError::InvalidPersonalization(e.to_string()))?;
    let chunks = cfg.num_walks.div_ceil(WALKS_PER_CHUNK);
    let partial = cfg.execution.map_indexed(chunks, |chunk| {
        let mut counts = vec![0u64; n];
        let lo = chunk * WALKS_PER_CHUNK;
        let hi = (lo + WALKS_PER_CHUNK).min(cfg.num_walks);
        for walk in lo..hi {
            let mut rng = seed::rng(seed::derive(cfg.seed, walk as u64));
            let mut node = start.sample(&mut rng);
            for _ in 0..cfg.max_len {
                if rng.random::<f64>() >= cfg.alpha {
                    break;
                }
                let out = &adj[node];
                node = if out.is_empty() { rng.random_range(0..n) } else { out[rng.random_range(0..out.len())] };
            }
            counts[node] += 1;
        }
        counts
    });
    let mut totals = vec![0u64; n];
    for counts in partial {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let p = DVector::from_iterator(n, totals.iter().map(|&c| c as f64 / cfg.num_walks as f64));
    Ok(PageRankVector { p, residual: 0.0, iterations: cfg.num_walks })
}

/// Modulus of the second-largest eigenvalue of `G`.
pub fn subdominant_eigenvalue(g: &GoogleMatrix) -> Result<f64, RankError> {
    let n = g.n();
    if n > DENSE_SPECTRUM_CAP {
        return Err(RankError::SizeCap { n, cap: DENSE_SPECTRUM_CAP });
    }
    if n < 2 {
        return Ok(0.0);
    }
    // nalgebra's default asks for machine-epsilon deflation with no iteration cap,
    // which can spin forever on defective spectra; relax slightly and bound it.
    let schur = Schur::try_new(g.matrix.clone(), 8.0 * f64::EPSILON, 1000 * n).ok_or(RankError::EigenFailure(n))?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli[1])
}

/// PageRank of the edge-reversed graph.
pub fn inverse_pagerank(g: &DirectedGraph, alpha: f64, v: &DVector<f64>, tol: f64) -> Result<PageRankVector, RankError> {
    let reversed = reverse_graph(g);
    let gm = google_matrix(&patch_dangling(&transition_matrix(&reversed)), alpha, v)?;
    pagerank_power(&gm, None, tol, default_max_iter(alpha, tol))
}

/// Iteration budget: ten times the `ln(tol) / ln(alpha)` rate estimate.
pub fn default_max_iter(alpha: f64, tol: f64) -> usize {
    if alpha <= 0.0 {
        return 10;
    }
    ((tol.ln() / alpha.ln()).abs() * 10.0).ceil() as usize + 10
}

/// CSV with header `node,p`, 17 significant digits.
pub fn pagerank_csv(p: &DVector<f64>) -> String {
    let mut out = String::from("node,p\n");
    for (i, x) in p.iter().enumerate() {
        let _ = writeln!(out, "{i},{x:.16e}");
    }
    out
}

pub fn write_pagerank_csv(p: &DVector<f64>, path: &Path) -> io::Result<()> {
    fs::write(path, pagerank_csv(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::webgraph::{complete_graph, generate, GraphModel, GraphModelConfig};

    fn two_cycle() -> DirectedGraph {
        DirectedGraph::from_edges(2, [(0, 1), (1, 0)], false).unwrap()
    }

    fn dangling() -> DirectedGraph {
        DirectedGraph::from_edges(2, [(0, 1)], false).unwrap()
    }

    /// Stationary vector of a 2x2 column-stochastic matrix, solved in closed form:
    /// `p0 * G10 = p1 * G01`.
    fn two_by_two_oracle(g: &DMatrix<f64>) -> (f64, f64) {
        let (a, b) = (g[(1, 0)], g[(0, 1)]);
        (b / (a + b), a / (a + b))
    }

    #[test]
    fn transition_examples() {
        assert_eq!(transition_matrix(&two_cycle()).0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(transition_matrix(&dangling()).0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let p = transition_matrix(&complete_graph(3, false)).0;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p[(i, j)], if i == j { 0.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn patch_examples() {
        let p2 = patch_dangling(&transition_matrix(&dangling()));
        assert_eq!(p2.0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.5]));
        let again = patch_dangling(&TransitionMatrix(p2.0.clone()));
        assert_eq!(again, p2);
        let empty = patch_dangling(&transition_matrix(&DirectedGraph::empty(3, false)));
        assert!(empty.0.iter().all(|&x| x == 1.0 / 3.0));
    }

    #[test]
    fn google_examples() {
        let g = google_matrix_of(&two_cycle(), 0.85).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.075, 0.925, 0.925, 0.075]);
        assert!((g.matrix - expect).abs().max() < 1e-15);
        let g = google_matrix_of(&dangling(), 0.85).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.075, 0.5, 0.925, 0.5]);
        assert!((&g.matrix - expect).abs().max() < 1e-15);
        for col in g.matrix.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
        let v = DVector::from_vec(vec![0.2, 0.8]);
        let g0 = google_matrix(&patch_dangling(&transition_matrix(&dangling())), 0.0, &v).unwrap();
        assert_eq!(g0.matrix, DMatrix::from_row_slice(2, 2, &[0.2, 0.2, 0.8, 0.8]));
    }

    #[test]
    fn google_rejects_bad_parameters() {
        let p2 = patch_dangling(&transition_matrix(&dangling()));
        assert_eq!(google_matrix(&p2, 1.0, &uniform(2)), Err(RankError::InvalidAlpha(1.0)));
        assert!(matches!(
            google_matrix(&p2, 0.85, &DVector::from_vec(vec![0.0, 1.0])),
            Err(RankError::InvalidPersonalization(_))
        ));
        assert!(matches!(
            google_matrix(&p2, 0.85, &DVector::from_vec(vec![0.5, 0.6])),
            Err(RankError::InvalidPersonalization(_))
        ));
    }

    #[test]
    fn power_examples() {
        let g = google_matrix_of(&two_cycle(), 0.85).unwrap();
        let p = pagerank_power(&g, None, 1e-12, 1000).unwrap();
        assert!((p.p[0] - 0.5).abs() < 1e-12);

        let g = google_matrix_of(&dangling(), 0.85).unwrap();
        let (o0, o1) = two_by_two_oracle(&g.matrix);
        let p = pagerank_power(&g, None, 1e-13, 1000).unwrap();
        assert!((p.p[0] - o0).abs() < 1e-12 && (p.p[1] - o1).abs() < 1e-12);
        assert!((p.p[0] - 0.3509).abs() < 1e-4 && (p.p[1] - 0.6491).abs() < 1e-4);
        assert!(p.residual <= 1e-13);
    }

    #[test]
    fn iteration_count_tracks_alpha_rate() {
        let graph = generate(&GraphModelConfig::new(GraphModel::Mixed(crate::webgraph::BaseModel::PreferentialAttachment), 64).with_seed(4)).unwrap();
        let g = google_matrix_of(&graph, 0.85).unwrap();
        let p = pagerank_power(&g, None, 1e-8, 10_000).unwrap();
        // The error contracts at least as fast as alpha^k, and exactly at the subdominant rate.
        let bound = (1e-8f64).ln() / 0.85f64.ln();
        assert!((p.iterations as f64) < bound + 5.0, "{}", p.iterations);
        let lambda2 = subdominant_eigenvalue(&g).unwrap();
        assert!(lambda2 <= 0.85 + 1e-9);
        let predicted = (1e-8f64).ln() / lambda2.ln();
        assert!((p.iterations as f64) < 2.0 * predicted + 5.0 && (p.iterations as f64) > predicted / 3.0, "{} vs {predicted}", p.iterations);
    }

    #[test]
    fn power_reports_no_convergence() {
        let g = google_matrix_of(&dangling(), 0.85).unwrap();
        let err = pagerank_power(&g, Some(&DVector::from_vec(vec![1.0, 0.0])), 1e-14, 2).unwrap_err();
        assert!(matches!(err, RankError::NoConvergence { iterations: 2, .. }));
    }

    #[test]
    fn distinct_starts_converge_to_same_fixed_point() {
        let graph = generate(&GraphModelConfig::new(GraphModel::Copying, 40).with_seed(8)).unwrap();
        let g = google_matrix_of(&graph, 0.85).unwrap();
        let mut e0 = DVector::zeros(40);
        e0[0] = 1.0;
        let a = pagerank_power(&g, None, 1e-11, 10_000).unwrap();
        let b = pagerank_power(&g, Some(&e0), 1e-11, 10_000).unwrap();
        assert!((a.p - b.p).lp_norm(1) < 1e-10);
    }

    #[test]
    fn stochasticity_is_conserved() {
        let graph = generate(&GraphModelConfig::new(GraphModel::PreferentialAttachment, 30).with_seed(1)).unwrap();
        let g = google_matrix_of(&graph, 0.85).unwrap();
        let x = DVector::from_fn(30, |i, _| (i % 7) as f64 + 0.5);
        assert!(((&g.matrix * &x).lp_norm(1) - x.lp_norm(1)).abs() < 1e-12);
    }

    #[test]
    fn mcmc_small_alpha_returns_personalization() {
        let v = DVector::from_vec(vec![0.25, 0.75]);
        let cfg = McmcConfig::new(1e-12, 200_000, 3);
        let p = pagerank_mcmc(&dangling(), &v, &cfg).unwrap();
        assert!((p.p - v).lp_norm(1) < 0.01);
    }

    #[test]
    fn mcmc_matches_power_method() {
        let g = google_matrix_of(&dangling(), 0.85).unwrap();
        let exact = pagerank_power(&g, None, 1e-12, 1000).unwrap();
        let cfg = McmcConfig::new(0.85, 1_000_000, 17);
        let approx = pagerank_mcmc(&dangling(), &uniform(2), &cfg).unwrap();
        assert!((approx.p - exact.p).lp_norm(1) < 0.01);
    }

    #[test]
    fn mcmc_is_independent_of_execution_mode() {
        let graph = generate(&GraphModelConfig::new(GraphModel::PreferentialAttachment, 50).with_seed(2)).unwrap();
        let mut cfg = McmcConfig::new(0.85, 20_000, 5);
        let a = pagerank_mcmc(&graph, &uniform(50), &cfg).unwrap();
        cfg.execution = Execution::Sequential;
        let b = pagerank_mcmc(&graph, &uniform(50), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mcmc_error_shrinks_like_inverse_sqrt() {
        let graph = generate(&GraphModelConfig::new(GraphModel::Mixed(crate::webgraph::BaseModel::PreferentialAttachment), 32).with_seed(6)).unwrap();
        let exact = pagerank_power(&google_matrix_of(&graph, 0.85).unwrap(), None, 1e-12, 10_000).unwrap().p;
        let median_err = |walks: usize| {
            let mut errs: Vec<f64> = (0..20)
                .map(|s| {
                    let est = pagerank_mcmc(&graph, &uniform(32), &McmcConfig::new(0.85, walks, 100 + s)).unwrap();
                    (est.p - &exact).lp_norm(1)
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            (errs[9] + errs[10]) / 2.0
        };
        let e = [median_err(1_000), median_err(10_000), median_err(100_000)];
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((2.0..5.0).contains(&ratio), "ratio {ratio} not near sqrt(10): {e:?}");
        }
    }

    #[test]
    fn mcmc_rejects_bad_config() {
        assert!(pagerank_mcmc(&dangling(), &uniform(2), &McmcConfig::new(1.0, 10, 0)).is_err());
        assert!(pagerank_mcmc(&dangling(), &uniform(2), &McmcConfig::new(0.5, 0, 0)).is_err());
    }

    #[test]
    fn subdominant_examples() {
        let v = uniform(2);
        let g0 = google_matrix(&patch_dangling(&transition_matrix(&two_cycle())), 0.0, &v).unwrap();
        assert!(subdominant_eigenvalue(&g0).unwrap() < 1e-12);
        // Characteristic polynomial of [[a, b], [b, a]]: roots a + b = 1 and a - b.
        let g = google_matrix_of(&two_cycle(), 0.85).unwrap();
        let oracle = (g.matrix[(0, 0)] - g.matrix[(0, 1)]).abs();
        assert!((oracle - 0.85).abs() < 1e-12);
        assert!((subdominant_eigenvalue(&g).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn inverse_pagerank_examples() {
        let p = inverse_pagerank(&two_cycle(), 0.85, &uniform(2), 1e-12).unwrap();
        assert!((p.p[0] - 0.5).abs() < 1e-12);
        let p = inverse_pagerank(&dangling(), 0.85, &uniform(2), 1e-12).unwrap();
        let forward = pagerank_power(&google_matrix_of(&dangling(), 0.85).unwrap(), None, 1e-12, 1000).unwrap();
        assert!((p.p[0] - forward.p[1]).abs() < 1e-10 && (p.p[1] - forward.p[0]).abs() < 1e-10);
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let csv = pagerank_csv(&DVector::from_vec(vec![0.5, 0.5]));
        assert_eq!(csv, "node,p\n0,5.0000000000000000e-1\n1,5.0000000000000000e-1\n");
    }
}
