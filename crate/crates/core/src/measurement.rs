//! Measurements on the quantum PageRank state `|pi> = p / ||p||_2`.
//!
//! Measuring which site carries the single excitation returns site `i` with
//! probability `pi_i = p_i^2 / ||p||_2^2`. This module samples those outcomes,
//! budgets shots with the two-sided Hoeffding bound, ranks the top sites, reports
//! the quantum/classical cost exponents, and emulates the SWAP test between two
//! states.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::distr::{weighted::WeightedIndex, Bernoulli, Distribution};
use thiserror::Error;

use crate::adiabatic::QuantumState;
use crate::googlerank::PageRankVector;
use crate::par::Execution;
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("rank exponents need n >= 2, got {0}")]
    DegenerateScale(usize),
    #[error("site {0} has zero probability")]
    ZeroProbability(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPageRankState {
    /// `p / ||p||_2`, nonnegative.
    pub amplitudes: Vec<f64>,
    /// `amplitudes^2`.
    pub probabilities: Vec<f64>,
}

impl QuantumPageRankState {
    pub fn from_vector(p: &DVector<f64>) -> Self {
        let norm = p.norm();
        let amplitudes: Vec<f64> = p.iter().map(|x| x.abs() / norm).collect();
        let probabilities = amplitudes.iter().map(|a| a * a).collect();
        QuantumPageRankState { amplitudes, probabilities }
    }

    pub fn n(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn to_state(&self) -> QuantumState {
        QuantumState::from_real(&DVector::from_column_slice(&self.amplitudes))
    }
}

pub fn quantum_state_from_pagerank(p: &PageRankVector) -> QuantumPageRankState {
    QuantumPageRankState::from_vector(&p.p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub shots: u64,
    pub counts: Vec<u64>,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn empirical(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }
}

const SHOTS_PER_CHUNK: u64 = 1 << 16;

/// `shots` i.i.d. site measurements. Chunk `c` of the shots draws from its own
/// stream `(seed, c)`, so the record does not depend on the worker count.
pub fn sample_sites(state: &QuantumPageRankState, shots: u64, seed: u64) -> Result<MeasurementRecord, MeasureError> {
    if shots < 1 {
        return Err(MeasureError::InvalidParam("shots must be at least 1".into()));
    }
    let dist = WeightedIndex::new(state.probabilities.iter().copied())
        .map_err(|e| MeasureError::InvalidParam(e.to_string()))?;
    let n = state.n();
    let chunks = shots.div_ceil(SHOTS_PER_CHUNK) as usize;
    let partial = Execution::default().map_indexed(chunks, |c| {
        let mut rng = seed::rng(seed::derive(seed, c as u64));
        let lo = c as u64 * SHOTS_PER_CHUNK;
        let take = (shots - lo).min(SHOTS_PER_CHUNK);
        let mut counts = vec![0u64; n];
        for _ in 0..take {
            counts[dist.sample(&mut rng)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; n];
    for part in partial {
        for (t, c) in counts.iter_mut().zip(part) {
            *t += c;
        }
    }
    Ok(MeasurementRecord { shots, counts, seed })
}

/// `M = ceil(ln(2 / (1 - confidence)) / (2 e^2))`.
pub fn hoeffding_shots(e: f64, confidence: f64) -> Result<u64, MeasureError> {
    if !(e > 0.0 && e < 1.0) || !(confidence > 0.0 && confidence < 1.0) {
        return Err(MeasureError::InvalidParam(format!(
            "need 0 < e < 1 and 0 < confidence < 1, got e = {e}, confidence = {confidence}"
        )));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * e * e)).ceil() as u64)
}

/// `ceil(ln n)`, at least 1.
pub fn default_top_k(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).clamp(1, n.max(1))
}

/// Sites by descending weight; ties go to the lower index.
pub fn rank_sites(weights: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn estimate_top_k(record: &MeasurementRecord, k: usize) -> Result<Vec<usize>, MeasureError> {
    if k > record.counts.len() {
        return Err(MeasureError::InvalidParam(format!("k = {k} exceeds n = {}", record.counts.len())));
    }
    Ok(rank_sites(&record.empirical(), k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteCost {
    pub site: usize,
    /// `pi_i = n^-gamma`.
    pub gamma: f64,
    /// Exponent of `n` in the quantum cost, `2 gamma - 1`.
    pub quantum_exponent: f64,
    /// Exponent of `n` in the best classical cost, `gamma`.
    pub classical_exponent: f64,
    pub speedup: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankCostReport {
    pub n: usize,
    pub sites: Vec<SiteCost>,
}

impl RankCostReport {
    pub fn site(&self, i: usize) -> &SiteCost {
        &self.sites[i]
    }
}

pub fn rank_cost_report(state: &QuantumPageRankState) -> Result<RankCostReport, MeasureError> {
    let n = state.n();
    if n < 2 {
        return Err(MeasureError::DegenerateScale(n));
    }
    let ln_n = (n as f64).ln();
    let sites = state
        .probabilities
        .iter()
        .enumerate()
        .map(|(site, &pi)| {
            if !(pi > 0.0) {
                return Err(MeasureError::ZeroProbability(site));
            }
            let gamma = -pi.ln() / ln_n;
            Ok(SiteCost { site, gamma, quantum_exponent: 2.0 * gamma - 1.0, classical_exponent: gamma, speedup: gamma < 1.0 })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RankCostReport { n, sites })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapTestResult {
    pub shots: u64,
    pub zero_outcomes: u64,
    /// `max(0, 2 zeros / shots - 1)`.
    pub fidelity_estimate: f64,
    /// `|<a|b>|^2`.
    pub exact_fidelity: f64,
}

impl SwapTestResult {
    pub fn to_line(&self) -> String {
        format!(
            "shots={}, zeros={}, f_hat={:.16e}, f_exact={:.16e}",
            self.shots, self.zero_outcomes, self.fidelity_estimate, self.exact_fidelity
        )
    }
}

/// Ancilla outcome 0 occurs with probability `(1 + F) / 2`, `F = |<a|b>|^2`.
pub fn swap_test(a: &QuantumState, b: &QuantumState, shots: u64, seed: u64) -> Result<SwapTestResult, MeasureError> {
    if a.n() != b.n() {
        return Err(MeasureError::DimensionMismatch(a.n(), b.n()));
    }
    if shots < 1 {
        return Err(MeasureError::InvalidParam("shots must be at least 1".into()));
    }
    let overlap = a.overlap(b).map_err(|e| MeasureError::InvalidParam(e.to_string()))?;
    let exact = overlap.norm_sqr().min(1.0);
    let outcome_zero = Bernoulli::new((1.0 + exact) / 2.0).map_err(|e| MeasureError::InvalidParam(e.to_string()))?;
    let mut rng = seed::rng(seed);
    let zeros = (0..shots).filter(|_| outcome_zero.sample(&mut rng)).count() as u64;
    let estimate = (2.0 * zeros as f64 / shots as f64 - 1.0).max(0.0);
    Ok(SwapTestResult { shots, zero_outcomes: zeros, fidelity_estimate: estimate, exact_fidelity: exact })
}

/// CSV `site,count`.
pub fn record_csv(record: &MeasurementRecord) -> String {
    let mut out = String::from("site,count\n");
    for (i, c) in record.counts.iter().enumerate() {
        let _ = writeln!(out, "{i},{c}");
    }
    out
}
