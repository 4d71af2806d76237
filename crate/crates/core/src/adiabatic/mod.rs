//! The adiabatic Hamiltonian family `h(s) = (1 - s) h_i + s h_p`.
//!
//! `h_p = (I - G)^T (I - G)` has the normalized PageRank vector as its unique
//! zero-energy ground state; `h_i` is the same construction for the complete
//! graph, whose ground state is the uniform superposition.
//!
//! Spectral quantities go through one of two routes. The dense route
//! diagonalizes `h(s)` directly. The rank-one route applies whenever `h_i` has
//! the form `a I + c u u^T` (`u = e / sqrt(n)`), which holds for both
//! complete-graph conventions: in the eigenbasis of `h_p`, `h(s)` becomes a
//! diagonal matrix plus a rank-one term, and its low eigenvalues follow from a
//! secular equation after a single decomposition of `h_p`.

mod evolution;
pub mod secular;
mod spin;

pub use evolution::{
    evolution_csv, evolve, evolve_recorded, fidelity_and_error, predicted_runtime, runtime_bound, EvolutionSample, EvolveOptions,
    QuantumState, Schedule, ScheduleKind, EVOLUTION_CAP,
};
pub use spin::{full_space_operator, single_excitation_block, spin_terms, FullSpaceOperator, SpinHamiltonianTerms, FULL_SPACE_CAP};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::googlerank::{google_matrix, patch_dangling, transition_matrix, uniform, GoogleMatrix, RankError};
use crate::par::Execution;
use crate::webgraph::complete_graph;
use secular::RankOneUpdate;

/// Largest dimension handled by the dense eigensolver.
pub const DENSE_CAP: usize = 4096;
const SYMMETRY_TOL: f64 = 1e-12;
const GROUND_ENERGY_TOL: f64 = 1e-10;
const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdiabaticError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("s = {0} outside [0, 1]")]
    SOutOfRange(f64),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("degenerate ground level (gap {0:e})")]
    DegenerateGround(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid adiabatic problem: {0}")]
    InvalidProblem(String),
    #[error("time step too coarse: halving it moved the final fidelity by {0:e}")]
    StepTooCoarse(f64),
    #[error("n = {n} exceeds the cap {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Dense real symmetric operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(DMatrix<f64>);

impl HermitianOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, AdiabaticError> {
        if !matrix.is_square() {
            return Err(AdiabaticError::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > SYMMETRY_TOL {
            return Err(AdiabaticError::NotSymmetric(asym));
        }
        Ok(HermitianOperator(matrix))
    }

    /// `(I - M)^T (I - M)`, symmetrized to remove rounding asymmetry.
    pub fn from_google(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let shifted = DMatrix::identity(n, n) - m;
        let h = shifted.transpose() * &shifted;
        HermitianOperator((&h + h.transpose()) * 0.5)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, AdiabaticError> {
        check_dense(self.n())?;
        let values = self
            .0
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| AdiabaticError::EigenFailure("symmetric eigensolver did not converge".into()))?
            .eigenvalues;
        let mut v: Vec<f64> = values.iter().copied().collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(AdiabaticError::EigenFailure("non-finite eigenvalue".into()));
        }
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    pub(crate) fn eigen(&self) -> Result<SortedEigen, AdiabaticError> {
        check_dense(self.n())?;
        let eig = self
            .0
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| AdiabaticError::EigenFailure("symmetric eigensolver did not converge".into()))?;
        SortedEigen::from_nalgebra(eig)
    }

    pub fn spectral_norm(&self) -> Result<f64, AdiabaticError> {
        let ev = self.eigenvalues()?;
        Ok(ev.first().map_or(0.0, |x| x.abs()).max(ev.last().map_or(0.0, |x| x.abs())))
    }
}

fn check_dense(n: usize) -> Result<(), AdiabaticError> {
    if n > DENSE_CAP {
        return Err(AdiabaticError::SizeCap { n, cap: DENSE_CAP });
    }
    Ok(())
}

/// Eigen-decomposition with eigenvalues ascending and matching vector columns.
#[derive(Debug, Clone)]
pub(crate) struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    fn from_nalgebra(eig: SymmetricEigen<f64, nalgebra::Dyn>) -> Result<Self, AdiabaticError> {
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(AdiabaticError::EigenFailure("non-finite eigenvalue".into()));
        }
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(SortedEigen { values, vectors })
    }
}

/// `h_p = (I - G)^T (I - G)`.
pub fn problem_hamiltonian(g: &GoogleMatrix) -> HermitianOperator {
    HermitianOperator::from_google(&g.matrix)
}

/// Whether the complete graph behind `h_i` carries self-loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompleteGraphConvention {
    /// `G_c = e e^T / n`, so `h_i = I - e e^T / n`.
    #[default]
    WithSelfLoops,
    WithoutSelfLoops,
}

/// `h_i = (I - G_c)^T (I - G_c)` for the complete graph's Google matrix.
pub fn initial_hamiltonian(
    n: usize,
    alpha: f64,
    v: &DVector<f64>,
    convention: CompleteGraphConvention,
) -> Result<HermitianOperator, AdiabaticError> {
    if n < 1 {
        return Err(AdiabaticError::InvalidParam("n must be at least 1".into()));
    }
    let loops = convention == CompleteGraphConvention::WithSelfLoops || n == 1;
    let gc = google_matrix(&patch_dangling(&transition_matrix(&complete_graph(n, loops))), alpha, v)?;
    Ok(HermitianOperator::from_google(&gc.matrix))
}

/// `h_i` with the uniform personalization vector.
pub fn uniform_initial_hamiltonian(n: usize, alpha: f64, convention: CompleteGraphConvention) -> Result<HermitianOperator, AdiabaticError> {
    initial_hamiltonian(n, alpha, &uniform(n), convention)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralRoute {
    /// Rank-one route when `h_i` permits it, dense otherwise.
    #[default]
    Auto,
    Dense,
}

/// `h_i = a I + c u u^T` detected from the matrix entries.
#[derive(Debug, Clone)]
struct RankOneInitial {
    a: f64,
    c: f64,
    /// `(Q^T u)_k^2` in the eigenbasis of `h_p`.
    weights: Vec<f64>,
}

fn detect_identity_plus_uniform(h: &DMatrix<f64>) -> Option<(f64, f64)> {
    let n = h.nrows();
    if n < 2 {
        return None;
    }
    let off = h[(0, 1)];
    let diag = h[(0, 0)];
    let scale = h.abs().max().max(1.0);
    let tol = 1e-13 * scale;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { diag } else { off };
            if (h[(i, j)] - expect).abs() > tol {
                return None;
            }
        }
    }
    Some((diag - off, off * n as f64))
}

#[derive(Debug, Clone)]
pub struct AdiabaticProblem {
    h_i: HermitianOperator,
    h_p: HermitianOperator,
    h_p_eigen: SortedEigen,
    h_i_norm: f64,
    rank_one: Option<RankOneInitial>,
    route: SpectralRoute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub s: f64,
    pub gap: f64,
    /// The two lowest levels coincide to within 1e-12.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScan {
    pub grid: Vec<(f64, f64)>,
    pub delta_min: f64,
    pub s_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings { grid_points: 64, refine_tol: 1e-6 }
    }
}

impl AdiabaticProblem {
    pub fn new(h_i: HermitianOperator, h_p: HermitianOperator) -> Result<Self, AdiabaticError> {
        if h_i.n() != h_p.n() {
            return Err(AdiabaticError::DimensionMismatch(h_i.n(), h_p.n()));
        }
        let h_p_eigen = h_p.eigen()?;
        let p_ground = h_p_eigen.values[0];
        if p_ground.abs() > GROUND_ENERGY_TOL {
            return Err(AdiabaticError::InvalidProblem(format!("problem ground energy {p_ground:e} is not 0")));
        }
        let rank_one = detect_identity_plus_uniform(h_i.matrix()).map(|(a, c)| {
            let n = h_i.n();
            let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
            let w = h_p_eigen.vectors.transpose() * u;
            RankOneInitial { a, c, weights: w.iter().map(|x| x * x).collect() }
        });
        let i_values = match &rank_one {
            // Spectrum of a I + c u u^T: {a + c} and a (n - 1 times).
            Some(r) => {
                let mut v = vec![r.a + r.c, r.a];
                v.sort_by(f64::total_cmp);
                v
            }
            None => h_i.eigenvalues()?,
        };
        if i_values[0].abs() > GROUND_ENERGY_TOL {
            return Err(AdiabaticError::InvalidProblem(format!("initial ground energy {:e} is not 0", i_values[0])));
        }
        let h_i_norm = i_values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(AdiabaticProblem { h_i, h_p, h_p_eigen, h_i_norm, rank_one, route: SpectralRoute::Auto })
    }

    /// The standard problem for a Google matrix: loopful complete graph, uniform `v`.
    pub fn from_google(g: &GoogleMatrix) -> Result<Self, AdiabaticError> {
        Self::from_google_with(g, CompleteGraphConvention::WithSelfLoops)
    }

    pub fn from_google_with(g: &GoogleMatrix, convention: CompleteGraphConvention) -> Result<Self, AdiabaticError> {
        let h_i = uniform_initial_hamiltonian(g.n(), g.alpha, convention)?;
        Self::new(h_i, problem_hamiltonian(g))
    }

    pub fn with_route(mut self, route: SpectralRoute) -> Self {
        self.route = route;
        self
    }

    pub fn n(&self) -> usize {
        self.h_p.n()
    }

    pub fn h_i(&self) -> &HermitianOperator {
        &self.h_i
    }

    pub fn h_p(&self) -> &HermitianOperator {
        &self.h_p
    }

    fn rank_one(&self) -> Option<&RankOneInitial> {
        match self.route {
            SpectralRoute::Auto => self.rank_one.as_ref(),
            SpectralRoute::Dense => None,
        }
    }

    pub fn interpolate(&self, s: f64) -> Result<HermitianOperator, AdiabaticError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(AdiabaticError::SOutOfRange(s));
        }
        Ok(HermitianOperator(self.h_i.matrix() * (1.0 - s) + self.h_p.matrix() * s))
    }

    /// Largest of `||h_i||` and `||h_p||`; sets the evolution time step.
    pub fn endpoint_norm(&self) -> f64 {
        let p_norm = self.h_p_eigen.values.last().copied().unwrap_or(0.0).abs();
        self.h_i_norm.max(p_norm)
    }

    /// `||h_p - h_i||`, which equals `max_s ||dh/ds||` because `dh/ds` is constant.
    pub fn lambda_norm(&self) -> Result<f64, AdiabaticError> {
        match self.rank_one() {
            Some(r) => {
                let d: Vec<f64> = self.h_p_eigen.values.iter().map(|l| l - r.a).collect();
                let update = RankOneUpdate::new(&d, &r.weights, -r.c);
                let lo = update.smallest(1)[0];
                Ok(lo.abs().max(update.largest().abs()))
            }
            None => HermitianOperator(self.h_p.matrix() - self.h_i.matrix()).spectral_norm(),
        }
    }

    /// Two lowest eigenvalues of `h(s)`.
    pub fn low_levels(&self, s: f64) -> Result<(f64, f64), AdiabaticError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(AdiabaticError::SOutOfRange(s));
        }
        if self.n() < 2 {
            return Err(AdiabaticError::InvalidParam("a gap needs at least two levels".into()));
        }
        let levels = match self.rank_one() {
            Some(r) => {
                let d: Vec<f64> = self.h_p_eigen.values.iter().map(|l| (1.0 - s) * r.a + s * l).collect();
                RankOneUpdate::new(&d, &r.weights, (1.0 - s) * r.c).smallest(2)
            }
            None => self.interpolate(s)?.eigenvalues()?,
        };
        if levels.len() < 2 || levels.iter().any(|x| !x.is_finite()) {
            return Err(AdiabaticError::EigenFailure(format!("could not resolve two levels at s = {s}")));
        }
        Ok((levels[0], levels[1]))
    }

    pub fn gap_at(&self, s: f64) -> Result<GapSample, AdiabaticError> {
        let (e0, e1) = self.low_levels(s)?;
        let gap = (e1 - e0).max(0.0);
        Ok(GapSample { s, gap, degenerate: gap < DEGENERATE_GAP })
    }

    pub fn gap_scan(&self, settings: &ScanSettings) -> Result<SpectralScan, AdiabaticError> {
        self.gap_scan_with(settings, Execution::Sequential)
    }

    /// Uniform grid, then golden-section refinement of the bracket around the
    /// grid minimum. Grid points may be evaluated in parallel; they are
    /// assembled by index.
    pub fn gap_scan_with(&self, settings: &ScanSettings, execution: Execution) -> Result<SpectralScan, AdiabaticError> {
        let points = settings.grid_points;
        if points < 8 {
            return Err(AdiabaticError::InvalidParam(format!("grid_points must be at least 8, got {points}")));
        }
        if !(settings.refine_tol > 0.0) {
            return Err(AdiabaticError::InvalidParam("refine_tol must be positive".into()));
        }
        let step = 1.0 / (points - 1) as f64;
        let grid = execution
            .map_indexed(points, |k| {
                let s = if k == points - 1 { 1.0 } else { k as f64 * step };
                self.gap_at(s).map(|g| (s, g.gap))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let (k_min, &(s_grid, gap_grid)) = grid
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .expect("grid is non-empty");
        let lo = grid[k_min.saturating_sub(1)].0;
        let hi = grid[(k_min + 1).min(points - 1)].0;
        let (s_ref, gap_ref) = self.golden_section(lo, hi, settings.refine_tol)?;
        let (delta_min, s_star) = if gap_ref < gap_grid { (gap_ref, s_ref) } else { (gap_grid, s_grid) };
        Ok(SpectralScan { grid, delta_min, s_star })
    }

    fn golden_section(&self, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), AdiabaticError> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let gap = |s: f64| self.gap_at(s).map(|g| g.gap);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (gap(c)?, gap(d)?);
        while (b - a) > 2.0 * tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = gap(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = gap(d)?;
            }
        }
        Ok(if fc <= fd { (c, fc) } else { (d, fd) })
    }

    /// Ground state of `h_p` (the normalized PageRank vector).
    pub fn problem_ground_state(&self) -> Result<QuantumState, AdiabaticError> {
        let values = &self.h_p_eigen.values;
        if values.len() > 1 && values[1] - values[0] <= DEGENERATE_GAP {
            return Err(AdiabaticError::DegenerateGround(values[1] - values[0]));
        }
        Ok(QuantumState::from_real(&sign_fixed(self.h_p_eigen.vectors.column(0).into_owned())))
    }
}

fn sign_fixed(mut v: DVector<f64>) -> DVector<f64> {
    let k = v.iamax();
    if v[k] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Unit eigenvector of the smallest eigenvalue, largest-magnitude entry positive.
pub fn ground_state(h: &HermitianOperator) -> Result<QuantumState, AdiabaticError> {
    let eig = h.eigen()?;
    if eig.values.len() > 1 && eig.values[1] - eig.values[0] <= DEGENERATE_GAP {
        return Err(AdiabaticError::DegenerateGround(eig.values[1] - eig.values[0]));
    }
    Ok(QuantumState::from_real(&sign_fixed(eig.vectors.column(0).into_owned())))
}

/// `s,gap` rows plus a trailing `# delta=<v> s_star=<v>` line.
pub fn scan_csv(scan: &SpectralScan) -> String {
    let mut out = String::from("s,gap\n");
    for (s, gap) in &scan.grid {
        let _ = writeln!(out, "{s:.16e},{gap:.16e}");
    }
    // 15 significant digits: the last ulps of a bisected eigenvalue are noise.
    let _ = writeln!(out, "# delta={:.14e} s_star={:.14e}", scan.delta_min, scan.s_star);
    out
}
