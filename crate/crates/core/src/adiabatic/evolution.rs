//! Schrödinger evolution under `h(s(t))` and the run-time formulas.

use nalgebra::{Complex, DVector};

use super::{ground_state, AdiabaticError, AdiabaticProblem};

/// Largest dimension accepted by [`evolve`].
pub const EVOLUTION_CAP: usize = 256;
const NORM_TOL: f64 = 1e-9;
const STEP_FIDELITY_TOL: f64 = 1e-4;

/// Unit-norm complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(DVector<Complex<f64>>);

impl QuantumState {
    pub fn new(amplitudes: DVector<Complex<f64>>) -> Result<Self, AdiabaticError> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(AdiabaticError::InvalidParam(format!("state norm {norm} is not 1")));
        }
        Ok(QuantumState(amplitudes))
    }

    /// Normalizes a real vector into a state.
    pub fn from_real(v: &DVector<f64>) -> Self {
        let norm = v.norm();
        QuantumState(v.map(|x| Complex::new(x / norm, 0.0)))
    }

    pub fn uniform(n: usize) -> Self {
        QuantumState(DVector::from_element(n, Complex::new(1.0 / (n as f64).sqrt(), 0.0)))
    }

    pub fn amplitudes(&self) -> &DVector<Complex<f64>> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex<f64>, AdiabaticError> {
        if self.n() != other.n() {
            return Err(AdiabaticError::DimensionMismatch(self.n(), other.n()));
        }
        Ok(self.0.dotc(&other.0))
    }

    /// Born-rule probabilities `|amplitude|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `f = |<psi|target>|` and `eps = sqrt(1 - f^2)`.
pub fn fidelity_and_error(psi: &QuantumState, target: &QuantumState) -> Result<(f64, f64), AdiabaticError> {
    let f = psi.overlap(target)?.norm().min(1.0 + 1e-12);
    let eps = (1.0 - f * f).max(0.0).sqrt();
    Ok((f, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    /// Polynomial ramp whose first `a` derivatives vanish at both ends.
    Smooth(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub total_time: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, total_time: f64) -> Result<Self, AdiabaticError> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(AdiabaticError::InvalidParam(format!("total time must be positive, got {total_time}")));
        }
        if kind == ScheduleKind::Smooth(0) {
            return Err(AdiabaticError::InvalidParam("smooth schedule needs a >= 1".into()));
        }
        Ok(Schedule { kind, total_time })
    }

    pub fn linear(total_time: f64) -> Result<Self, AdiabaticError> {
        Self::new(ScheduleKind::Linear, total_time)
    }

    /// Ramp profile on `u = t / T` in `[0, 1]`.
    pub fn profile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.kind {
            ScheduleKind::Linear => u,
            ScheduleKind::Smooth(a) => {
                // Regularized incomplete beta I_u(a + 1, a + 1): its derivative is
                // proportional to u^a (1 - u)^a.
                let order = 2 * a as i32 + 1;
                let mut binom = 1.0f64;
                let mut total = 0.0;
                for j in 0..=order {
                    if j > a as i32 {
                        total += binom * u.powi(j) * (1.0 - u).powi(order - j);
                    }
                    binom = binom * (order - j) as f64 / (j + 1) as f64;
                }
                total.clamp(0.0, 1.0)
            }
        }
    }

    pub fn s_at(&self, t: f64) -> f64 {
        self.profile(t / self.total_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Steps per unit of `1 / max(||h_i||, ||h_p||)`.
    pub steps_per_unit: f64,
    /// Re-run at half the step and fail if the final fidelity moves by more than 1e-4.
    pub verify_step: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { steps_per_unit: 10.0, verify_step: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSample {
    pub t: f64,
    pub s: f64,
    pub fidelity_to_instantaneous_ground: f64,
}

/// Midpoint exponential stepping from the uniform state:
/// `psi <- exp(-i h(s(t + dt/2)) dt) psi` with each exponential taken through a
/// symmetric eigendecomposition. The amplitudes are carried as separate real and
/// imaginary parts because the eigenvectors are real.
fn propagate(
    prob: &AdiabaticProblem,
    schedule: &Schedule,
    steps_per_unit: f64,
    mut observe: impl FnMut(usize, usize, f64, f64, &QuantumStateView<'_>) -> Result<(), AdiabaticError>,
) -> Result<QuantumState, AdiabaticError> {
    let n = prob.n();
    if n > EVOLUTION_CAP {
        return Err(AdiabaticError::SizeCap { n, cap: EVOLUTION_CAP });
    }
    if !(steps_per_unit > 0.0) {
        return Err(AdiabaticError::InvalidParam("steps_per_unit must be positive".into()));
    }
    let scale = prob.endpoint_norm().max(f64::MIN_POSITIVE);
    let dt_max = 1.0 / (steps_per_unit * scale);
    let total = schedule.total_time;
    let steps = ((total / dt_max).ceil() as usize).max(1);
    let dt = total / steps as f64;

    let mut re = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut im = DVector::zeros(n);
    observe(0, steps, 0.0, 0.0, &QuantumStateView { re: &re, im: &im })?;
    let (h_i, h_p) = (prob.h_i().matrix(), prob.h_p().matrix());
    for k in 0..steps {
        let s = schedule.s_at((k as f64 + 0.5) * dt);
        let h = h_i * (1.0 - s) + h_p * s;
        let eig = h
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| AdiabaticError::EigenFailure(format!("no convergence at s = {s}")))?;
        let v = &eig.eigenvectors;
        let mut a = v.tr_mul(&re);
        let mut b = v.tr_mul(&im);
        for j in 0..n {
            let (sin, cos) = (-eig.eigenvalues[j] * dt).sin_cos();
            let (x, y) = (a[j], b[j]);
            a[j] = x * cos - y * sin;
            b[j] = x * sin + y * cos;
        }
        re = v * a;
        im = v * b;
        let t = (k + 1) as f64 * dt;
        observe(k + 1, steps, t, schedule.s_at(t), &QuantumStateView { re: &re, im: &im })?;
    }
    let amplitudes = DVector::from_fn(n, |i, _| Complex::new(re[i], im[i]));
    let norm = amplitudes.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(AdiabaticError::EigenFailure(format!("evolution lost unitarity: norm {norm}")));
    }
    Ok(QuantumState(amplitudes))
}

struct QuantumStateView<'a> {
    re: &'a DVector<f64>,
    im: &'a DVector<f64>,
}

impl QuantumStateView<'_> {
    fn to_state(&self) -> QuantumState {
        QuantumState(DVector::from_fn(self.re.len(), |i, _| Complex::new(self.re[i], self.im[i])))
    }
}

pub fn evolve(prob: &AdiabaticProblem, schedule: &Schedule, opts: &EvolveOptions) -> Result<QuantumState, AdiabaticError> {
    let state = propagate(prob, schedule, opts.steps_per_unit, |_, _, _, _, _| Ok(()))?;
    if opts.verify_step {
        check_step(prob, schedule, opts, &state)?;
    }
    Ok(state)
}

fn check_step(
    prob: &AdiabaticProblem,
    schedule: &Schedule,
    opts: &EvolveOptions,
    state: &QuantumState,
) -> Result<(), AdiabaticError> {
    let target = prob.problem_ground_state()?;
    let finer = propagate(prob, schedule, 2.0 * opts.steps_per_unit, |_, _, _, _, _| Ok(()))?;
    let (f_coarse, _) = fidelity_and_error(state, &target)?;
    let (f_fine, _) = fidelity_and_error(&finer, &target)?;
    let diff = (f_coarse - f_fine).abs();
    if diff > STEP_FIDELITY_TOL {
        return Err(AdiabaticError::StepTooCoarse(diff));
    }
    Ok(())
}

/// Like [`evolve`], also sampling the fidelity to the instantaneous ground
/// state of `h(s(t))` every `stride` steps and at the final time.
pub fn evolve_recorded(
    prob: &AdiabaticProblem,
    schedule: &Schedule,
    opts: &EvolveOptions,
    stride: usize,
) -> Result<(QuantumState, Vec<EvolutionSample>), AdiabaticError> {
    let stride = stride.max(1);
    let mut samples = Vec::new();
    let state = propagate(prob, schedule, opts.steps_per_unit, |k, steps, t, s, view| {
        if k % stride == 0 || k == steps {
            let ground = ground_state(&prob.interpolate(s)?)?;
            let (f, _) = fidelity_and_error(&view.to_state(), &ground)?;
            samples.push(EvolutionSample { t, s, fidelity_to_instantaneous_ground: f });
        }
        Ok(())
    })?;
    if opts.verify_step {
        check_step(prob, schedule, opts, &state)?;
    }
    Ok((state, samples))
}

pub fn evolution_csv(samples: &[EvolutionSample]) -> String {
    let mut out = String::from("t,s,fidelity_to_instantaneous_ground\n");
    for smp in samples {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", smp.t, smp.s, smp.fidelity_to_instantaneous_ground));
    }
    out
}

/// `T = a * Lambda^(b - 1) / (eta * delta^b)`.
pub fn runtime_bound(lambda: f64, delta: f64, eta: f64, a: u32, b: u32) -> Result<f64, AdiabaticError> {
    if !(lambda > 0.0 && delta > 0.0 && eta > 0.0) || a < 1 || b < 1 {
        return Err(AdiabaticError::InvalidParam(format!(
            "runtime bound needs positive Lambda, delta, eta and a, b >= 1 (got {lambda}, {delta}, {eta}, {a}, {b})"
        )));
    }
    Ok(a as f64 * lambda.powi(b as i32 - 1) / (eta * delta.powi(b as i32)))
}

/// `T = eps^-2 (ln ln n)^(b - 1) (ln n)^b`, natural logarithms.
pub fn predicted_runtime(n: usize, eps: f64, b: u32) -> Result<f64, AdiabaticError> {
    if n < 3 || !(eps > 0.0 && eps < 1.0) || b < 1 {
        return Err(AdiabaticError::InvalidParam(format!(
            "predicted runtime needs n >= 3, 0 < eps < 1, b >= 1 (got {n}, {eps}, {b})"
        )));
    }
    let ln_n = (n as f64).ln();
    Ok(eps.powi(-2) * ln_n.ln().powi(b as i32 - 1) * ln_n.powi(b as i32))
}
