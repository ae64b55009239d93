//! State estimation from measured frequencies.
//!
//! Linear inversion applies `𝒫⁻¹` to `m − 1/4` and may return a matrix with
//! negative eigenvalues. The maximum-likelihood estimator instead searches
//! over `ρ = T†T / tr(T†T)` with `T` lower triangular (complex, real
//! diagonal), which is PSD and unit trace by construction.

use std::collections::VecDeque;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Result, TomoError};
use crate::measure::{probabilities, simulate_counts_rep, MeasurementPlan, ShotRecord};
use crate::par;
use crate::qmath::{
    c, hermitian_eigen, hermitize, hermiticity_error, matrix_inner, pauli_assemble, ComplexMatrix4,
    DensityMatrix, PauliCoefficients, ALG_TOL, C64, PSD_TOL,
};
use crate::quorum::{Mat15, PMatrix, Projector, Quorum, Vec15, DET_FLOOR};

/// `q_j` is kept inside `[Q_CLAMP, 1 − Q_CLAMP]` in the likelihood.
pub const Q_CLAMP: f64 = 1e-12;

/// Largest `|C_kl| · N · det(𝒫)²` possible for pure-state quorums:
/// `15 (3/4)^14 / 4`.
pub fn covariance_bound_constant() -> f64 {
    15.0 * 0.75f64.powi(14) / 4.0
}

/// Bound on every covariance entry for equal shot counts `n`.
pub fn covariance_bound(n: u64, det: f64) -> f64 {
    covariance_bound_constant() / (n as f64 * det * det)
}

fn check_pmatrix(pm: &PMatrix) -> Result<()> {
    if !(pm.det.abs() >= DET_FLOOR) {
        return Err(TomoError::DegenerateQuorum(pm.det.abs()));
    }
    Ok(())
}

/// `ρ̃_k = Σ_j 𝒫⁻¹_kj (m_j − 1/4)` for `k = 1..15`, with `ρ̃₀ = 1/2`.
pub fn linear_coefficients(freqs: &[f64], pm: &PMatrix) -> Result<PauliCoefficients> {
    check_pmatrix(pm)?;
    if freqs.len() != 15 {
        return Err(TomoError::LengthMismatch { expected: 15, got: freqs.len() });
    }
    let centred = Vec15::from_fn(|j, _| freqs[j] - 0.25);
    let traceless = pm.inverse * centred;
    let mut out = PauliCoefficients::zero();
    out.0[0] = 0.5;
    out.0[1..].copy_from_slice(traceless.as_slice());
    Ok(out)
}

pub fn linear_from_frequencies(freqs: &[f64], pm: &PMatrix) -> Result<ComplexMatrix4> {
    Ok(pauli_assemble(&linear_coefficients(freqs, pm)?))
}

/// Linear-inversion estimate from records ordered like the rows of `pm`.
pub fn linear_reconstruct(records: &[ShotRecord], pm: &PMatrix) -> Result<ComplexMatrix4> {
    let freqs: Vec<f64> = records.iter().map(|r| r.estimate).collect();
    linear_from_frequencies(&freqs, pm)
}

pub fn is_psd(m: &ComplexMatrix4) -> bool {
    hermiticity_error(m) <= ALG_TOL && hermitian_eigen(m).0[0] >= -PSD_TOL
}

/// Closest density matrix obtained by clipping negative eigenvalues and
/// renormalizing the trace.
pub fn nearest_psd(m: &ComplexMatrix4) -> Result<DensityMatrix> {
    let (vals, vecs) = hermitian_eigen(&hermitize(m));
    let clipped = vals.map(|v| v.max(0.0));
    let total: f64 = clipped.sum();
    if !(total > 0.0) {
        return Err(TomoError::NotPsd(vals[3]));
    }
    let d = ComplexMatrix4::from_diagonal(&clipped.map(|v| c(v / total, 0.0)));
    DensityMatrix::new(hermitize(&(vecs * d * vecs.adjoint())))
}

/// `ρ₄` from the two `σ_{1x}`-sensitive degraded projectors:
/// `3[2(p₄+p₆) − 1] / (2(4f² − 1))`.
pub fn degraded_marginal_rho4(p4: f64, p6: f64, f: f64) -> Result<f64> {
    if f.is_nan() || f > 1.0 {
        return Err(TomoError::FidelityOutOfRange(f));
    }
    if f <= 0.5 {
        return Err(TomoError::Unplannable(f));
    }
    Ok(3.0 * (2.0 * (p4 + p6) - 1.0) / (2.0 * (4.0 * f * f - 1.0)))
}

/// Ideal-projector counterpart `[2(p₄+p₆) − 1]/2`.
pub fn marginal_rho4(p4: f64, p6: f64) -> f64 {
    (2.0 * (p4 + p6) - 1.0) / 2.0
}

/// Predicted covariance `𝒫⁻¹ B 𝒫⁻ᵀ` of the linear estimate, with
/// `B_jj = p_j(1 − p_j)/N_j`.
pub fn covariance_predict(
    rho: &DensityMatrix,
    projectors: &[Projector],
    pm: &PMatrix,
    shots: &[u64],
) -> Result<Mat15> {
    check_pmatrix(pm)?;
    if projectors.len() != 15 || shots.len() != 15 {
        return Err(TomoError::LengthMismatch { expected: 15, got: projectors.len().min(shots.len()) });
    }
    let probs = probabilities(rho, projectors)?;
    let b = Mat15::from_diagonal(&Vec15::from_fn(|j, _| probs[j] * (1.0 - probs[j]) / shots[j] as f64));
    Ok(pm.inverse * b * pm.inverse.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, gradient_tolerance: 1e-8 }
    }
}

/// How the maximum-likelihood estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MleMethod {
    /// The clipped linear estimate reproduces every frequency, so each
    /// binomial term is at its individual maximum.
    ExactFit,
    GradientAscent,
}

/// Residual below which a candidate counts as reproducing the frequencies.
pub const EXACT_FIT_TOL: f64 = 1e-10;

/// Sufficient-increase constant of the line search.
const ARMIJO: f64 = 1e-4;
/// The line search compares against the best of this many recent values.
const NONMONOTONE_WINDOW: usize = 10;
const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e12;
/// Iterations between attempts to drop negligible eigenvalues of `ρ(T)`.
const FACE_INTERVAL: usize = 100;
/// Eigenvalues below this are candidates for removal.
const FACE_TOL: f64 = 1e-4;
/// Factor applied to the removal threshold after each escape.
const FACE_TOL_DECREASE: f64 = 1e-2;
const ZERO_EIGENVALUE: f64 = 1e-14;
/// Rows of a factor this small relative to the whole are set to zero.
const ROW_ZERO_TOL: f64 = 1e-9;
/// Largest admissible `λ_max(G) − tr(ρG)` at a reported optimum, where `G`
/// is the likelihood gradient with respect to `ρ` (weights normalized).
pub const GAP_TOL: f64 = 1e-8;
const MAX_ESCAPES: usize = 20;
/// Largest weight given to the escape direction.
const ESCAPE_WEIGHT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub method: MleMethod,
    /// `Σ_j N_j [m_j ln q_j + (1 − m_j) ln(1 − q_j)]`.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// `λ_max(G) − tr(ρG)` with `G` the gradient of the weight-normalized
    /// log-likelihood in `ρ`; bounds how much that objective can still rise.
    pub optimality_gap: f64,
}

/// Log-likelihood of `rho` against frequencies `m` with weights `w`
/// (the shot counts, or 1 in exact-probability mode).
pub fn loglik(rho: &ComplexMatrix4, projectors: &[Projector], freqs: &[f64], weights: &[f64]) -> f64 {
    projectors
        .iter()
        .zip(freqs)
        .zip(weights)
        .map(|((p, &m), &w)| {
            let q = matrix_inner(p.matrix(), rho).re.clamp(Q_CLAMP, 1.0 - Q_CLAMP);
            w * (m * q.ln() + (1.0 - m) * (1.0 - q).ln())
        })
        .sum()
}

fn rho_of(t: &ComplexMatrix4) -> ComplexMatrix4 {
    let a = t.adjoint() * t;
    let s = a.trace().re;
    hermitize(&a.unscale(s))
}

/// Keeps the lower triangle and the real part of the diagonal.
fn project_tangent(g: &mut ComplexMatrix4) {
    for r in 0..4 {
        g[(r, r)].im = 0.0;
        for col in r + 1..4 {
            g[(r, col)] = C64::new(0.0, 0.0);
        }
    }
}

fn real_inner(a: &ComplexMatrix4, b: &ComplexMatrix4) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn frob(m: &ComplexMatrix4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The likelihood in a permuted basis: `T` parametrizes `ρ' = Πᵀ ρ Π`, so
/// the factor's real diagonal can be placed on the largest components.
struct Problem<'a> {
    freqs: &'a [f64],
    /// Weights divided by their sum.
    weights: &'a [f64],
    /// `Πᵀ P_j Π`.
    mats: Vec<ComplexMatrix4>,
    perm: ComplexMatrix4,
}

impl<'a> Problem<'a> {
    fn new(projectors: &[Projector], freqs: &'a [f64], weights: &'a [f64], order: [usize; 4]) -> Self {
        let perm = ComplexMatrix4::from_fn(|r, col| if order[col] == r { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let mats = projectors.iter().map(|p| perm.transpose() * p.matrix() * perm).collect();
        Self { freqs, weights, mats, perm }
    }

    /// Basis order that puts the largest diagonal entries of `rho` last,
    /// where the factor's nonzero rows sit after a rank reduction.
    fn pivoted(projectors: &[Projector], freqs: &'a [f64], weights: &'a [f64], rho: &ComplexMatrix4) -> Self {
        let mut order = [0, 1, 2, 3];
        order.sort_by(|&x, &y| rho[(x, x)].re.total_cmp(&rho[(y, y)].re));
        Self::new(projectors, freqs, weights, order)
    }

    fn to_local(&self, rho: &ComplexMatrix4) -> ComplexMatrix4 {
        self.perm.transpose() * rho * self.perm
    }

    fn to_original(&self, rho: &ComplexMatrix4) -> ComplexMatrix4 {
        self.perm * rho * self.perm.transpose()
    }

    fn terms(&self) -> impl Iterator<Item = (&ComplexMatrix4, f64, f64)> {
        self.mats.iter().zip(self.freqs.iter().copied()).zip(self.weights.iter().copied()).map(|((p, m), w)| (p, m, w))
    }

    /// `λ_max(G) − tr(ρG)` for `G = Σ_j w_j (m_j/q_j − (1−m_j)/(1−q_j)) P_j`,
    /// an upper bound on the normalized log-likelihood still attainable,
    /// together with the top eigenvector of `G`. Works in either basis as
    /// long as `rho` and the projectors agree.
    fn optimality_gap(&self, rho_local: &ComplexMatrix4) -> (f64, Vector4<C64>) {
        let mut g = ComplexMatrix4::zeros();
        for (p, m, w) in self.terms() {
            let q = matrix_inner(p, rho_local).re.clamp(Q_CLAMP, 1.0 - Q_CLAMP);
            g += p.scale(w * (m / q - (1.0 - m) / (1.0 - q)));
        }
        let g = hermitize(&g);
        let (vals, vecs) = hermitian_eigen(&g);
        let top = vecs.column(3).into_owned();
        ((vals[3] - matrix_inner(&g, rho_local).re).max(0.0), top)
    }

    fn value(&self, t: &ComplexMatrix4) -> f64 {
        let rho = rho_of(t);
        self.terms()
            .map(|(p, m, w)| {
                let q = matrix_inner(p, &rho).re.clamp(Q_CLAMP, 1.0 - Q_CLAMP);
                w * (m * q.ln() + (1.0 - m) * (1.0 - q).ln())
            })
            .sum()
    }

    /// Gradient with respect to the real and imaginary parts of `T`,
    /// packed as a complex matrix.
    fn gradient(&self, t: &ComplexMatrix4) -> ComplexMatrix4 {
        let a = t.adjoint() * t;
        let s = a.trace().re;
        let mut g = ComplexMatrix4::zeros();
        for (p, m, w) in self.terms() {
            let aj = matrix_inner(p, &a).re;
            let q = aj / s;
            if !(Q_CLAMP..=1.0 - Q_CLAMP).contains(&q) {
                continue;
            }
            let cj = w * (m / q - (1.0 - m) / (1.0 - q));
            g += (t * p).scale(cj / s) - t.scale(cj * aj / (s * s));
        }
        g *= c(2.0, 0.0);
        project_tangent(&mut g);
        g
    }
}

fn normalize_t(t: &ComplexMatrix4) -> ComplexMatrix4 {
    t.unscale(frob(t))
}

/// Lower-triangular `T` with real diagonal and `T†T = ρ`, for any PSD `ρ`.
fn lower_factor(rho: &ComplexMatrix4) -> ComplexMatrix4 {
    // ρ = B†B with B = √Λ V†. For the reversal permutation J, BJ = QR gives
    // JρJ = R†R, so ρ = (JRJ)†(JRJ) with JRJ lower triangular.
    let (vals, vecs) = hermitian_eigen(rho);
    let floor = ZERO_EIGENVALUE * vals.max().max(0.0);
    let sqrt = ComplexMatrix4::from_diagonal(&vals.map(|v| c(if v > floor { v.sqrt() } else { 0.0 }, 0.0)));
    let j = Matrix4::from_fn(|r, col| if r + col == 3 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let r = (sqrt * vecs.adjoint() * j).qr().r();
    let mut t = j * r * j;
    let scale = frob(&t);
    for row in 0..4 {
        if t.row(row).norm() <= ROW_ZERO_TOL * scale {
            t.row_mut(row).fill(c(0.0, 0.0));
            continue;
        }
        let d = t[(row, row)];
        if d.norm() > 0.0 {
            let phase = d.conj() / d.norm();
            for col in 0..=row {
                t[(row, col)] *= phase;
            }
        }
        t[(row, row)].im = 0.0;
    }
    t
}

fn starting_rho(projected: Option<&DensityMatrix>) -> ComplexMatrix4 {
    let mixed = ComplexMatrix4::identity().scale(0.25);
    match projected {
        Some(psd) => psd.matrix().scale(0.98) + mixed.scale(0.02),
        None => mixed,
    }
}

fn max_residual(rho: &ComplexMatrix4, projectors: &[Projector], freqs: &[f64]) -> f64 {
    projectors
        .iter()
        .zip(freqs)
        .map(|(p, m)| (matrix_inner(p.matrix(), rho).re - m).abs())
        .fold(0.0, f64::max)
}

/// Nonmonotone gradient ascent with Barzilai–Borwein step lengths.
struct Ascent {
    t: ComplexMatrix4,
    value: f64,
    grad: ComplexMatrix4,
    gnorm: f64,
    step: f64,
    recent: VecDeque<f64>,
}

impl Ascent {
    fn new(problem: &Problem<'_>, t: ComplexMatrix4) -> Self {
        let t = normalize_t(&t);
        let value = problem.value(&t);
        let grad = problem.gradient(&t);
        Self { t, value, gnorm: frob(&grad), grad, step: 1.0, recent: VecDeque::from([value]) }
    }

    /// One accepted step; `false` when the line search fails.
    fn step(&mut self, problem: &Problem<'_>) -> bool {
        let g2 = self.gnorm * self.gnorm;
        let reference = self.recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for _ in 0..60 {
            let cand = normalize_t(&(self.t + self.grad.scale(self.step)));
            let v = problem.value(&cand);
            if v >= reference + ARMIJO * self.step * g2 {
                accepted = Some((cand, v));
                break;
            }
            self.step *= 0.5;
        }
        let Some((next, v)) = accepted else { return false };
        let next_grad = problem.gradient(&next);
        let s_k = next - self.t;
        let sy = real_inner(&s_k, &(next_grad - self.grad));
        self.step = if sy < 0.0 {
            (real_inner(&s_k, &s_k) / -sy).clamp(STEP_MIN, STEP_MAX)
        } else {
            (2.0 * self.step).min(STEP_MAX)
        };
        self.t = next;
        self.value = v;
        self.gnorm = frob(&next_grad);
        self.grad = next_grad;
        if self.recent.len() == NONMONOTONE_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(v);
        true
    }
}

/// `rho` with its eigenvalues below `tol` removed, if any are present.
fn truncated(rho: &ComplexMatrix4, tol: f64) -> Option<ComplexMatrix4> {
    let (vals, vecs) = hermitian_eigen(rho);
    if !vals.iter().any(|&v| v > ZERO_EIGENVALUE && v < tol) {
        return None;
    }
    let kept = vals.map(|v| if v >= tol { c(v, 0.0) } else { c(0.0, 0.0) });
    Some(hermitize(&(vecs * ComplexMatrix4::from_diagonal(&kept) * vecs.adjoint())))
}

/// Maximum-likelihood estimate from frequencies `m_j` with weights `w_j`.
/// In exact-probability mode pass `m_j = tr(P_j ρ)` and unit weights.
///
/// The iteration is gradient ascent on `T` with a nonmonotone backtracking
/// line search. Every `FACE_INTERVAL` iterations, eigenvalues of `ρ(T)`
/// below a threshold (initially `FACE_TOL`) are dropped if that does not
/// lower the likelihood, which removes the slow decay towards a
/// rank-deficient optimum. A point with gradient norm below tolerance is
/// accepted only if its optimality gap is below `GAP_TOL`; otherwise the
/// iterate is mixed towards the top eigenvector of the likelihood gradient,
/// the threshold is lowered and the ascent resumes.
pub fn mle_from_frequencies(
    projectors: &[Projector],
    freqs: &[f64],
    weights: &[f64],
    opts: MleOptions,
) -> Result<MleResult> {
    let n = projectors.len();
    if n == 0 {
        return Err(TomoError::InvalidArgument("no measurements to reconstruct from".into()));
    }
    if freqs.len() != n || weights.len() != n {
        return Err(TomoError::LengthMismatch { expected: n, got: freqs.len().min(weights.len()) });
    }
    if let Some(m) = freqs.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(TomoError::ProbabilityOutOfRange(*m, "frequency".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(TomoError::InvalidArgument("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(TomoError::InvalidArgument("weights sum to zero".into()));
    }
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let identity_order = Problem::new(projectors, freqs, &normalized, [0, 1, 2, 3]);

    let projected = if n == 15 {
        crate::quorum::pmatrix_from(projectors)
            .and_then(|pm| linear_from_frequencies(freqs, &pm))
            .and_then(|lin| nearest_psd(&lin))
            .ok()
    } else {
        None
    };
    if let Some(rho) = projected.as_ref() {
        if max_residual(rho.matrix(), projectors, freqs) < EXACT_FIT_TOL {
            return Ok(MleResult {
                loglik: loglik(rho.matrix(), projectors, freqs, weights),
                optimality_gap: identity_order.optimality_gap(rho.matrix()).0,
                rho: *rho,
                method: MleMethod::ExactFit,
                iterations: 0,
                converged: true,
                gradient_norm: 0.0,
            });
        }
    }

    let restart = |rho: &ComplexMatrix4| {
        let problem = Problem::pivoted(projectors, freqs, &normalized, rho);
        let ascent = Ascent::new(&problem, lower_factor(&problem.to_local(rho)));
        (problem, ascent)
    };
    let (mut problem, mut ascent) = restart(&starting_rho(projected.as_ref()));
    let mut best = (ascent.value, problem.to_original(&rho_of(&ascent.t)), ascent.gnorm);
    let mut iterations = 0;
    let mut escapes = 0;
    let mut face_tol = FACE_TOL;
    let mut converged = false;
    loop {
        if ascent.gnorm < opts.gradient_tolerance {
            let local = rho_of(&ascent.t);
            let (gap, direction) = problem.optimality_gap(&local);
            if gap <= GAP_TOL {
                converged = true;
                best = (ascent.value, problem.to_original(&local), ascent.gnorm);
                break;
            }
            if escapes == MAX_ESCAPES {
                break;
            }
            escapes += 1;
            face_tol *= FACE_TOL_DECREASE;
            let eta = gap.min(ESCAPE_WEIGHT);
            let mixed = local.scale(1.0 - eta) + (direction * direction.adjoint()).scale(eta);
            (problem, ascent) = restart(&problem.to_original(&mixed));
        }
        if iterations == opts.max_iterations {
            break;
        }
        if iterations > 0 && iterations % FACE_INTERVAL == 0 {
            if let Some(reduced) = truncated(&problem.to_original(&rho_of(&ascent.t)), face_tol) {
                let (p2, a2) = restart(&reduced);
                if a2.value >= ascent.value {
                    (problem, ascent) = (p2, a2);
                }
            }
        }
        iterations += 1;
        if !ascent.step(&problem) {
            break;
        }
        if ascent.value > best.0 {
            best = (ascent.value, problem.to_original(&rho_of(&ascent.t)), ascent.gnorm);
        }
    }
    let (_, rho, gnorm) = best;
    let rho = DensityMatrix::new(hermitize(&rho))?;
    Ok(MleResult {
        loglik: loglik(rho.matrix(), projectors, freqs, weights),
        optimality_gap: identity_order.optimality_gap(rho.matrix()).0,
        rho,
        method: MleMethod::GradientAscent,
        iterations,
        converged,
        gradient_norm: gnorm,
    })
}

/// Maximum-likelihood estimate from shot records; records pair with
/// `projectors` by position.
pub fn mle_reconstruct(records: &[ShotRecord], projectors: &[Projector]) -> Result<MleResult> {
    if records.is_empty() {
        return Err(TomoError::InvalidArgument("no shot records".into()));
    }
    if records.len() != projectors.len() {
        return Err(TomoError::LengthMismatch { expected: projectors.len(), got: records.len() });
    }
    let freqs: Vec<f64> = records.iter().map(|r| r.estimate).collect();
    let weights: Vec<f64> = records.iter().map(|r| r.trials as f64).collect();
    mle_from_frequencies(projectors, &freqs, &weights, MleOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// Unit-trace Hermitian, possibly with negative eigenvalues.
    pub rho_linear: ComplexMatrix4,
    pub linear_is_psd: bool,
    pub rho_mle: DensityMatrix,
    /// `𝒫⁻¹ B 𝒫⁻ᵀ` evaluated at the MLE state.
    pub covariance_predicted: Mat15,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// See [`MleResult::optimality_gap`].
    pub optimality_gap: f64,
}

/// Export form of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultExport {
    pub rho_real: [[f64; 4]; 4],
    pub rho_imag: [[f64; 4]; 4],
    pub pauli_coeffs: [f64; 16],
    pub loglik: f64,
    pub psd_flag: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl ReconstructionResult {
    pub fn export(&self) -> ResultExport {
        let m = self.rho_mle.matrix();
        ResultExport {
            rho_real: std::array::from_fn(|r| std::array::from_fn(|col| m[(r, col)].re)),
            rho_imag: std::array::from_fn(|r| std::array::from_fn(|col| m[(r, col)].im)),
            pauli_coeffs: self.rho_mle.pauli_coefficients().0,
            loglik: self.loglik,
            psd_flag: self.linear_is_psd,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// Linear and maximum-likelihood reconstruction of one data set.
pub fn reconstruct(records: &[ShotRecord], quorum: &Quorum) -> Result<ReconstructionResult> {
    let pm = crate::quorum::pmatrix(quorum)?;
    if records.len() != quorum.len() {
        return Err(TomoError::LengthMismatch { expected: quorum.len(), got: records.len() });
    }
    let rho_linear = linear_reconstruct(records, &pm)?;
    let mle = mle_reconstruct(records, quorum.projectors())?;
    let shots: Vec<u64> = records.iter().map(|r| r.trials).collect();
    let covariance_predicted = covariance_predict(&mle.rho, quorum.projectors(), &pm, &shots)?;
    Ok(ReconstructionResult {
        linear_is_psd: is_psd(&rho_linear),
        rho_linear,
        rho_mle: mle.rho,
        covariance_predicted,
        loglik: mle.loglik,
        iterations: mle.iterations,
        converged: mle.converged,
        optimality_gap: mle.optimality_gap,
    })
}

/// Traceless linear-estimate coefficients for `reps` simulated repetitions.
pub fn repetition_study(
    rho: &DensityMatrix,
    plan: &MeasurementPlan,
    pm: &PMatrix,
    reps: usize,
) -> Result<Vec<[f64; 15]>> {
    check_pmatrix(pm)?;
    probabilities(rho, plan.projectors())?;
    par::map_indexed(reps, |r| {
        let recs = simulate_counts_rep(rho, plan, r as u64)?;
        let coeffs = linear_reconstruct(&recs, pm).and_then(|m| crate::qmath::pauli_expand(&m))?;
        Ok(coeffs.traceless())
    })
    .into_iter()
    .collect()
}

/// Sample mean and unbiased covariance of coefficient vectors.
pub fn sample_covariance(samples: &[[f64; 15]]) -> Result<(Vec15, Mat15)> {
    if samples.len() < 2 {
        return Err(TomoError::InvalidArgument("need at least two samples".into()));
    }
    let n = samples.len() as f64;
    let vecs: Vec<Vec15> = samples.iter().map(|s| Vec15::from_column_slice(s)).collect();
    let mean = par::pairwise_sum(&vecs, Vec15::zeros(), &|a, b| a + b) / n;
    let outer: Vec<Mat15> = vecs.iter().map(|v| (v - mean) * (v - mean).transpose()).collect();
    let cov = par::pairwise_sum(&outer, Mat15::zeros(), &|a, b| a + b) / (n - 1.0);
    Ok((mean, cov))
}

/// Root-mean-square deviation of the estimated coefficients from `truth`,
/// averaged over coefficients and repetitions.
pub fn rms_error(samples: &[[f64; 15]], truth: &[f64; 15]) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|s| s.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    (total / (15.0 * samples.len() as f64)).sqrt()
}
