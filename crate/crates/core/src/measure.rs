//! Shot simulation, projector imperfections and run-count planning.
//!
//! Every projector `P_j` is measured in its own experiment of `N_j` runs, so
//! the success count is `Binomial(N_j, tr(P_j ρ))`. Random streams are keyed
//! by `(seed, repetition, projector)`, which makes results independent of
//! thread scheduling.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dotmodel::{sweep_projector, SweepProtocol};
use crate::error::{Result, TomoError};
use crate::gates::{Circuit, Gate, GateKind};
use crate::par;
use crate::qmath::{hermitize, matrix_inner, max_abs_diff, ComplexMatrix4, DensityMatrix, ALG_TOL};
use crate::quorum::{Projector, ProjectorKind, Quorum};

/// Probabilities may stray this far outside `[0, 1]` before it is an error.
pub const PROB_TOL: f64 = 1e-10;

/// Below this many trials binomial draws use exact CDF inversion.
pub const INVERSION_CUTOFF: u64 = 50;

/// Samples per Monte Carlo chunk in [`average_projector`].
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    projectors: Vec<Projector>,
    shots: Vec<u64>,
    seed: u64,
}

impl MeasurementPlan {
    pub fn new(projectors: Vec<Projector>, shots: Vec<u64>, seed: u64) -> Result<Self> {
        if projectors.is_empty() {
            return Err(TomoError::InvalidArgument("measurement plan needs at least one projector".into()));
        }
        if shots.len() != projectors.len() {
            return Err(TomoError::LengthMismatch { expected: projectors.len(), got: shots.len() });
        }
        if let Some(j) = shots.iter().position(|&n| n == 0) {
            return Err(TomoError::InvalidArgument(format!("shot count for setting {} is zero", j + 1)));
        }
        Ok(Self { projectors, shots, seed })
    }

    /// Equal shot count `n` for every projector of `q`.
    pub fn uniform(q: &Quorum, n: u64, seed: u64) -> Result<Self> {
        Self::new(q.projectors().to_vec(), vec![n; q.len()], seed)
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub projector_label: String,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub seed_used: u64,
}

impl ShotRecord {
    pub fn new(projector_label: impl Into<String>, trials: u64, successes: u64, seed_used: u64) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(TomoError::InvalidArgument(format!(
                "shot record needs 0 <= successes <= trials and trials > 0, got {successes}/{trials}"
            )));
        }
        Ok(Self {
            projector_label: projector_label.into(),
            trials,
            successes,
            estimate: successes as f64 / trials as f64,
            seed_used,
        })
    }
}

/// CSV with header `projector_label,trials,successes,estimate`.
pub fn records_to_csv(records: &[ShotRecord]) -> String {
    let mut out = String::from("projector_label,trials,successes,estimate\n");
    for r in records {
        out.push_str(&format!("{},{},{},{:.16e}\n", r.projector_label, r.trials, r.successes, r.estimate));
    }
    out
}

/// `tr(P_j ρ)` for each projector, clamped into `[0, 1]`.
pub fn probabilities(rho: &DensityMatrix, projectors: &[Projector]) -> Result<Vec<f64>> {
    projectors
        .iter()
        .map(|p| {
            let q = rho.expectation(p.matrix());
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&q) {
                return Err(TomoError::ProbabilityOutOfRange(q, p.label().to_string()));
            }
            Ok(q.clamp(0.0, 1.0))
        })
        .collect()
}

/// Random stream for projector `j` in repetition `rep`.
pub fn stream_rng(seed: u64, rep: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((rep << 16) | j as u64);
    rng
}

/// One `Binomial(n, p)` draw: CDF inversion for `n < 50`, otherwise the
/// BTPE sampler of `rand_distr`.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n >= INVERSION_CUTOFF {
        return Binomial::new(n, p).expect("p in (0,1)").sample(rng);
    }
    if p > 0.5 {
        return n - invert_binomial(rng, n, 1.0 - p);
    }
    invert_binomial(rng, n, p)
}

fn invert_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    let u: f64 = rng.random();
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    let mut k = 0;
    while u >= cdf && k < n {
        pmf *= ratio * (n - k) as f64 / (k + 1) as f64;
        k += 1;
        cdf += pmf;
    }
    k
}

/// Simulated counts for repetition `rep` of `plan`.
pub fn simulate_counts_rep(rho: &DensityMatrix, plan: &MeasurementPlan, rep: u64) -> Result<Vec<ShotRecord>> {
    let probs = probabilities(rho, &plan.projectors)?;
    Ok(plan
        .projectors
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let n = plan.shots[j];
            let mut rng = stream_rng(plan.seed, rep, j);
            let s = sample_binomial(&mut rng, n, probs[j]);
            ShotRecord::new(p.label(), n, s, plan.seed).expect("draw within range")
        })
        .collect())
}

pub fn simulate_counts(rho: &DensityMatrix, plan: &MeasurementPlan) -> Result<Vec<ShotRecord>> {
    simulate_counts_rep(rho, plan, 0)
}

/// `reps` independent repetitions, computed in parallel.
pub fn simulate_repetitions(rho: &DensityMatrix, plan: &MeasurementPlan, reps: usize) -> Result<Vec<Vec<ShotRecord>>> {
    probabilities(rho, &plan.projectors)?;
    par::map_indexed(reps, |r| simulate_counts_rep(rho, plan, r as u64)).into_iter().collect()
}

fn check_fidelity(f: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&f) {
        return Err(TomoError::FidelityOutOfRange(f));
    }
    Ok(())
}

/// `P' = (1−f²)/3 · 𝟙 + (4f²−1)/3 · P` for a pure `P`; the fidelity of `P'`
/// to `P` is `f`.
pub fn degrade_projector(p: &Projector, f: f64) -> Result<Projector> {
    check_fidelity(f)?;
    let purity = p.purity();
    if (purity - 1.0).abs() > ALG_TOL {
        return Err(TomoError::Precondition(format!("degradation needs a pure projector, tr(P²) = {purity}")));
    }
    let a = (1.0 - f * f) / 3.0;
    let b = (4.0 * f * f - 1.0) / 3.0;
    let m = ComplexMatrix4::identity().scale(a) + p.matrix().scale(b);
    Projector::new(m, format!("{}'", p.label()), p.basis_index(), ProjectorKind::Degraded)
}

/// Applies [`degrade_projector`] to every member.
pub fn degrade_quorum(q: &Quorum, f: f64) -> Result<Quorum> {
    q.map_projectors(|p| degrade_projector(p, f))
}

/// Gaussian error on the angle of one gate kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleNoise {
    pub mean_rad: f64,
    pub std_rad: f64,
}

/// Per-gate-kind angle errors. JSON form:
/// `{"exchange": {"mean_rad": 0, "std_rad": 0.05}, ..., "samples": 10000}`
/// with an optional `"max_std_error"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, serde_json::Value>", into = "BTreeMap<String, serde_json::Value>")]
pub struct NoiseModel {
    pub gates: BTreeMap<GateKind, AngleNoise>,
    pub samples: usize,
    pub max_std_error: Option<f64>,
}

impl NoiseModel {
    pub fn new(gates: BTreeMap<GateKind, AngleNoise>, samples: usize) -> Result<Self> {
        let m = Self { gates, samples, max_std_error: None };
        m.validate()?;
        Ok(m)
    }

    /// The same Gaussian error on every gate kind.
    pub fn uniform(mean_rad: f64, std_rad: f64, samples: usize) -> Result<Self> {
        let gates = GateKind::ALL.iter().map(|&k| (k, AngleNoise { mean_rad, std_rad })).collect();
        Self::new(gates, samples)
    }

    pub fn with_max_std_error(mut self, target: f64) -> Self {
        self.max_std_error = Some(target);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(TomoError::InvalidArgument("noise model needs samples >= 1".into()));
        }
        for (k, n) in &self.gates {
            if !n.mean_rad.is_finite() || !n.std_rad.is_finite() || n.std_rad < 0.0 {
                return Err(TomoError::InvalidArgument(format!("bad angle noise for {k}: {n:?}")));
            }
        }
        if let Some(t) = self.max_std_error {
            if !(t > 0.0) {
                return Err(TomoError::InvalidArgument(format!("max_std_error must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn perturb(&self, c: &Circuit, rng: &mut ChaCha8Rng) -> Circuit {
        let gates = c
            .gates
            .iter()
            .map(|g| match self.gates.get(&g.kind) {
                Some(n) => {
                    let z: f64 = StandardNormal.sample(rng);
                    Gate::new(g.kind, g.angle + n.mean_rad + n.std_rad * z)
                }
                None => *g,
            })
            .collect();
        Circuit::new(c.label.clone(), gates)
    }
}

impl TryFrom<BTreeMap<String, serde_json::Value>> for NoiseModel {
    type Error = String;

    fn try_from(map: BTreeMap<String, serde_json::Value>) -> std::result::Result<Self, String> {
        let mut gates = BTreeMap::new();
        let mut samples = None;
        let mut max_std_error = None;
        for (key, value) in map {
            match key.as_str() {
                "samples" => {
                    samples = Some(serde_json::from_value::<usize>(value).map_err(|e| format!("samples: {e}"))?)
                }
                "max_std_error" => {
                    max_std_error =
                        Some(serde_json::from_value::<f64>(value).map_err(|e| format!("max_std_error: {e}"))?)
                }
                other => {
                    let kind: GateKind = serde_json::from_value(serde_json::Value::String(other.to_string()))
                        .map_err(|_| format!("unknown field `{other}` in noise model"))?;
                    let noise: AngleNoise = serde_json::from_value(value).map_err(|e| format!("{other}: {e}"))?;
                    gates.insert(kind, noise);
                }
            }
        }
        let model = NoiseModel {
            gates,
            samples: samples.ok_or("missing field `samples`")?,
            max_std_error,
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }
}

impl From<NoiseModel> for BTreeMap<String, serde_json::Value> {
    fn from(m: NoiseModel) -> Self {
        let mut out: BTreeMap<String, serde_json::Value> = m
            .gates
            .iter()
            .map(|(k, n)| (k.name().to_string(), serde_json::to_value(n).expect("plain struct")))
            .collect();
        out.insert("samples".into(), m.samples.into());
        if let Some(t) = m.max_std_error {
            out.insert("max_std_error".into(), t.into());
        }
        out
    }
}

/// Monte Carlo projector average together with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedProjector {
    pub projector: Projector,
    /// Largest standard error over the matrix entries of the mean.
    pub std_error: f64,
    pub samples: usize,
}

fn is_readout_projector(m: &ComplexMatrix4) -> bool {
    SweepProtocol::ALL.iter().any(|&p| max_abs_diff(sweep_projector(p).matrix(), m) < ALG_TOL)
}

/// Averages `M(α)† P_base M(α)` over noisy realizations of the measurement
/// circuit `M`. The result is made exactly Hermitian and trace-normalized.
pub fn average_projector(
    measurement: &Circuit,
    base: &Projector,
    noise: &NoiseModel,
    seed: u64,
) -> Result<AveragedProjector> {
    noise.validate()?;
    if !is_readout_projector(base.matrix()) {
        return Err(TomoError::Precondition(format!(
            "base projector '{}' is not one of the readout projectors",
            base.label()
        )));
    }
    let n = noise.samples;
    let chunks = n.div_ceil(CHUNK);
    // Deviations are accumulated relative to the noise-free operator so the
    // variance estimate does not suffer from cancellation.
    let reference = {
        let u = measurement.unitary();
        u.adjoint() * base.matrix() * u
    };
    let partial = par::map_indexed(chunks, |ci| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ci as u64);
        let count = CHUNK.min(n - ci * CHUNK);
        let mut sum = ComplexMatrix4::zeros();
        let mut sum_sq = [0.0f64; 16];
        for _ in 0..count {
            let u = noise.perturb(measurement, &mut rng).unitary();
            let d = u.adjoint() * base.matrix() * u - reference;
            for (acc, z) in sum_sq.iter_mut().zip(d.iter()) {
                *acc += z.norm_sqr();
            }
            sum += d;
        }
        (sum, sum_sq)
    });
    let zero = (ComplexMatrix4::zeros(), [0.0f64; 16]);
    let (sum, sum_sq) = par::pairwise_sum(&partial, zero, &|a, b| {
        (a.0 + b.0, std::array::from_fn(|i| a.1[i] + b.1[i]))
    });
    let nf = n as f64;
    let mean_dev = sum.unscale(nf);
    let std_error = if n > 1 {
        mean_dev
            .iter()
            .zip(sum_sq.iter())
            .map(|(m, s2)| ((s2 / nf - m.norm_sqr()).max(0.0) / (nf - 1.0)).sqrt())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mean = reference + mean_dev;
    if let Some(target) = noise.max_std_error {
        if std_error > target {
            return Err(TomoError::InsufficientSamples { achieved: std_error, requested: target });
        }
    }
    let h = hermitize(&mean);
    let tr = h.trace().re;
    let m = h.unscale(tr);
    let projector = Projector::new(m, format!("<{}>", base.label()), base.basis_index(), ProjectorKind::Averaged)?;
    Ok(AveragedProjector { projector, std_error, samples: n })
}

/// `M_ij = tr(P_i P_j)`.
pub fn calibration_matrix(ps: &[Projector]) -> Result<DMatrix<f64>> {
    if ps.len() < 2 {
        return Err(TomoError::InvalidArgument("calibration matrix needs at least two projectors".into()));
    }
    let n = ps.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = matrix_inner(ps[i].matrix(), ps[j].matrix()).re;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Tolerated estimate error `δ' = (4f²−1)δ/(3√2)` for degraded projectors.
pub fn delta_prime(delta: f64, f: f64) -> f64 {
    (4.0 * f * f - 1.0) * delta / (3.0 * std::f64::consts::SQRT_2)
}

/// Hoeffding tail `2 exp(−2 N δ'²)` for the deviation of a frequency from
/// its probability.
pub fn hoeffding_tail(n: u64, delta_prime: f64) -> f64 {
    2.0 * (-2.0 * n as f64 * delta_prime * delta_prime).exp()
}

/// Smallest run count `N` with `N > ln(2/P_l)/(2δ'²)`.
pub fn plan_shots(delta: f64, p_limit: f64, f: f64) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(TomoError::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if !(p_limit > 0.0 && p_limit < 1.0) {
        return Err(TomoError::InvalidArgument(format!("p_limit must lie in (0,1), got {p_limit}")));
    }
    if f.is_nan() || f > 1.0 {
        return Err(TomoError::FidelityOutOfRange(f));
    }
    if f <= 0.5 {
        return Err(TomoError::Unplannable(f));
    }
    let dp = delta_prime(delta, f);
    let bound = (2.0 / p_limit).ln() / (2.0 * dp * dp);
    if !bound.is_finite() || bound >= u64::MAX as f64 {
        return Err(TomoError::Unplannable(f));
    }
    Ok(bound.floor() as u64 + 1)
}

/// Exact binomial probability mass function, for tests and diagnostics.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(n as usize + 1);
    // Log-space so that large n does not underflow.
    let mut log_c = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            log_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let lp = match (k, n - k) {
            (0, _) if p == 0.0 => 0.0,
            (_, 0) if q == 0.0 => 0.0,
            _ => log_c + k as f64 * p.ln() + (n - k) as f64 * q.ln(),
        };
        out.push(lp.exp());
    }
    out
}
