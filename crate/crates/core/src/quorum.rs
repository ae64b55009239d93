//! Projector sets for state tomography ("quorums") and their analysis.
//!
//! A quorum is a set of 15 unit-trace projectors whose traceless parts span
//! the traceless Hermitian 4×4 matrices. The reconstruction matrix
//! `𝒫_jk = ⟨P_j|D_k⟩` (rows `j = 1..15` in quorum order, columns
//! `k = 1..15` with `k = 4i + j`) converts measured probabilities into
//! Pauli coefficients; `|det 𝒫|` controls the statistical error.
//!
//! Two quorums are provided: the mutually-unbiased-bases quorum, realized by
//! gate circuits on the three states the spin-to-charge readout can project
//! onto, and the separable James quorum for comparison.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, SMatrix, SVector, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dotmodel::SweepProtocol;
use crate::error::{Result, TomoError};
use crate::gates::{gate_unitary, Circuit, Gate, GateKind};
use crate::par;
use crate::qmath::{
    self, c, haar_state, hermitian_eigen, hermiticity_error, matrix_inner, max_abs_diff,
    pauli_assemble, pauli_expand, tau_expand, ComplexMatrix4, PauliCoefficients, PureState,
    ALG_TOL, C64, PSD_TOL,
};

pub type Mat15 = SMatrix<f64, 15, 15>;
pub type Vec15 = SVector<f64, 15>;

/// `|det 𝒫|` below this is treated as singular.
pub const DET_FLOOR: f64 = 1e-9;

/// Upper bound `(3/4)^{15/2}` on `|det 𝒫|` for pure-state quorums.
pub fn det_upper_bound() -> f64 {
    0.75f64.powf(7.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectorKind {
    IdealPure,
    Degraded,
    Averaged,
}

/// A unit-trace PSD measurement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix4,
    label: String,
    basis_index: Option<usize>,
    kind: ProjectorKind,
}

impl Projector {
    pub fn new(
        matrix: ComplexMatrix4,
        label: impl Into<String>,
        basis_index: Option<usize>,
        kind: ProjectorKind,
    ) -> Result<Self> {
        qmath::validate_state_operator(&matrix)?;
        if kind == ProjectorKind::IdealPure {
            let purity = matrix_inner(&matrix, &matrix).re;
            if (purity - 1.0).abs() > ALG_TOL {
                return Err(TomoError::Precondition(format!(
                    "ideal projector must be pure, tr(P²) = {purity}"
                )));
            }
        }
        Ok(Self { matrix, label: label.into(), basis_index, kind })
    }

    pub fn from_state(state: &PureState, label: impl Into<String>, basis_index: Option<usize>) -> Self {
        Self {
            matrix: state.projector(),
            label: label.into(),
            basis_index,
            kind: ProjectorKind::IdealPure,
        }
    }

    /// Same metadata with a new matrix; the caller guarantees validity.
    pub(crate) fn with_matrix(&self, matrix: ComplexMatrix4, label: String) -> Self {
        Self { matrix, label, basis_index: self.basis_index, kind: self.kind }
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn basis_index(&self) -> Option<usize> {
        self.basis_index
    }

    pub fn kind(&self) -> ProjectorKind {
        self.kind
    }

    pub fn purity(&self) -> f64 {
        matrix_inner(&self.matrix, &self.matrix).re
    }

    pub fn pauli_coefficients(&self) -> PauliCoefficients {
        pauli_expand(&self.matrix).expect("projector is Hermitian")
    }

    /// Row of 𝒫: `⟨P|D_k⟩` for `k = 1..15`.
    pub fn traceless_row(&self) -> [f64; 15] {
        self.pauli_coefficients().traceless()
    }
}

/// Initial readout state plus the circuit that maps it onto a quorum state.
/// The measurement applies `circuit.adjoint()` before the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub base: SweepProtocol,
    pub circuit: Circuit,
}

impl Preparation {
    pub fn state(&self) -> PureState {
        self.circuit.apply(&self.base.target_state())
    }

    /// Gates applied to the unknown state before the readout sweep.
    pub fn measurement_circuit(&self) -> Circuit {
        self.circuit.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quorum {
    name: String,
    projectors: Vec<Projector>,
    preparations: Option<Vec<Preparation>>,
}

impl Quorum {
    /// Builds a quorum, rejecting sets that are not 15 long or whose 𝒫 is singular.
    pub fn new(name: impl Into<String>, projectors: Vec<Projector>) -> Result<Self> {
        if projectors.len() != 15 {
            return Err(TomoError::LengthMismatch { expected: 15, got: projectors.len() });
        }
        pmatrix_from(&projectors)?;
        Ok(Self { name: name.into(), projectors, preparations: None })
    }

    fn with_preparations(mut self, preps: Vec<Preparation>) -> Self {
        self.preparations = Some(preps);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn preparations(&self) -> Option<&[Preparation]> {
        self.preparations.as_deref()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Replaces the projectors (e.g. with degraded or averaged versions),
    /// keeping name and circuits.
    pub fn map_projectors(&self, f: impl Fn(&Projector) -> Result<Projector>) -> Result<Quorum> {
        let projectors = self.projectors.iter().map(f).collect::<Result<Vec<_>>>()?;
        let mut q = Quorum::new(self.name.clone(), projectors)?;
        q.preparations = self.preparations.clone();
        Ok(q)
    }

    pub fn records(&self) -> Vec<QuorumRecord> {
        self.projectors
            .iter()
            .map(|p| QuorumRecord {
                label: p.label.clone(),
                basis_index: p.basis_index,
                pauli_coefficients: p.pauli_coefficients().0,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records()).expect("records serialize")
    }
}

/// Export format for a single quorum member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuorumRecord {
    pub label: String,
    pub basis_index: Option<usize>,
    pub pauli_coefficients: [f64; 16],
}

/// Closed-form Pauli content of the MUB quorum: each projector is
/// `(𝟙 + Σ sign·σ_{1i}σ_{2j})/4`, listed as `(i, j, sign)`.
const MUB_CLOSED_FORM: [[(usize, usize, f64); 3]; 15] = {
    const X: usize = 1;
    const Y: usize = 2;
    const Z: usize = 3;
    [
        [(Z, 0, 1.0), (0, Z, 1.0), (Z, Z, 1.0)],
        [(Z, 0, 1.0), (0, Z, -1.0), (Z, Z, -1.0)],
        [(Z, 0, -1.0), (0, Z, 1.0), (Z, Z, -1.0)],
        [(X, 0, 1.0), (0, X, 1.0), (X, X, 1.0)],
        [(X, 0, -1.0), (0, X, 1.0), (X, X, -1.0)],
        [(X, 0, 1.0), (0, X, -1.0), (X, X, -1.0)],
        [(Y, 0, 1.0), (0, Y, 1.0), (Y, Y, 1.0)],
        [(Y, 0, -1.0), (0, Y, 1.0), (Y, Y, -1.0)],
        [(Y, 0, 1.0), (0, Y, -1.0), (Y, Y, -1.0)],
        [(Z, X, -1.0), (X, Y, -1.0), (Y, Z, -1.0)],
        [(Z, X, -1.0), (X, Y, 1.0), (Y, Z, 1.0)],
        [(Z, X, 1.0), (X, Y, 1.0), (Y, Z, -1.0)],
        [(Y, X, 1.0), (Z, Y, -1.0), (X, Z, 1.0)],
        [(Y, X, -1.0), (Z, Y, -1.0), (X, Z, -1.0)],
        [(Y, X, -1.0), (Z, Y, 1.0), (X, Z, 1.0)],
    ]
};

/// Closed-form matrix of MUB quorum member `j` (1-based).
pub fn mub_closed_form(j: usize) -> ComplexMatrix4 {
    assert!((1..=15).contains(&j), "quorum index {j} out of range");
    let mut coeffs = PauliCoefficients::zero();
    coeffs.0[0] = 0.5;
    for &(a, b, sign) in &MUB_CLOSED_FORM[j - 1] {
        coeffs.0[4 * a + b] = 0.5 * sign;
    }
    pauli_assemble(&coeffs)
}

/// Circuits preparing the 15 MUB quorum states from the three readout states.
pub fn mub_preparations() -> Vec<Preparation> {
    use SweepProtocol::*;
    let prep = |base, label: &str, gates: Vec<Gate>| Preparation {
        base,
        circuit: Circuit::new(label, gates),
    };
    let psi4 = vec![Gate::esr_x1(FRAC_PI_4), Gate::exchange(FRAC_PI_2), Gate::zrot2(FRAC_PI_2)];
    let psi10 = vec![Gate::gradient(FRAC_PI_2), Gate::esr_x1(FRAC_PI_4)];
    let extend = |base: &[Gate], more: &[Gate]| {
        let mut v = base.to_vec();
        v.extend_from_slice(more);
        v
    };
    let psi7 = extend(&psi4, &[Gate::zboth(-FRAC_PI_4)]);
    let psi13 = extend(&psi10, &[Gate::zboth(-FRAC_PI_4)]);
    let z1 = [Gate::zrot1(FRAC_PI_2)];
    let z2 = [Gate::zrot2(FRAC_PI_2)];
    vec![
        prep(SlowAdiabatic, "psi1", vec![]),
        prep(SlowThenFast, "psi2", vec![]),
        prep(SlowThenFast, "psi3", vec![Gate::exchange(PI)]),
        prep(Fast, "psi4", psi4.clone()),
        prep(Fast, "psi5", extend(&psi4, &z1)),
        prep(Fast, "psi6", extend(&psi4, &z2)),
        prep(Fast, "psi7", psi7.clone()),
        prep(Fast, "psi8", extend(&psi7, &z1)),
        prep(Fast, "psi9", extend(&psi7, &z2)),
        prep(Fast, "psi10", psi10.clone()),
        prep(Fast, "psi11", extend(&psi10, &z1)),
        prep(Fast, "psi12", extend(&psi10, &z2)),
        prep(Fast, "psi13", psi13.clone()),
        prep(Fast, "psi14", extend(&psi13, &z1)),
        prep(Fast, "psi15", extend(&psi13, &z2)),
    ]
}

/// Largest entrywise deviation between the circuit-prepared projectors and
/// the closed forms, over all 15 members.
pub fn mub_cross_check_error() -> f64 {
    mub_preparations()
        .iter()
        .enumerate()
        .map(|(i, p)| max_abs_diff(&p.state().projector(), &mub_closed_form(i + 1)))
        .fold(0.0, f64::max)
}

/// The 15-member MUB quorum. Each projector comes from its preparation
/// circuit and is cross-checked against the closed form within 1e-12.
pub fn mub_quorum() -> Result<Quorum> {
    let preps = mub_preparations();
    let mut projectors = Vec::with_capacity(15);
    for (i, prep) in preps.iter().enumerate() {
        prep.circuit.check_quorum_mode()?;
        let p = prep.state().projector();
        let err = max_abs_diff(&p, &mub_closed_form(i + 1));
        if err > ALG_TOL {
            return Err(TomoError::CrossCheck(format!(
                "P{} from circuit deviates from closed form by {err:.3e}",
                i + 1
            )));
        }
        projectors.push(Projector {
            matrix: p,
            label: format!("P{}", i + 1),
            basis_index: Some(i / 3),
            kind: ProjectorKind::IdealPure,
        });
    }
    Ok(Quorum::new("mub", projectors)?.with_preparations(preps))
}

fn qubit(up: C64, down: C64) -> [C64; 2] {
    [up, down]
}

/// Single-spin states used by the James set.
pub mod spin {
    use super::*;

    pub fn up() -> [C64; 2] {
        qubit(c(1.0, 0.0), c(0.0, 0.0))
    }
    pub fn down() -> [C64; 2] {
        qubit(c(0.0, 0.0), c(1.0, 0.0))
    }
    pub fn up_x() -> [C64; 2] {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0))
    }
    pub fn up_y() -> [C64; 2] {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2))
    }
    pub fn down_y() -> [C64; 2] {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2))
    }
}

/// The separable James quorum translated to spins (the `|↓↓⟩` member dropped).
pub fn james_states() -> Vec<(String, PureState)> {
    use spin::*;
    let list: [(&str, [C64; 2], [C64; 2]); 15] = [
        ("uu", up(), up()),
        ("ud", up(), down()),
        ("du", down(), up()),
        ("dy u", down_y(), up()),
        ("dy d", down_y(), down()),
        ("ux d", up_x(), down()),
        ("ux u", up_x(), up()),
        ("ux dy", up_x(), down_y()),
        ("ux ux", up_x(), up_x()),
        ("dy ux", down_y(), up_x()),
        ("u ux", up(), up_x()),
        ("d ux", down(), up_x()),
        ("d uy", down(), up_y()),
        ("u uy", up(), up_y()),
        ("dy uy", down_y(), up_y()),
    ];
    list.iter()
        .map(|(l, a, b)| (l.to_string(), PureState::product(*a, *b).expect("unit spinors")))
        .collect()
}

pub fn james_quorum() -> Result<Quorum> {
    let projectors = james_states()
        .iter()
        .enumerate()
        .map(|(i, (l, s))| Projector::from_state(s, format!("J{} [{l}]", i + 1), None))
        .collect();
    Quorum::new("james", projectors)
}

/// Quorum of 15 Haar-random pure states.
pub fn random_quorum(seed: u64) -> Result<Quorum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projectors = (0..15)
        .map(|i| Projector::from_state(&haar_state(&mut rng), format!("R{}", i + 1), None))
        .collect();
    Quorum::new(format!("random-{seed}"), projectors)
}

/// The reconstruction matrix with its determinant and inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PMatrix {
    pub entries: Mat15,
    pub det: f64,
    pub inverse: Mat15,
}

impl PMatrix {
    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }

    pub fn row_norms(&self) -> [f64; 15] {
        std::array::from_fn(|j| self.entries.row(j).norm())
    }

    /// Largest entry of `|𝒫⁻¹𝒫 − 𝟙|`.
    pub fn inverse_error(&self) -> f64 {
        (self.inverse * self.entries - Mat15::identity()).amax()
    }

    /// Row-major CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        mat15_csv(&self.entries)
    }
}

/// Row-major CSV rendering of a 15×15 matrix, 17 significant digits.
pub fn mat15_csv(m: &Mat15) -> String {
    let mut out = String::new();
    for r in 0..15 {
        let row: Vec<String> = (0..15).map(|col| format!("{:.16e}", m[(r, col)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn pmatrix_from(projectors: &[Projector]) -> Result<PMatrix> {
    if projectors.len() != 15 {
        return Err(TomoError::LengthMismatch { expected: 15, got: projectors.len() });
    }
    let mut entries = Mat15::zeros();
    for (j, p) in projectors.iter().enumerate() {
        for (k, v) in p.traceless_row().iter().enumerate() {
            entries[(j, k)] = *v;
        }
    }
    let lu = entries.lu();
    let det = lu.determinant();
    if !(det.abs() >= DET_FLOOR) {
        return Err(TomoError::DegenerateQuorum(det.abs()));
    }
    let inverse = lu.try_inverse().ok_or(TomoError::DegenerateQuorum(det.abs()))?;
    Ok(PMatrix { entries, det, inverse })
}

pub fn pmatrix(q: &Quorum) -> Result<PMatrix> {
    pmatrix_from(&q.projectors)
}

/// The five mutually unbiased bases, four states each. The first three
/// states of basis `i` are quorum members `3i+1..3i+3`; the fourth is the
/// normalized orthogonal complement.
pub fn mub_bases() -> [[PureState; 4]; 5] {
    let states: Vec<PureState> = mub_preparations().iter().map(Preparation::state).collect();
    std::array::from_fn(|b| {
        let three = [states[3 * b], states[3 * b + 1], states[3 * b + 2]];
        let fourth = orthogonal_complement(&three);
        [three[0], three[1], three[2], fourth]
    })
}

/// Unit vector orthogonal to three orthonormal states.
fn orthogonal_complement(three: &[PureState; 3]) -> PureState {
    let proj = three
        .iter()
        .fold(ComplexMatrix4::identity(), |acc, s| acc - s.projector());
    let best = (0..4)
        .max_by(|&a, &b| proj.column(a).norm().total_cmp(&proj.column(b).norm()))
        .expect("four columns");
    PureState::normalized(proj.column(best).into_owned()).expect("complement is nonzero")
}

/// Pauli coefficients of `|φ⟩⟨φ|` from the closed-form amplitude expressions.
pub fn projector_coefficients(phi: &PureState) -> PauliCoefficients {
    let v = phi.amplitudes();
    let (a, b, cc, d) = (v[0], v[1], v[2], v[3]);
    let i2 = c(0.0, 2.0);
    let r = |z: C64| z.re / 2.0;
    let im = |z: C64| (z / i2).re;
    let (ac, bc, cc_, dc) = (a.conj(), b.conj(), cc.conj(), d.conj());
    let n = |s: f64| s / 2.0;
    let mut out = [0.0; 16];
    // index 4i + j, i, j ∈ {0, x, y, z}
    out[0] = n(a.norm_sqr() + b.norm_sqr() + cc.norm_sqr() + d.norm_sqr());
    out[1] = r(ac * b + bc * a + cc_ * d + dc * cc);
    out[2] = im(ac * b - bc * a + cc_ * d - dc * cc);
    out[3] = n(a.norm_sqr() - b.norm_sqr() + cc.norm_sqr() - d.norm_sqr());
    out[4] = r(ac * cc + bc * d + cc_ * a + dc * b);
    out[5] = r(ac * d + dc * a + bc * cc + cc_ * b);
    out[6] = im(ac * d - dc * a - bc * cc + cc_ * b);
    out[7] = r(ac * cc - bc * d + cc_ * a - dc * b);
    out[8] = im(ac * cc + bc * d - cc_ * a - dc * b);
    out[9] = im(ac * d - dc * a + bc * cc - cc_ * b);
    out[10] = r(bc * cc + cc_ * b - ac * d - dc * a);
    out[11] = im(ac * cc - bc * d - cc_ * a + dc * b);
    out[12] = n(a.norm_sqr() + b.norm_sqr() - cc.norm_sqr() - d.norm_sqr());
    out[13] = r(ac * b + bc * a - cc_ * d - dc * cc);
    out[14] = im(ac * b - bc * a - cc_ * d + dc * cc);
    out[15] = n(a.norm_sqr() - b.norm_sqr() - cc.norm_sqr() + d.norm_sqr());
    PauliCoefficients(out)
}

/// The gate kinds available without and with ESR.
pub fn generator_kinds(esr_allowed: bool) -> Vec<GateKind> {
    GateKind::ALL
        .iter()
        .copied()
        .filter(|k| esr_allowed || !k.is_esr())
        .collect()
}

/// Angle grid `{0, π/8, …, 15π/8}` used to sample the gate group.
pub fn angle_grid() -> [f64; 16] {
    std::array::from_fn(|i| i as f64 * PI / 8.0)
}

/// Singular values below this fraction of the largest count as zero.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Residual norm above which a streamed vector extends the basis.
const SPAN_ACCEPT: f64 = 1e-6;

/// Incrementally maintained spanning set of row vectors.
#[derive(Debug, Clone, Default)]
struct SpanBuilder {
    rows: Vec<[f64; 15]>,
    ortho: Vec<Vec15>,
}

impl SpanBuilder {
    fn offer(&mut self, v: [f64; 15]) {
        if self.ortho.len() == 15 {
            return;
        }
        let orig = Vec15::from(v);
        let scale = orig.norm();
        if scale == 0.0 {
            return;
        }
        let mut r = orig;
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for q in &self.ortho {
                r -= q * q.dot(&r);
            }
        }
        let rn = r.norm();
        if rn > SPAN_ACCEPT * scale {
            self.ortho.push(r / rn);
            self.rows.push(v);
        }
    }

    fn merge(&mut self, other: &SpanBuilder) {
        for row in &other.rows {
            self.offer(*row);
        }
    }

    /// Rank of the accepted rows by SVD with a relative singular-value cutoff.
    fn rank(&self) -> usize {
        if self.rows.is_empty() {
            return 0;
        }
        let m = DMatrix::from_fn(self.rows.len(), 15, |r, col| self.rows[r][col]);
        let sv = m.singular_values();
        let smax = sv.max();
        sv.iter().filter(|&&s| s > RANK_CUTOFF * smax).count()
    }
}

fn readout_projectors() -> [ComplexMatrix4; 3] {
    [
        PureState::up_up().projector(),
        PureState::up_down().projector(),
        PureState::singlet().projector(),
    ]
}

/// Dimension of the span of the traceless parts of `U P U†` for the three
/// readout projectors and every `U` that is a product of `depth` gates drawn
/// from `kinds` × [`angle_grid`].
pub fn accessible_subspace_rank(kinds: &[GateKind], depth: usize) -> usize {
    let bases = readout_projectors();
    let gates: Vec<ComplexMatrix4> = kinds
        .iter()
        .flat_map(|&k| angle_grid().map(move |a| gate_unitary(&Gate::new(k, a))))
        .collect();
    let traceless = |u: &ComplexMatrix4, span: &mut SpanBuilder| {
        for p in &bases {
            let m = u * p * u.adjoint();
            span.offer(pauli_expand(&qmath::hermitize(&m)).expect("hermitized").traceless());
        }
    };
    if depth == 0 || gates.is_empty() {
        let mut span = SpanBuilder::default();
        traceless(&ComplexMatrix4::identity(), &mut span);
        return span.rank();
    }
    // Enumerate products U = g_depth ⋯ g_1, splitting the work on g_1.
    let partial = par::map_slice(&gates, |g1| {
        let mut span = SpanBuilder::default();
        let mut stack = vec![(*g1, 1usize)];
        while let Some((u, d)) = stack.pop() {
            if d == depth {
                traceless(&u, &mut span);
                if span.ortho.len() == 15 {
                    break;
                }
                continue;
            }
            for g in &gates {
                stack.push((g * u, d + 1));
            }
        }
        span
    });
    let mut total = SpanBuilder::default();
    for s in &partial {
        total.merge(s);
    }
    total.rank()
}

/// Dimension reachable with exchange, z-rotations and field gradients
/// (depth-3 products on the angle grid), optionally adding ESR.
pub fn accessible_subspace_dimension(esr_allowed: bool) -> usize {
    accessible_subspace_rank(&generator_kinds(esr_allowed), 3)
}

/// Per-state result of the τ-basis witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub index: usize,
    /// `Σ_{i=2..7} m_i²`
    pub low_sum: f64,
    /// `Σ_{i=8..15} m_i²`
    pub high_sum: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub entries: Vec<WitnessEntry>,
    /// Ratio an orthogonal basis would need: `dim span{τ₂..τ₇} / dim span{τ₈..τ₁₅}`.
    pub required_ratio: f64,
    /// Largest `|sum − 3/8|` over both partial sums and all states.
    pub max_deviation: f64,
}

impl WitnessReport {
    /// Every state has ratio 1, which differs from the required 6/8.
    pub fn violates_lemma(&self) -> bool {
        self.entries
            .iter()
            .all(|e| (e.ratio - self.required_ratio).abs() > 0.1)
    }
}

/// For states unbiased with respect to `|↑↑⟩` (the first entry), the τ-basis
/// norm of every other projector splits evenly between `τ₂..τ₇` and
/// `τ₈..τ₁₅`, so the traceless parts cannot form an orthogonal basis.
pub fn orthogonality_witness(states: &[PureState]) -> Result<WitnessReport> {
    let Some(first) = states.first() else {
        return Err(TomoError::Precondition("no states given".into()));
    };
    if !first.same_ray(&PureState::up_up(), 1e-10) {
        return Err(TomoError::Precondition("first state must be |↑↑⟩".into()));
    }
    let mut entries = Vec::with_capacity(states.len().saturating_sub(1));
    let mut max_deviation: f64 = 0.0;
    for (idx, s) in states.iter().enumerate().skip(1) {
        let overlap = s.amplitudes()[0].norm_sqr();
        if (overlap - 0.25).abs() > 1e-10 {
            return Err(TomoError::Precondition(format!(
                "state {idx} has |⟨↑↑|φ⟩|² = {overlap}, expected 1/4"
            )));
        }
        let t = tau_expand(&s.projector())?;
        let (low, high) = (t.partial_norm_sq(2..=7), t.partial_norm_sq(8..=15));
        max_deviation = max_deviation.max((low - 0.375).abs()).max((high - 0.375).abs());
        entries.push(WitnessEntry { index: idx, low_sum: low, high_sum: high, ratio: low / high });
    }
    Ok(WitnessReport { entries, required_ratio: 6.0 / 8.0, max_deviation })
}

/// Random state with `⟨↑↑|φ⟩ = 1/2` and `(b, c, d)` uniform on the sphere of
/// radius `√3/2`.
pub fn random_unbiased_state(rng: &mut ChaCha8Rng) -> PureState {
    loop {
        let g = Vector3::from_fn(|_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        });
        let n = g.norm();
        if n < 1e-12 {
            continue;
        }
        let rest = g.scale(3f64.sqrt() / 2.0 / n);
        let v = Vector4::new(c(0.5, 0.0), rest[0], rest[1], rest[2]);
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramSchmidtReport {
    /// Orthogonalized row lengths per basis.
    pub lengths: Vec<[f64; 3]>,
    pub det: f64,
    /// Largest `|𝒫_j · 𝒫_k|` between rows of different bases.
    pub max_cross_dot: f64,
}

/// Determinant of 𝒫 for a quorum built from mutually unbiased bases,
/// computed by orthogonalizing each basis' three rows separately.
pub fn gram_schmidt_det_check(q: &Quorum) -> Result<GramSchmidtReport> {
    let pm = pmatrix(q)?;
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (j, p) in q.projectors().iter().enumerate() {
        let b = p.basis_index().ok_or_else(|| {
            TomoError::Precondition(format!("projector {} has no basis index", p.label()))
        })?;
        match groups.iter_mut().find(|(g, _)| *g == b) {
            Some((_, rows)) => rows.push(j),
            None => groups.push((b, vec![j])),
        }
    }
    if groups.len() != 5 || groups.iter().any(|(_, r)| r.len() != 3) {
        return Err(TomoError::Precondition("expected 5 bases with 3 members each".into()));
    }
    let rows: Vec<Vec15> = (0..15).map(|j| pm.entries.row(j).transpose()).collect();
    let mut max_cross_dot: f64 = 0.0;
    for (ga, ra) in &groups {
        for (gb, rb) in &groups {
            if ga >= gb {
                continue;
            }
            for &x in ra {
                for &y in rb {
                    max_cross_dot = max_cross_dot.max(rows[x].dot(&rows[y]).abs());
                }
            }
        }
    }
    if max_cross_dot > 1e-10 {
        return Err(TomoError::Precondition(format!(
            "rows of different bases are not orthogonal (max dot {max_cross_dot:.3e})"
        )));
    }
    let mut lengths = Vec::with_capacity(5);
    let mut det = 1.0;
    for (_, members) in &groups {
        let mut ortho: Vec<Vec15> = Vec::with_capacity(3);
        let mut lens = [0.0; 3];
        for (slot, &j) in members.iter().enumerate() {
            let mut v = rows[j];
            for q in &ortho {
                v -= q * (q.dot(&v) / q.norm_squared());
            }
            lens[slot] = v.norm();
            ortho.push(v);
        }
        det *= lens.iter().product::<f64>();
        lengths.push(lens);
    }
    Ok(GramSchmidtReport { lengths, det, max_cross_dot })
}

/// Checks that a matrix is a valid ideal projector (used by tests and `verify`).
pub fn is_rank_one_projector(m: &ComplexMatrix4) -> bool {
    let (vals, _) = hermitian_eigen(m);
    hermiticity_error(m) < ALG_TOL
        && (vals[3] - 1.0).abs() < ALG_TOL
        && vals.iter().take(3).all(|v| v.abs() < PSD_TOL)
}
