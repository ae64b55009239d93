//! Fixed-size operator algebra for the two-spin Hilbert space.
//!
//! Basis ordering everywhere is `{|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩}`, with qubit 1 the
//! most significant factor of the tensor product. Operator bases:
//!
//! * `D_k = σ_{1i} σ_{2j} / 2`, `k = 4i + j`, `i, j ∈ {0, x, y, z}`;
//! * the `τ` basis adapted to `|↑↑⟩`: `τ₀ = 𝟙/2`, `τ₁` is the traceless part
//!   of `|↑↑⟩⟨↑↑|`, and `τ₂..τ₇` / `τ₈..τ₁₅` split the remaining directions.
//!
//! Both are orthonormal under `⟨A|B⟩ = tr(A†B)`.

use std::fmt;
use std::ops::Index;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};

pub type C64 = Complex64;
pub type ComplexMatrix4 = Matrix4<C64>;

/// Tolerance for algebraic identities (Hermiticity, trace, normalization).
pub const ALG_TOL: f64 = 1e-12;
/// Slack allowed below zero for eigenvalues of a PSD operator.
pub const PSD_TOL: f64 = 1e-10;

pub const PAULI_LABELS: [char; 4] = ['0', 'x', 'y', 'z'];

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit Pauli matrix; index 0 is the identity.
pub fn pauli(i: usize) -> Matrix2<C64> {
    let (z, o, im) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match i {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -im, im, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => panic!("pauli index {i} out of range"),
    }
}

pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> ComplexMatrix4 {
    ComplexMatrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// `σ_{1i} σ_{2j}`.
pub fn pauli_product(i: usize, j: usize) -> ComplexMatrix4 {
    kron(&pauli(i), &pauli(j))
}

/// `σ_{1i} = σ_i ⊗ 𝟙`.
pub fn sigma1(i: usize) -> ComplexMatrix4 {
    pauli_product(i, 0)
}

/// `σ_{2i} = 𝟙 ⊗ σ_i`.
pub fn sigma2(i: usize) -> ComplexMatrix4 {
    pauli_product(0, i)
}

/// `D_k = σ_{1i} σ_{2j} / 2` with `k = 4i + j`.
pub fn d_basis(k: usize) -> ComplexMatrix4 {
    assert!(k < 16, "D_k index {k} out of range");
    d_table()[k]
}

fn d_table() -> &'static [ComplexMatrix4; 16] {
    static TABLE: OnceLock<[ComplexMatrix4; 16]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|k| pauli_product(k / 4, k % 4).scale(0.5)))
}

/// Label such as `"zx"` for `D_k`.
pub fn d_label(k: usize) -> String {
    format!("{}{}", PAULI_LABELS[k / 4], PAULI_LABELS[k % 4])
}

/// The sixteen elements of the `τ` basis.
pub fn tau_basis(i: usize) -> ComplexMatrix4 {
    let s = |a: usize, b: usize| pauli_product(a, b);
    let r2 = 2.0 * 2f64.sqrt();
    let (x, y, z) = (1, 2, 3);
    match i {
        0 => s(0, 0).scale(0.5),
        1 => (s(0, z) + s(z, 0) + s(z, z)).scale(1.0 / (2.0 * 3f64.sqrt())),
        2 => (s(x, 0) + s(x, z)).scale(1.0 / r2),
        3 => (s(0, x) + s(z, x)).scale(1.0 / r2),
        4 => (s(y, 0) + s(y, z)).scale(1.0 / r2),
        5 => (s(0, y) + s(z, y)).scale(1.0 / r2),
        6 => (s(x, x) - s(y, y)).scale(1.0 / r2),
        7 => (s(x, y) + s(y, x)).scale(1.0 / r2),
        8 => (s(x, 0) - s(x, z)).scale(1.0 / r2),
        9 => (s(0, x) - s(z, x)).scale(1.0 / r2),
        10 => (s(y, 0) - s(y, z)).scale(1.0 / r2),
        11 => (s(0, y) - s(z, y)).scale(1.0 / r2),
        12 => (s(x, x) + s(y, y)).scale(1.0 / r2),
        13 => (s(x, y) - s(y, x)).scale(1.0 / r2),
        14 => (s(z, 0) - s(0, z)).scale(1.0 / r2),
        15 => (s(z, 0) + s(0, z) - s(z, z).scale(2.0)).scale(1.0 / (2.0 * 6f64.sqrt())),
        _ => panic!("tau index {i} out of range"),
    }
}

/// Hilbert–Schmidt inner product `tr(A†B)`.
pub fn matrix_inner(a: &ComplexMatrix4, b: &ComplexMatrix4) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &ComplexMatrix4) -> C64 {
    m.trace()
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_error(m: &ComplexMatrix4) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for col in r..4 {
            worst = worst.max((m[(r, col)] - m[(col, r)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &ComplexMatrix4) -> ComplexMatrix4 {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &ComplexMatrix4, b: &ComplexMatrix4) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix4) -> (Vector4<f64>, ComplexMatrix4) {
    let eig = hermitize(m).symmetric_eigen();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector4::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let vectors = ComplexMatrix4::from_fn(|r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

fn psd_function(m: &ComplexMatrix4, f: impl Fn(f64) -> f64) -> ComplexMatrix4 {
    let (vals, vecs) = hermitian_eigen(m);
    let d = ComplexMatrix4::from_diagonal(&vals.map(|v| c(f(v), 0.0)));
    vecs * d * vecs.adjoint()
}

/// Expansion coefficients in the `D_k` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliCoefficients(pub [f64; 16]);

impl PauliCoefficients {
    pub fn zero() -> Self {
        Self([0.0; 16])
    }

    /// Coefficient of `σ_{1i} σ_{2j} / 2`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[4 * i + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Coefficients `k = 1..15`, i.e. the traceless part.
    pub fn traceless(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        out.copy_from_slice(&self.0[1..]);
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

impl Index<usize> for PauliCoefficients {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Expansion coefficients in the `τ` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauCoefficients(pub [f64; 16]);

impl TauCoefficients {
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    /// `Σ_{i ∈ range} m_i²`.
    pub fn partial_norm_sq(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        self.0[range].iter().map(|x| x * x).sum()
    }
}

impl Index<usize> for TauCoefficients {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Complex coefficients in the `D_k` basis; valid for any operator.
pub fn pauli_expand_complex(m: &ComplexMatrix4) -> [C64; 16] {
    let table = d_table();
    std::array::from_fn(|k| matrix_inner(&table[k], m))
}

/// Real `D_k` coefficients of a Hermitian operator.
pub fn pauli_expand(m: &ComplexMatrix4) -> Result<PauliCoefficients> {
    let err = hermiticity_error(m);
    if err > ALG_TOL {
        return Err(TomoError::NotHermitian(err));
    }
    Ok(PauliCoefficients(pauli_expand_complex(m).map(|z| z.re)))
}

pub fn pauli_assemble(coeffs: &PauliCoefficients) -> ComplexMatrix4 {
    let table = d_table();
    (0..16).fold(ComplexMatrix4::zeros(), |acc, k| acc + table[k].scale(coeffs.0[k]))
}

pub fn tau_expand(m: &ComplexMatrix4) -> Result<TauCoefficients> {
    let err = hermiticity_error(m);
    if err > ALG_TOL {
        return Err(TomoError::NotHermitian(err));
    }
    Ok(TauCoefficients(std::array::from_fn(|i| {
        matrix_inner(&tau_basis(i), m).re
    })))
}

/// A normalized two-qubit pure state in canonical global phase: the first
/// nonzero amplitude is real and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amps: Vector4<C64>,
}

impl PureState {
    /// Validates normalization (within [`ALG_TOL`]) and canonicalizes the phase.
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        let v = Vector4::from(amps);
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > ALG_TOL {
            return Err(TomoError::NotNormalized(n2));
        }
        Ok(Self::canonical(v))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: Vector4<C64>) -> Result<Self> {
        let n = v.norm();
        if n < 1e-14 {
            return Err(TomoError::NotNormalized(n * n));
        }
        Ok(Self::canonical(v.unscale(n)))
    }

    fn canonical(v: Vector4<C64>) -> Self {
        let lead = v.iter().copied().find(|a| a.norm() > ALG_TOL);
        let amps = match lead {
            Some(a) => v * (a.conj() / a.norm()),
            None => v,
        };
        Self { amps }
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Vector4::zeros();
        v[i] = c(1.0, 0.0);
        Self { amps: v }
    }

    pub fn up_up() -> Self {
        Self::basis(0)
    }

    pub fn up_down() -> Self {
        Self::basis(1)
    }

    pub fn down_up() -> Self {
        Self::basis(2)
    }

    pub fn down_down() -> Self {
        Self::basis(3)
    }

    /// `(|↑↓⟩ − |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: Vector4::new(c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)) }
    }

    /// Product state `|q1⟩ ⊗ |q2⟩` of two normalized single-spin states.
    pub fn product(q1: [C64; 2], q2: [C64; 2]) -> Result<Self> {
        Self::new([q1[0] * q2[0], q1[0] * q2[1], q1[1] * q2[0], q1[1] * q2[1]])
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> ComplexMatrix4 {
        self.amps * self.amps.adjoint()
    }

    /// Applies a matrix and re-canonicalizes. The matrix is assumed unitary.
    pub fn evolve(&self, u: &ComplexMatrix4) -> Self {
        Self::canonical(u * self.amps)
    }

    /// Equality modulo global phase.
    pub fn same_ray(&self, other: &PureState, tol: f64) -> bool {
        (1.0 - self.inner(other).norm_sqr()).abs() < tol
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .amps
            .iter()
            .map(|a| format!("{:+.6}{:+.6}i", a.re, a.im))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix4,
}

pub(crate) fn validate_state_operator(m: &ComplexMatrix4) -> Result<()> {
    let herr = hermiticity_error(m);
    if herr > ALG_TOL {
        return Err(TomoError::NotHermitian(herr));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > ALG_TOL || tr.im.abs() > ALG_TOL {
        return Err(TomoError::BadTrace(tr.re));
    }
    let (vals, _) = hermitian_eigen(m);
    if vals[0] < -PSD_TOL {
        return Err(TomoError::NotPsd(vals[0]));
    }
    Ok(())
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix4) -> Result<Self> {
        validate_state_operator(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: ComplexMatrix4::identity().scale(0.25) }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self { matrix: state.projector() }
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        matrix_inner(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vector4<f64> {
        hermitian_eigen(&self.matrix).0
    }

    pub fn pauli_coefficients(&self) -> PauliCoefficients {
        pauli_expand(&self.matrix).expect("validated density matrix is Hermitian")
    }

    /// `tr(P ρ)` for a Hermitian operator `P`.
    pub fn expectation(&self, op: &ComplexMatrix4) -> f64 {
        matrix_inner(op, &self.matrix).re
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.matrix, &other.matrix)
    }
}

/// `½ ‖A − B‖₁` for Hermitian `A`, `B`.
pub fn trace_distance(a: &ComplexMatrix4, b: &ComplexMatrix4) -> f64 {
    let (vals, _) = hermitian_eigen(&(a - b));
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest eigenvalue above which an operator counts as rank one.
const RANK_ONE_TOL: f64 = 1e-12;

/// Uhlmann fidelity `tr √(√P Q √P)` of two unit-trace PSD operators.
///
/// If either argument is (numerically) pure the closed form `√⟨φ|Q|φ⟩` is
/// used, which avoids the `√ε` blow-up of near-zero eigenvalues.
pub fn state_fidelity(p: &ComplexMatrix4, q: &ComplexMatrix4) -> Result<f64> {
    validate_state_operator(p)?;
    validate_state_operator(q)?;
    let (pv, pvec) = hermitian_eigen(p);
    let (qv, qvec) = hermitian_eigen(q);
    if pv[3] > 1.0 - RANK_ONE_TOL {
        let phi = pvec.column(3).into_owned();
        let overlap = (phi.adjoint() * q * phi)[(0, 0)].re;
        return Ok(overlap.max(0.0).sqrt().min(1.0));
    }
    if qv[3] > 1.0 - RANK_ONE_TOL {
        let phi = qvec.column(3).into_owned();
        let overlap = (phi.adjoint() * p * phi)[(0, 0)].re;
        return Ok(overlap.max(0.0).sqrt().min(1.0));
    }
    let sqrt_p = psd_function(p, |v| if v > 1e-15 { v.sqrt() } else { 0.0 });
    let inner = sqrt_p * q * sqrt_p;
    let (vals, _) = hermitian_eigen(&inner);
    Ok(vals
        .iter()
        .map(|&v| if v > 1e-15 { v.sqrt() } else { 0.0 })
        .sum::<f64>()
        .min(1.0))
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

/// Haar-random pure state.
pub fn haar_state(rng: &mut ChaCha8Rng) -> PureState {
    loop {
        let v = Vector4::from_fn(|_, _| gaussian_complex(rng));
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// Random density matrix from the induced (Hilbert–Schmidt for rank 4)
/// measure: `G G† / tr(G G†)` with `G` a 4 × `rank` complex Ginibre matrix.
pub fn random_density(seed: u64, rank: usize) -> Result<DensityMatrix> {
    if !(1..=4).contains(&rank) {
        return Err(TomoError::InvalidRank(rank));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ComplexMatrix4::zeros();
    for _ in 0..rank {
        let g = Vector4::from_fn(|_, _| gaussian_complex(&mut rng));
        m += g * g.adjoint();
    }
    let tr = m.trace().re;
    let m = hermitize(&m.unscale(tr));
    // Rounding can leave the trace a few ulps off.
    let fix = 1.0 / m.trace().re;
    DensityMatrix::new(m.scale(fix))
}
