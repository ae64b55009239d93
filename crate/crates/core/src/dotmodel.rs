//! Two-electron double-dot Hamiltonian in the six-state space
//! `{|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩, |S(2,0)⟩, |S(0,2)⟩}`.
//!
//! Charging energies are `U + ε` for `(2,0)` and `U − ε` for `(0,2)`, so the
//! `(0,2)` singlet becomes the ground state for `ε > U`. Hopping couples the
//! `(1,1)` singlet to each doubly occupied singlet with amplitude `√2 t`;
//! Zeeman fields act only on the `(1,1)` block.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::par;
use crate::qmath::{c, pauli_product, ComplexMatrix4, PureState, C64};
use crate::quorum::Projector;

pub type Matrix6 = SMatrix<C64, 6, 6>;
type Vector6 = SVector<C64, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DotParams {
    pub epsilon: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub t: f64,
    pub h1: [f64; 3],
    pub h2: [f64; 3],
}

impl DotParams {
    pub fn new(epsilon: f64, u: f64, t: f64, h1: [f64; 3], h2: [f64; 3]) -> Result<Self> {
        let p = Self { epsilon, u, t, h1, h2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.epsilon, self.u, self.t]
            .into_iter()
            .chain(self.h1)
            .chain(self.h2);
        if !all.into_iter().all(f64::is_finite) {
            return Err(TomoError::InvalidArgument("dot parameters must be finite".into()));
        }
        if self.u <= 0.0 {
            return Err(TomoError::InvalidArgument(format!("U must be positive, got {}", self.u)));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self { t, ..*self }
    }

    /// Illustrative parameters: `|h_z| ≫ |Δh_z| ≫ 4t²/U`, both negative,
    /// with a slight tilt of the second dot's field.
    pub fn demo() -> Self {
        Self {
            epsilon: 0.0,
            u: 1.0,
            t: 0.02,
            h1: [0.0, 0.0, -0.06],
            h2: [0.0005, 0.0, -0.045],
        }
    }
}

/// Spin-to-charge conversion protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepProtocol {
    /// Slow sweep: `|T₊⟩ = |↑↑⟩` is carried adiabatically into `(0,2)`.
    SlowAdiabatic,
    /// Slow up to the `S`–`T₊` anticrossing, then fast through it.
    SlowThenFast,
    /// Fast throughout: the singlet is converted.
    Fast,
}

impl SweepProtocol {
    pub const ALL: [SweepProtocol; 3] =
        [SweepProtocol::SlowAdiabatic, SweepProtocol::SlowThenFast, SweepProtocol::Fast];

    /// The `(1,1)` state that ends up in `(0,2)`.
    pub fn target_state(self) -> PureState {
        match self {
            SweepProtocol::SlowAdiabatic => PureState::up_up(),
            SweepProtocol::SlowThenFast => PureState::up_down(),
            SweepProtocol::Fast => PureState::singlet(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepProtocol::SlowAdiabatic => "slow-adiabatic",
            SweepProtocol::SlowThenFast => "slow-then-fast",
            SweepProtocol::Fast => "fast",
        }
    }
}

/// Regime in which [`sweep_projector`] applies. Recorded, not checked.
pub const SWEEP_REGIME: &str = "|h_z| >> |dh_z| >> 4t^2/U";

/// Projector implemented by charge readout after the given sweep.
pub fn sweep_projector(proto: SweepProtocol) -> Projector {
    let label = match proto {
        SweepProtocol::SlowAdiabatic => "P_uu",
        SweepProtocol::SlowThenFast => "P_ud",
        SweepProtocol::Fast => "P_S",
    };
    Projector::from_state(&proto.target_state(), label, None)
}

pub fn zeeman4(h1: [f64; 3], h2: [f64; 3]) -> ComplexMatrix4 {
    (0..3).fold(ComplexMatrix4::zeros(), |acc, a| {
        acc + pauli_product(a + 1, 0).scale(h1[a]) + pauli_product(0, a + 1).scale(h2[a])
    })
}

pub fn hamiltonian6(p: &DotParams) -> Matrix6 {
    let mut h = Matrix6::zeros();
    let z = zeeman4(p.h1, p.h2);
    for r in 0..4 {
        for col in 0..4 {
            h[(r, col)] = z[(r, col)];
        }
    }
    h[(4, 4)] = c(p.u + p.epsilon, 0.0);
    h[(5, 5)] = c(p.u - p.epsilon, 0.0);
    // √2 t ⟨S(1,1)|·⟩ with |S⟩ = (|↑↓⟩ − |↓↑⟩)/√2.
    for d in [4, 5] {
        h[(d, 1)] = c(p.t, 0.0);
        h[(d, 2)] = c(-p.t, 0.0);
        h[(1, d)] = c(p.t, 0.0);
        h[(2, d)] = c(-p.t, 0.0);
    }
    h
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn eigen6(h: &Matrix6) -> ([f64; 6], Matrix6) {
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: [usize; 6] = std::array::from_fn(|i| i);
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.map(|i| eig.eigenvalues[i]);
    let vecs = Matrix6::from_fn(|r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

pub fn spectrum(p: &DotParams) -> [f64; 6] {
    eigen6(&hamiltonian6(p)).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeEstimate {
    pub j: f64,
    /// `false` when `|t| > 0.1 · min(|U−ε|, |U+ε|)`.
    pub valid: bool,
}

/// Effective exchange `J = 4t²U/(U²−ε²)` from the Schrieffer–Wolff reduction.
pub fn exchange_j(p: &DotParams) -> Result<ExchangeEstimate> {
    let denom = p.u * p.u - p.epsilon * p.epsilon;
    if denom.abs() <= 1e-14 * p.u * p.u {
        return Err(TomoError::ExchangePole);
    }
    let gap = (p.u - p.epsilon).abs().min((p.u + p.epsilon).abs());
    Ok(ExchangeEstimate {
        j: 4.0 * p.t * p.t * p.u / denom,
        valid: p.t.abs() <= 0.1 * gap,
    })
}

/// Exact `E(T₀) − E(S-like)` at zero field: `T₀` is decoupled at energy 0,
/// and the singlet-like level is the eigenstate with the largest `(1,1)`
/// singlet weight.
pub fn exact_singlet_triplet_splitting(p: &DotParams) -> f64 {
    let p0 = DotParams { h1: [0.0; 3], h2: [0.0; 3], ..*p };
    let (vals, vecs) = eigen6(&hamiltonian6(&p0));
    let s = singlet11();
    let best = (0..6)
        .max_by(|&a, &b| {
            let wa = s.dotc(&vecs.column(a)).norm_sqr();
            let wb = s.dotc(&vecs.column(b)).norm_sqr();
            wa.total_cmp(&wb)
        })
        .expect("six levels");
    -vals[best]
}

fn singlet11() -> Vector6 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Vector6::zeros();
    v[1] = c(h, 0.0);
    v[2] = c(-h, 0.0);
    v
}

fn weight_in(v: &Vector6, idx: &[usize]) -> f64 {
    idx.iter().map(|&i| v[i].norm_sqr()).sum()
}

/// Triplet subspace `{|↑↑⟩, |T₀⟩, |↓↓⟩}` weight of a six-component vector.
pub fn triplet_weight(v: &[C64; 6]) -> f64 {
    let t0 = (v[1] + v[2]).norm_sqr() / 2.0;
    v[0].norm_sqr() + t0 + v[3].norm_sqr()
}

/// Eigenvalues per grid point, with levels tracked across the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub eps: Vec<f64>,
    /// `levels[i][k]`: energy of tracked level `k` at `eps[i]`.
    pub levels: Vec<[f64; 6]>,
}

impl SpectrumTable {
    /// `eps,E1..E6`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,E1,E2,E3,E4,E5,E6\n");
        for (e, row) in self.eps.iter().zip(&self.levels) {
            out.push_str(&format!("{e:.16e}"));
            for v in row {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn level(&self, k: usize) -> Vec<f64> {
        self.levels.iter().map(|r| r[k]).collect()
    }
}

/// Best assignment of new eigenvectors to previous ones by overlap.
fn best_permutation(overlap: &[[f64; 6]; 6]) -> [usize; 6] {
    fn search(
        row: usize,
        used: &mut [bool; 6],
        cur: &mut [usize; 6],
        score: f64,
        best: &mut (f64, [usize; 6]),
        o: &[[f64; 6]; 6],
    ) {
        if row == 6 {
            if score > best.0 {
                *best = (score, *cur);
            }
            return;
        }
        for col in 0..6 {
            if !used[col] {
                used[col] = true;
                cur[row] = col;
                search(row + 1, used, cur, score + o[row][col], best, o);
                used[col] = false;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, [0, 1, 2, 3, 4, 5]);
    search(0, &mut [false; 6], &mut [0; 6], 0.0, &mut best, overlap);
    best.1
}

/// Spectrum over a detuning grid. Levels start in ascending order at the
/// first grid point and are then followed by eigenvector overlap, so true
/// crossings are not turned into artificial anticrossings.
pub fn spectrum_sweep(p: &DotParams, eps_grid: &[f64]) -> Result<SpectrumTable> {
    if let Some(e) = eps_grid.iter().find(|e| !e.is_finite()) {
        return Err(TomoError::InvalidArgument(format!("non-finite grid value {e}")));
    }
    let decomps = par::map_slice(eps_grid, |&e| eigen6(&hamiltonian6(&p.with_epsilon(e))));
    let mut levels = Vec::with_capacity(eps_grid.len());
    let mut prev_vecs: Option<Matrix6> = None;
    for (vals, vecs) in decomps {
        let (row, tracked) = match prev_vecs {
            None => (vals, vecs),
            Some(prev) => {
                let mut o = [[0.0; 6]; 6];
                for (a, orow) in o.iter_mut().enumerate() {
                    for (b, x) in orow.iter_mut().enumerate() {
                        *x = prev.column(a).dotc(&vecs.column(b)).norm_sqr();
                    }
                }
                let perm = best_permutation(&o);
                let row = perm.map(|b| vals[b]);
                let tracked = Matrix6::from_fn(|r, a| vecs[(r, perm[a])]);
                (row, tracked)
            }
        };
        levels.push(row);
        prev_vecs = Some(tracked);
    }
    Ok(SpectrumTable { eps: eps_grid.to_vec(), levels })
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimum over `ε ∈ [lo, hi]` of the splitting between the two eigenstates
/// with the largest weight on `{S(1,1), S(0,2)}`. Returns `(ε*, gap)`.
pub fn singlet_anticrossing_gap(p: &DotParams, lo: f64, hi: f64) -> (f64, f64) {
    let split = |e: f64| {
        let (vals, vecs) = eigen6(&hamiltonian6(&p.with_epsilon(e)));
        let s = singlet11();
        let mut w: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let col: Vector6 = vecs.column(k).into_owned();
                let ws = s.dotc(&col).norm_sqr() + weight_in(&col, &[5]);
                (ws, vals[k])
            })
            .collect();
        w.sort_by(|a, b| b.0.total_cmp(&a.0));
        (w[0].1 - w[1].1).abs()
    };
    golden_min(lo, hi, split)
}

/// Minimum over `ε ∈ [lo, hi]` of `E_{k+1} − E_k` (ascending order).
/// A coarse scan brackets the minimum before golden-section refinement.
pub fn min_level_gap(p: &DotParams, k: usize, lo: f64, hi: f64) -> (f64, f64) {
    assert!(k < 5, "level index {k} out of range");
    let gap = |e: f64| {
        let v = spectrum(&p.with_epsilon(e));
        v[k + 1] - v[k]
    };
    let grid = linspace(lo, hi, 401);
    let step = grid[1] - grid[0];
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| gap(*a).total_cmp(&gap(*b)))
        .expect("non-empty grid");
    golden_min((best - step).max(lo), (best + step).min(hi), gap)
}
