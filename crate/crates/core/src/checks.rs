//! Named numerical checks of the analytic results the library relies on.
//! Each check reports the measured quantity alongside its target, so a
//! failing run says which identity broke and by how much.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dotmodel::{
    exact_singlet_triplet_splitting, exchange_j, eigen6, hamiltonian6, singlet_anticrossing_gap, triplet_weight,
    DotParams,
};
use crate::error::{Result, TomoError};
use crate::gates::{evolve_operator, gate_unitary, singlet_projector, Gate};
use crate::measure::{degrade_projector, plan_shots, probabilities};
use crate::qmath::{max_abs_diff, pauli_product, random_density, ComplexMatrix4, PureState, C64};
use crate::quorum::{
    accessible_subspace_dimension, det_upper_bound, gram_schmidt_det_check, james_quorum, mub_bases,
    mub_closed_form, mub_quorum, orthogonality_witness, pmatrix, random_quorum, random_unbiased_state, Projector,
    ProjectorKind, Quorum,
};
use crate::reconstruct::linear_from_frequencies;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn near(id: &'static str, measured: f64, expected: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            id,
            passed: (measured - expected).abs() <= tolerance,
            measured,
            expected,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(id: &'static str, detail: impl Into<String>) -> Self {
        Self { id, passed: false, measured: f64::NAN, expected: f64::NAN, tolerance: 0.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn s(i: usize, j: usize) -> ComplexMatrix4 {
    pauli_product(i, j)
}

/// `e^{iφP_S} P_↑↓ e^{−iφP_S}
///   = (𝟙 − σ1zσ2z + cosφ(σ1z − σ2z) + sinφ(σ1xσ2y − σ1yσ2x))/4`.
pub fn exchange_closed_form(phi: f64) -> ComplexMatrix4 {
    (s(0, 0) - s(3, 3) + (s(3, 0) - s(0, 3)).scale(phi.cos()) + (s(1, 2) - s(2, 1)).scale(phi.sin())).scale(0.25)
}

/// Gradient evolution of the singlet projector:
/// `(𝟙 − σ1zσ2z − cosϑ(σ1xσ2x + σ1yσ2y) − sinϑ(σ1xσ2y − σ1yσ2x))/4`.
pub fn gradient_closed_form(vartheta: f64) -> ComplexMatrix4 {
    (s(0, 0) - s(3, 3) - (s(1, 1) + s(2, 2)).scale(vartheta.cos()) - (s(1, 2) - s(2, 1)).scale(vartheta.sin()))
        .scale(0.25)
}

/// Angles at which the evolution formulas are checked.
pub const EVOLUTION_ANGLES: [f64; 4] = [0.0, FRAC_PI_4, FRAC_PI_2, PI];

/// Largest deviation of the conjugated projectors from the closed forms.
pub fn evolution_errors() -> Result<(f64, f64)> {
    let pud = PureState::up_down().projector();
    let ps = singlet_projector();
    let mut ex: f64 = 0.0;
    let mut gr: f64 = 0.0;
    for a in EVOLUTION_ANGLES {
        let e = evolve_operator(&gate_unitary(&Gate::exchange(a)), &pud)?;
        ex = ex.max(max_abs_diff(&e, &exchange_closed_form(a)));
        let g = evolve_operator(&gate_unitary(&Gate::gradient(a)), &ps)?;
        gr = gr.max(max_abs_diff(&g, &gradient_closed_form(a)));
    }
    Ok((ex, gr))
}

/// Largest deviation of the 400 overlaps `|⟨φ_jk|φ_lm⟩|²` among the MUB
/// states from `δ_jl δ_km + (1 − δ_jl)/4`.
pub fn mub_condition_error() -> f64 {
    let bases = mub_bases();
    let mut worst: f64 = 0.0;
    for (j, bj) in bases.iter().enumerate() {
        for (k, a) in bj.iter().enumerate() {
            for (l, bl) in bases.iter().enumerate() {
                for (m, b) in bl.iter().enumerate() {
                    let want = if j == l {
                        if k == m { 1.0 } else { 0.0 }
                    } else {
                        0.25
                    };
                    worst = worst.max((a.inner(b).norm_sqr() - want).abs());
                }
            }
        }
    }
    worst
}

/// MUB quorum with member `index` (0-based) rotated by `angle` about `σ_{2x}`,
/// circuits unchanged. Used to confirm that `verify` detects a corrupted
/// quorum. Members that are `σ_{2x}` eigenstates are left invariant.
pub fn perturbed_mub(index: usize, angle: f64) -> Result<Quorum> {
    let q = mub_quorum()?;
    let rot = ComplexMatrix4::identity().scale(angle.cos()) + s(0, 1).scale(angle.sin()) * C64::i();
    let target = q.projectors().get(index).ok_or_else(|| TomoError::InvalidArgument(format!("quorum index {index} out of range")))?;
    q.map_projectors(|p| {
        if std::ptr::eq(p, target) {
            Projector::new(rot * p.matrix() * rot.adjoint(), p.label(), p.basis_index(), ProjectorKind::IdealPure)
        } else {
            Ok(p.clone())
        }
    })
}

fn zero_field(eps: f64, t: f64) -> Result<DotParams> {
    DotParams::new(eps, 1.0, t, [0.0; 3], [0.0; 3])
}

/// Runs every check against the standard MUB quorum.
pub fn run_all() -> Result<VerifyReport> {
    run_with(&mub_quorum()?)
}

/// Runs every check, taking the quorum-specific ones from `mub`.
pub fn run_with(mub: &Quorum) -> Result<VerifyReport> {
    let mut out = Vec::new();

    match pmatrix(mub) {
        Ok(pm) => out.push(CheckOutcome::near("det_mub", pm.abs_det(), 1.0 / 32.0, 1e-12, "|det P| of the MUB quorum")),
        Err(e) => out.push(CheckOutcome::failed("det_mub", e.to_string())),
    }
    let james = james_quorum()?;
    let pm_james = pmatrix(&james)?;
    out.push(CheckOutcome::near("det_james", pm_james.abs_det(), 1.0 / 512.0, 1e-12, "|det P| of the James quorum"));

    let cross = mub
        .projectors()
        .iter()
        .enumerate()
        .map(|(j, p)| max_abs_diff(p.matrix(), &mub_closed_form(j + 1)))
        .fold(0.0, f64::max);
    out.push(CheckOutcome::near("mub_cross_check", cross, 0.0, 1e-12, "circuit projectors vs closed forms"));

    let esr_ok = match mub.preparations() {
        Some(preps) => preps.iter().enumerate().all(|(j, p)| {
            let want = usize::from(j >= 3);
            p.circuit.esr_count() == want && (p.circuit.esr_angle() - want as f64 * FRAC_PI_4).abs() < 1e-15
        }),
        None => false,
    };
    out.push(CheckOutcome {
        id: "esr_budget",
        passed: esr_ok,
        measured: f64::from(u8::from(esr_ok)),
        expected: 1.0,
        tolerance: 0.0,
        detail: "one ESR pi/4 gate for states 4-15, none for 1-3".into(),
    });

    out.push(CheckOutcome::near("mub_condition", mub_condition_error(), 0.0, 1e-12, "400 pairwise overlaps"));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut states = vec![PureState::up_up()];
    states.extend((0..1000).map(|_| random_unbiased_state(&mut rng)));
    let w = orthogonality_witness(&states)?;
    let mut c = CheckOutcome::near(
        "appendix_b_ratio",
        w.max_deviation,
        0.0,
        1e-10,
        format!("tau partial sums vs 3/8 over {} states; lemma violated: {}", w.entries.len(), w.violates_lemma()),
    );
    c.passed &= w.violates_lemma();
    out.push(c);

    let mut max_det = pm_james.abs_det();
    if let Ok(pm) = pmatrix(mub) {
        max_det = max_det.max(pm.abs_det());
    }
    for seed in 0..100 {
        max_det = max_det.max(pmatrix(&random_quorum(seed)?)?.abs_det());
    }
    out.push(CheckOutcome {
        id: "det_strict_bound",
        passed: max_det < det_upper_bound(),
        measured: max_det,
        expected: det_upper_bound(),
        tolerance: 0.0,
        detail: "largest |det P| over MUB, James and 100 random quorums stays below (3/4)^7.5".into(),
    });

    match (gram_schmidt_det_check(mub), pmatrix(mub)) {
        (Ok(gs), Ok(pm)) => out.push(CheckOutcome::near(
            "gram_schmidt_det",
            gs.det,
            pm.abs_det(),
            1e-12,
            "per-basis Gram-Schmidt product vs LU determinant",
        )),
        (Err(e), _) | (_, Err(e)) => out.push(CheckOutcome::failed("gram_schmidt_det", e.to_string())),
    }

    let d0 = accessible_subspace_dimension(false);
    out.push(CheckOutcome::near("subspace_no_esr", d0 as f64, 5.0, 0.0, "span without ESR"));
    let d1 = accessible_subspace_dimension(true);
    out.push(CheckOutcome::near("subspace_with_esr", d1 as f64, 15.0, 0.0, "span with ESR"));

    let (ex, gr) = evolution_errors()?;
    out.push(CheckOutcome::near("exchange_evolution", ex, 0.0, 1e-12, "exchange conjugation of P_ud"));
    out.push(CheckOutcome::near("gradient_evolution", gr, 0.0, 1e-12, "gradient conjugation of P_S"));

    let mut worst: f64 = 0.0;
    match pmatrix(mub) {
        Ok(pm) => {
            for seed in 0..100 {
                let rho = random_density(seed, 1 + (seed as usize % 4))?;
                let est = linear_from_frequencies(&probabilities(&rho, mub.projectors())?, &pm)?;
                worst = worst.max(max_abs_diff(&est, rho.matrix()));
            }
            out.push(CheckOutcome::near("linear_round_trip", worst, 0.0, 1e-10, "100 random states"));
        }
        Err(e) => out.push(CheckOutcome::failed("linear_round_trip", e.to_string())),
    }

    let n = plan_shots(0.05, 0.05, 1.0)?;
    out.push(CheckOutcome::near("plan_shots", n as f64, 1476.0, 0.0, "delta = P_l = 0.05, f = 1"));

    let half = degrade_projector(&james.projectors()[0], 0.5)?;
    let err = max_abs_diff(half.matrix(), &ComplexMatrix4::identity().scale(0.25));
    out.push(CheckOutcome::near("degrade_half", err, 0.0, 0.0, "f = 1/2 gives I/4 exactly"));

    let mut gap_err: f64 = 0.0;
    for t in [1e-4, 5e-4, 1e-3] {
        let (_, gap) = singlet_anticrossing_gap(&zero_field(0.0, t)?, 0.9, 1.1);
        gap_err = gap_err.max((gap - 2.0 * 2f64.sqrt() * t).abs());
    }
    out.push(CheckOutcome::near("anticrossing_gap", gap_err, 0.0, 1e-8, "S-(0,2) gap vs 2 sqrt(2) |t|"));

    let mut triplet_dev: f64 = 0.0;
    let mut triplet_count_ok = true;
    for t in [0.01, 0.05, 0.1, 0.3] {
        let (vals, vecs) = eigen6(&hamiltonian6(&zero_field(0.3, t)?));
        let mut count = 0;
        for k in 0..6 {
            let v: [C64; 6] = std::array::from_fn(|i| vecs[(i, k)]);
            if triplet_weight(&v) > 0.5 {
                count += 1;
                triplet_dev = triplet_dev.max(vals[k].abs());
            }
        }
        triplet_count_ok &= count == 3;
    }
    let mut c = CheckOutcome::near("triplet_levels", triplet_dev, 0.0, 1e-12, "triplets stay at zero energy for h = 0");
    c.passed &= triplet_count_ok;
    out.push(c);

    let (lo, hi) = exchange_scaling()?;
    out.push(CheckOutcome {
        id: "exchange_j_scaling",
        passed: hi < 10.0 && hi / lo < 1.5,
        measured: hi,
        expected: 10.0,
        tolerance: 0.0,
        detail: format!("relative error / (t/U)^2 ranges over [{lo:.4}, {hi:.4}]"),
    });

    Ok(VerifyReport { checks: out })
}

/// `|J − exact| / exact / (t/U)²` over a grid of `t` at `ε = 0.3U`,
/// returned as (min, max).
pub fn exchange_scaling() -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for t in [1e-3, 3e-3, 1e-2, 3e-2] {
        let p = zero_field(0.3, t)?;
        let exact = exact_singlet_triplet_splitting(&p);
        let j = exchange_j(&p)?.j;
        let r = ((j - exact) / exact).abs() / (t * t);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}
