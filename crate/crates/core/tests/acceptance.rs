//! Acceptance suite: eleven criteria, each printed as one PASS/FAIL line.
//! Runs with its own harness so the report is visible under `cargo test`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dqd_tomo::dotmodel::{eigen6, exchange_j, hamiltonian6, singlet_anticrossing_gap, triplet_weight, DotParams};
use dqd_tomo::gates::{gate_unitary, Gate};
use dqd_tomo::measure::{
    degrade_projector, degrade_quorum, plan_shots, probabilities, simulate_counts, MeasurementPlan, ShotRecord,
};
use dqd_tomo::qmath::{random_density, state_fidelity, tau_basis, ComplexMatrix4, DensityMatrix, PureState, C64};
use dqd_tomo::quorum::{
    accessible_subspace_dimension, james_quorum, mub_bases, mub_quorum, orthogonality_witness, pmatrix, random_quorum,
    Projector,
};
use dqd_tomo::reconstruct::{
    covariance_bound, covariance_predict, degraded_marginal_rho4, linear_from_frequencies, mle_from_frequencies,
    mle_reconstruct, repetition_study, rms_error, sample_covariance, MleOptions,
};
use nalgebra::{DMatrix, Matrix3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// Independent operator algebra, built from scratch so the checks do not
// lean on the library's own basis code.

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pauli2(i: usize) -> [[C64; 2]; 2] {
    let (o, z, ii) = (cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 1.0));
    match i {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -ii], [ii, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// `σ_{1a} ⊗ σ_{2b}` in the basis `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
fn ss(a: usize, b: usize) -> ComplexMatrix4 {
    let (pa, pb) = (pauli2(a), pauli2(b));
    ComplexMatrix4::from_fn(|r, c| pa[r / 2][c / 2] * pb[r % 2][c % 2])
}

const I: usize = 0;
const X: usize = 1;
const Y: usize = 2;
const Z: usize = 3;

/// `(𝟙 + Σ sign σ_{1a}σ_{2b}) / 4`.
fn pauli_sum(terms: &[(usize, usize, f64)]) -> ComplexMatrix4 {
    terms.iter().fold(ss(I, I), |acc, &(a, b, s)| acc + ss(a, b).scale(s)).scale(0.25)
}

fn max_diff(a: &ComplexMatrix4, b: &ComplexMatrix4) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn inner(a: &ComplexMatrix4, b: &ComplexMatrix4) -> C64 {
    (a.adjoint() * b).trace()
}

/// Row `j` of the reconstruction matrix: `tr(P_j σ_aσ_b)/2` over the 15
/// traceless products.
fn oracle_pmatrix_det(projectors: &[Projector]) -> f64 {
    let mut m = DMatrix::<f64>::zeros(15, 15);
    for (j, p) in projectors.iter().enumerate() {
        for k in 1..16 {
            m[(j, k - 1)] = inner(&ss(k / 4, k % 4), p.matrix()).re / 2.0;
        }
    }
    m.determinant()
}

fn singlet_vec() -> Vector4<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(cx(0.0, 0.0), cx(h, 0.0), cx(-h, 0.0), cx(0.0, 0.0))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mub = lib(mub_quorum())?;
    let james = lib(james_quorum())?;
    let d_mub = lib(pmatrix(&mub))?.abs_det();
    let d_james = lib(pmatrix(&james))?.abs_det();
    let elapsed = start.elapsed();
    let o_mub = oracle_pmatrix_det(mub.projectors()).abs();
    let o_james = oracle_pmatrix_det(james.projectors()).abs();
    ensure((d_mub - 1.0 / 32.0).abs() < 1e-12, format!("mub |det| = {d_mub}"))?;
    ensure((d_james - 1.0 / 512.0).abs() < 1e-12, format!("james |det| = {d_james}"))?;
    ensure((o_mub - d_mub).abs() < 1e-12 && (o_james - d_james).abs() < 1e-12, "independent determinant disagrees")?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("|det| mub {d_mub:.15} james {d_james:.15} in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let closed: [&[(usize, usize, f64)]; 15] = [
        &[(Z, I, 1.0), (I, Z, 1.0), (Z, Z, 1.0)],
        &[(Z, I, 1.0), (I, Z, -1.0), (Z, Z, -1.0)],
        &[(Z, I, -1.0), (I, Z, 1.0), (Z, Z, -1.0)],
        &[(X, I, 1.0), (I, X, 1.0), (X, X, 1.0)],
        &[(X, I, -1.0), (I, X, 1.0), (X, X, -1.0)],
        &[(X, I, 1.0), (I, X, -1.0), (X, X, -1.0)],
        &[(Y, I, 1.0), (I, Y, 1.0), (Y, Y, 1.0)],
        &[(Y, I, -1.0), (I, Y, 1.0), (Y, Y, -1.0)],
        &[(Y, I, 1.0), (I, Y, -1.0), (Y, Y, -1.0)],
        &[(Z, X, -1.0), (X, Y, -1.0), (Y, Z, -1.0)],
        &[(Z, X, -1.0), (X, Y, 1.0), (Y, Z, 1.0)],
        &[(Z, X, 1.0), (X, Y, 1.0), (Y, Z, -1.0)],
        &[(Y, X, 1.0), (Z, Y, -1.0), (X, Z, 1.0)],
        &[(Y, X, -1.0), (Z, Y, -1.0), (X, Z, -1.0)],
        &[(Y, X, -1.0), (Z, Y, 1.0), (X, Z, 1.0)],
    ];
    let q = lib(mub_quorum())?;
    let preps = q.preparations().ok_or("mub quorum has no circuits")?;
    let mut worst: f64 = 0.0;
    for (j, (prep, terms)) in preps.iter().zip(closed).enumerate() {
        let target = pauli_sum(terms);
        let from_circuit = prep.state().projector();
        worst = worst.max(max_diff(&from_circuit, &target)).max(max_diff(q.projectors()[j].matrix(), &target));
        let (want, angle) = if j < 3 { (0, 0.0) } else { (1, FRAC_PI_4) };
        ensure(
            prep.circuit.esr_count() == want && (prep.circuit.esr_angle() - angle).abs() < 1e-15,
            format!("state {} uses {} ESR gates", j + 1, prep.circuit.esr_count()),
        )?;
    }
    ensure(worst < 1e-12, format!("max entry deviation {worst:e}"))?;
    Ok(format!("max entry deviation {worst:.2e}; one ESR pi/4 gate in each of states 4-15"))
}

fn criterion_3() -> Outcome {
    let bases = mub_bases();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (j, bj) in bases.iter().enumerate() {
        for (k, a) in bj.iter().enumerate() {
            for (l, bl) in bases.iter().enumerate() {
                for (m, b) in bl.iter().enumerate() {
                    let overlap = a.amplitudes().dotc(b.amplitudes()).norm_sqr();
                    let want = if j == l { f64::from(u8::from(k == m)) } else { 0.25 };
                    worst = worst.max((overlap - want).abs());
                    count += 1;
                }
            }
        }
    }
    ensure(count == 400, format!("{count} overlaps"))?;
    ensure(worst < 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("{count} overlaps, max deviation {worst:.2e}"))
}

fn random_unbiased(rng: &mut ChaCha8Rng) -> PureState {
    let g: Vec<C64> = (0..3).map(|_| cx(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
    let n = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s = 3f64.sqrt() / 2.0 / n;
    PureState::new([cx(0.5, 0.0), g[0] * s, g[1] * s, g[2] * s]).expect("normalized")
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut states = vec![PureState::up_up()];
    states.extend((0..1000).map(|_| random_unbiased(&mut rng)));
    let taus: Vec<ComplexMatrix4> = (0..16).map(tau_basis).collect();
    let mut worst: f64 = 0.0;
    for s in &states[1..] {
        let p = s.projector();
        let part = |r: std::ops::RangeInclusive<usize>| r.map(|i| inner(&taus[i], &p).norm_sqr()).sum::<f64>();
        worst = worst.max((part(2..=7) - 0.375).abs()).max((part(8..=15) - 0.375).abs());
    }
    let report = lib(orthogonality_witness(&states))?;
    ensure(worst < 1e-10, format!("partial sums deviate by {worst:e}"))?;
    ensure(report.max_deviation < 1e-10 && report.violates_lemma(), "library witness disagrees")?;

    let bound = 0.75f64.powf(7.5);
    let mut best: f64 = 0.0;
    let mut quorums = vec![lib(mub_quorum())?, lib(james_quorum())?];
    for seed in 0..100 {
        quorums.push(lib(random_quorum(seed))?);
    }
    for q in &quorums {
        let d = lib(pmatrix(q))?.abs_det();
        ensure(d < bound, format!("{} reaches |det| = {d}", q.name()))?;
        best = best.max(d);
    }
    Ok(format!(
        "1000 states, max deviation {worst:.2e}; largest |det| {best:.4} < {bound:.4} over {} quorums",
        quorums.len()
    ))
}

fn criterion_5() -> Outcome {
    let without = accessible_subspace_dimension(false);
    let with = accessible_subspace_dimension(true);
    ensure(without == 5 && with == 15, format!("dimensions {without} and {with}"))?;
    Ok(format!("dimension {without} without ESR, {with} with ESR"))
}

/// Matrix exponential of `i·a·H` for Hermitian `H`, through its spectrum.
fn expi(h: &ComplexMatrix4, a: f64) -> ComplexMatrix4 {
    let eig = (*h).symmetric_eigen();
    let d = ComplexMatrix4::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, a * l)));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn criterion_6() -> Outcome {
    let ps = singlet_vec() * singlet_vec().adjoint();
    let pud = pauli_sum(&[(Z, I, 1.0), (I, Z, -1.0), (Z, Z, -1.0)]);
    let grad = ss(Z, I) - ss(I, Z);
    let mut worst: f64 = 0.0;
    for a in [0.0, FRAC_PI_4, FRAC_PI_2, PI] {
        let (co, si) = (a.cos(), a.sin());
        let ex_closed = (ss(I, I) - ss(Z, Z) + (ss(Z, I) - ss(I, Z)).scale(co) + (ss(X, Y) - ss(Y, X)).scale(si))
            .scale(0.25);
        let gr_closed = (ss(I, I) - ss(Z, Z) - (ss(X, X) + ss(Y, Y)).scale(co) - (ss(X, Y) - ss(Y, X)).scale(si))
            .scale(0.25);
        let u_ex = expi(&ps, a);
        let u_gr = expi(&grad, a / 4.0);
        worst = worst
            .max(max_diff(&(u_ex * pud * u_ex.adjoint()), &ex_closed))
            .max(max_diff(&(u_gr * ps * u_gr.adjoint()), &gr_closed));
        let lib_ex = gate_unitary(&Gate::exchange(a));
        let lib_gr = gate_unitary(&Gate::gradient(a));
        worst = worst
            .max(max_diff(&(lib_ex * pud * lib_ex.adjoint()), &ex_closed))
            .max(max_diff(&(lib_gr * ps * lib_gr.adjoint()), &gr_closed));
    }
    ensure(worst < 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.2e} over 4 angles"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let q = lib(mub_quorum())?;
    let pm = lib(pmatrix(&q))?;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let rho = lib(random_density(seed, 1 + (seed as usize % 4)))?;
        let freqs: Vec<f64> = q.projectors().iter().map(|p| inner(p.matrix(), rho.matrix()).re).collect();
        worst = worst.max(max_diff(&lib(linear_from_frequencies(&freqs, &pm))?, rho.matrix()));
    }
    ensure(worst < 1e-10, format!("exact inversion error {worst:e}"))?;

    let rho = lib(random_density(77, 4))?;
    let truth = rho.pauli_coefficients().traceless();
    let ns = [1_000u64, 10_000, 100_000];
    let mut pts = Vec::new();
    for n in ns {
        let plan = lib(MeasurementPlan::uniform(&q, n, 7))?;
        let samples = lib(repetition_study(&rho, &plan, &pm, 400))?;
        pts.push(((n as f64).ln(), rms_error(&samples, &truth).ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let elapsed = start.elapsed();
    ensure((slope + 0.5).abs() <= 0.1, format!("rms slope {slope}"))?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("exact error {worst:.2e}; rms slope {slope:.4}; {:.1} s", elapsed.as_secs_f64()))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let q = lib(mub_quorum())?;
    let pm = lib(pmatrix(&q))?;
    let rho = lib(random_density(5, 4))?;
    let n = 1000;
    let plan = lib(MeasurementPlan::uniform(&q, n, 99))?;
    let samples = lib(repetition_study(&rho, &plan, &pm, 10_000))?;
    let (_, empirical) = lib(sample_covariance(&samples))?;
    let predicted = lib(covariance_predict(&rho, q.projectors(), &pm, plan.shots()))?;
    let max_rel = (0..15)
        .map(|k| ((empirical[(k, k)] - predicted[(k, k)]) / predicted[(k, k)]).abs())
        .fold(0.0, f64::max);
    let det = pm.abs_det();
    let bound = 0.06682 / (n as f64 * det * det);
    let lib_bound = covariance_bound(n, det);
    let largest = predicted.amax();
    let elapsed = start.elapsed();
    ensure((lib_bound - bound).abs() <= 1e-4 * bound, format!("library bound {lib_bound} vs {bound}"))?;
    ensure(max_rel < 0.10, format!("max relative diagonal error {max_rel}"))?;
    ensure(largest <= bound, format!("entry {largest} exceeds bound {bound}"))?;
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!(
        "max relative diagonal error {max_rel:.4}; largest |C| {largest:.3e} <= {bound:.3e}; {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_9() -> Outcome {
    let q = lib(mub_quorum())?;
    let quarter = ComplexMatrix4::identity().scale(0.25);
    for p in q.projectors() {
        let d = lib(degrade_projector(p, 0.5))?;
        ensure(*d.matrix() == quarter, format!("{} at f = 1/2 is not I/4", p.label()))?;
    }

    let f = 0.8;
    let degraded = lib(degrade_quorum(&q, f))?;
    let rho = lib(random_density(8, 2))?;
    let truth = inner(&ss(X, I).scale(0.5), rho.matrix()).re;
    let reps = 1000u64;
    let vals: Vec<f64> = (0..reps)
        .map(|r| {
            let plan = MeasurementPlan::uniform(&degraded, 1000, 31 + r).expect("plan");
            let recs: Vec<ShotRecord> = simulate_counts(&rho, &plan).expect("counts");
            degraded_marginal_rho4(recs[3].estimate, recs[5].estimate, f).expect("formula")
        })
        .collect();
    let nf = reps as f64;
    let mean = vals.iter().sum::<f64>() / nf;
    let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0) / nf).sqrt();
    let z = (mean - truth) / se;
    ensure(z.abs() < 3.0, format!("rho4 mean {mean} vs {truth}, z = {z}"))?;

    let dp = (4.0 - 1.0) * 0.05 / (3.0 * SQRT_2);
    let oracle = ((2.0f64 / 0.05).ln() / (2.0 * dp * dp)).ceil() as u64;
    let n = lib(plan_shots(0.05, 0.05, 1.0))?;
    ensure(n == 1476 && oracle == 1476, format!("plan_shots gives {n}, oracle {oracle}"))?;
    Ok(format!("f = 1/2 gives I/4 exactly; rho4 z = {z:.3} over {reps} reps; N_run = {n}"))
}

/// Singlet block `{S(1,1), (2,0), (0,2)}` at zero field.
fn singlet_block(eps: f64, u: f64, t: f64) -> Matrix3<f64> {
    let c = SQRT_2 * t;
    Matrix3::new(0.0, c, c, c, u + eps, 0.0, c, 0.0, u - eps)
}

fn criterion_10() -> Outcome {
    let mut worst_gap: f64 = 0.0;
    for t in [1e-4, 3e-4, 1e-3] {
        let p = lib(DotParams::new(0.0, 1.0, t, [0.0; 3], [0.0; 3]))?;
        let (_, gap) = singlet_anticrossing_gap(&p, 0.5, 1.5);
        worst_gap = worst_gap.max((gap - 2.0 * SQRT_2 * t).abs());
    }
    ensure(worst_gap < 1e-8, format!("anticrossing gap off by {worst_gap:e}"))?;

    let (eps, u) = (0.3, 1.0);
    let ts = [1e-3, 3e-3, 1e-2, 3e-2];
    let mut pts = Vec::new();
    for t in ts {
        let exact = -singlet_block(eps, u, t).symmetric_eigenvalues().min();
        let j = lib(exchange_j(&lib(DotParams::new(eps, u, t, [0.0; 3], [0.0; 3]))?))?.j;
        pts.push((t, ((j - exact) / exact).abs()));
    }
    let ratios: Vec<f64> = pts.iter().map(|(t, r)| r / (t * t / (u * u))).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    ensure(hi < 10.0 && hi / lo < 1.5, format!("relative error / (t/U)^2 spans [{lo}, {hi}]"))?;

    // With t = 0 and no field the whole (1,1) sector sits at zero energy and
    // the singlet is degenerate with the triplets, so the comparison starts
    // from that value and uses t > 0 where the triplets can be identified.
    let mut reference: Option<Vec<f64>> = Some(vec![0.0; 3]);
    let mut worst_triplet: f64 = 0.0;
    for t in [0.01, 0.05, 0.2, 0.5] {
        let p = lib(DotParams::new(0.4, 1.0, t, [0.0; 3], [0.0; 3]))?;
        let (vals, vecs) = eigen6(&hamiltonian6(&p));
        let trip: Vec<f64> = (0..6)
            .filter(|&k| triplet_weight(&std::array::from_fn(|i| vecs[(i, k)])) > 0.5)
            .map(|k| vals[k])
            .collect();
        ensure(trip.len() == 3, format!("{} triplet levels at t = {t}", trip.len()))?;
        match &reference {
            None => reference = Some(trip),
            Some(r) => {
                for (a, b) in r.iter().zip(&trip) {
                    worst_triplet = worst_triplet.max((a - b).abs());
                }
            }
        }
    }
    ensure(worst_triplet < 1e-12, format!("triplet levels move by {worst_triplet:e}"))?;
    Ok(format!(
        "gap error {worst_gap:.2e}; J relative error / (t/U)^2 in [{lo:.4}, {hi:.4}]; triplet drift {worst_triplet:.2e}"
    ))
}

fn is_state(rho: &DensityMatrix) -> bool {
    let m = rho.matrix();
    let herm = max_diff(m, &m.adjoint()) < 1e-12;
    let tr = (m.trace().re - 1.0).abs() < 1e-12;
    let psd = (*m).symmetric_eigen().eigenvalues.iter().all(|&l| l >= -1e-10);
    herm && tr && psd
}

fn criterion_11() -> Outcome {
    let mut checked = 0;
    for q in [lib(mub_quorum())?, lib(james_quorum())?] {
        for s in [0u64, 250] {
            let recs: Vec<ShotRecord> =
                q.projectors().iter().map(|p| ShotRecord::new(p.label(), 250, s, 0).expect("record")).collect();
            let res = lib(mle_reconstruct(&recs, q.projectors()))?;
            ensure(is_state(&res.rho), format!("degenerate records on {} give a non-state", q.name()))?;
            checked += 1;
        }
        for seed in 0..20 {
            let rho = lib(random_density(seed, 1 + (seed as usize % 4)))?;
            let recs = lib(simulate_counts(&rho, &lib(MeasurementPlan::uniform(&q, 200, seed))?))?;
            let res = lib(mle_reconstruct(&recs, q.projectors()))?;
            ensure(is_state(&res.rho), format!("sampled seed {seed} gives a non-state"))?;
            checked += 1;
        }
    }
    let mut worst_fid: f64 = 1.0;
    let q = lib(mub_quorum())?;
    let exact_inputs: Vec<DensityMatrix> = [PureState::singlet(), PureState::up_up()]
        .iter()
        .map(DensityMatrix::from_pure)
        .chain((0..20).map(|s| random_density(100 + s, 1 + (s as usize % 4)).expect("state")))
        .collect();
    for rho in &exact_inputs {
        let freqs = lib(probabilities(rho, q.projectors()))?;
        let res = lib(mle_from_frequencies(q.projectors(), &freqs, &[1.0; 15], MleOptions::default()))?;
        ensure(is_state(&res.rho), "exact input gives a non-state")?;
        worst_fid = worst_fid.min(lib(state_fidelity(rho.matrix(), res.rho.matrix()))?);
    }
    ensure(worst_fid > 1.0 - 1e-6, format!("exact-input fidelity {worst_fid}"))?;
    Ok(format!("{checked} sampled/degenerate fits valid; min exact-input fidelity {worst_fid:.9}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("determinants", criterion_1),
        ("quorum cross-check", criterion_2),
        ("MUB condition", criterion_3),
        ("orthogonality witness", criterion_4),
        ("no-ESR subspace", criterion_5),
        ("evolution formulas", criterion_6),
        ("reconstruction round-trip", criterion_7),
        ("covariance", criterion_8),
        ("degradation and planning", criterion_9),
        ("double-dot physics", criterion_10),
        ("maximum likelihood", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || id.contains(p.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
