use serde::Serialize;
use serde_json::{json, Value};

use dqd_tomo::checks::{self, VerifyReport};
use dqd_tomo::dotmodel::{exchange_j, linspace, singlet_anticrossing_gap, spectrum_sweep, sweep_projector};
use dqd_tomo::measure::{
    average_projector, degrade_quorum, probabilities, records_to_csv, simulate_counts, simulate_counts_rep,
    MeasurementPlan, ShotRecord,
};
use dqd_tomo::par;
use dqd_tomo::qmath::{max_abs_diff, pauli_expand, state_fidelity, trace_distance, ComplexMatrix4, DensityMatrix};
use dqd_tomo::quorum::{mat15_csv, pmatrix, Mat15, Projector, ProjectorKind, Quorum};
use dqd_tomo::reconstruct::{
    covariance_bound, covariance_predict, degraded_marginal_rho4, is_psd, linear_from_frequencies,
    linear_reconstruct, mle_from_frequencies, reconstruct, rms_error, sample_covariance, MleOptions,
};
use dqd_tomo::TomoError;

use crate::config::{build_quorum, PlanConfig, QuorumConfig, SpectrumConfig, TomographyConfig};
use crate::error::{config_err, CliError};
use crate::output::{csv_string, json_string, num, Header, Sink};

pub fn spectrum(cfg: &SpectrumConfig, sink: &Sink) -> Result<(), CliError> {
    cfg.validate()?;
    let header = Header::new("spectrum", cfg, None);
    let grid = linspace(cfg.eps_min, cfg.eps_max, cfg.points);
    let table = spectrum_sweep(&cfg.dot, &grid)?;

    let u = cfg.dot.u;
    let lo = cfg.eps_min.max(0.5 * u);
    let hi = cfg.eps_max.min(1.5 * u);
    let anticrossing = (lo < hi).then(|| {
        let (eps, gap) = singlet_anticrossing_gap(&cfg.dot, lo, hi);
        json!({
            "eps": eps,
            "gap": gap,
            "two_sqrt2_t": 2.0 * std::f64::consts::SQRT_2 * cfg.dot.t.abs(),
        })
    });
    let exchange = exchange_j(&cfg.dot).ok().map(|e| json!({"eps": cfg.dot.epsilon, "j": e.j, "valid": e.valid}));
    let summary = json_string(&header, &json!({"points": cfg.points, "anticrossing": anticrossing, "exchange": exchange}));

    sink.write("spectrum_summary.json", &summary)?;
    sink.primary("spectrum.csv", &csv_string(&header, &table.to_csv()), &summary)
}

#[derive(Serialize)]
struct CircuitListing {
    state: String,
    esr_count: usize,
    circuit: Value,
}

pub fn quorum(cfg: &QuorumConfig, sink: &Sink) -> Result<(), CliError> {
    let q = build_quorum(&cfg.quorum)?;
    let header = Header::new("quorum", cfg, None);
    let pm = pmatrix(&q)?;
    let circuits: Option<Vec<CircuitListing>> = q.preparations().map(|preps| {
        preps
            .iter()
            .zip(q.projectors())
            .map(|(prep, p)| CircuitListing {
                state: p.label().to_string(),
                esr_count: prep.circuit.esr_count(),
                circuit: serde_json::to_value(prep).expect("circuits serialize"),
            })
            .collect()
    });
    let body = json!({
        "quorum": q.name(),
        "abs_det": pm.abs_det(),
        "det": pm.det,
        "projectors": q.records(),
        "circuits": circuits,
    });
    let doc = json_string(&header, &body);
    sink.write("pmatrix.csv", &csv_string(&header, &pm.to_csv()))?;
    let summary = format!("quorum={} abs_det={}\n", q.name(), num(pm.abs_det()));
    sink.primary("quorum.json", &doc, &summary)
}

pub fn plan(cfg: &PlanConfig, sink: &Sink) -> Result<(), CliError> {
    cfg.validate()?;
    let header = Header::new("plan", cfg, None);
    let mut table = String::from("delta,p_limit,f,n_run\n");
    for &delta in &cfg.delta {
        for &p in &cfg.p_limit {
            for &f in &cfg.fidelity {
                let n = match dqd_tomo::measure::plan_shots(delta, p, f) {
                    Ok(n) => n.to_string(),
                    Err(TomoError::Unplannable(_)) => "unplannable".to_string(),
                    Err(e) => return Err(config_err(e)),
                };
                table.push_str(&format!("{},{},{},{n}\n", num(delta), num(p), num(f)));
            }
        }
    }
    let rows = cfg.delta.len() * cfg.p_limit.len() * cfg.fidelity.len();
    sink.primary("plan.csv", &csv_string(&header, &table), &format!("plan rows={rows}\n"))
}

/// Runs the check suite; `perturb` replaces one MUB member by a rotated copy.
pub fn verify(perturb: Option<usize>, sink: &Sink) -> Result<(), CliError> {
    let effective = json!({ "perturb_quorum": perturb });
    let header = Header::new("verify", &effective, None);
    let report: VerifyReport = match perturb {
        None => checks::run_all()?,
        Some(i) if i < 15 => checks::run_with(&checks::perturbed_mub(i, 0.3)?)?,
        Some(i) => return Err(CliError::Config(format!("perturbed quorum index {i} out of range 0..15"))),
    };
    let passed = report.all_passed();
    let doc = json_string(&header, &json!({ "all_passed": passed, "checks": report.checks }));
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    let summary = format!("checks={} failed={}\n", report.checks.len(), failed.join(","));
    sink.primary("verify.json", &doc, &summary)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed checks: {}", failed.join(", "))))
    }
}

/// The quorum actually measured, plus the quorum used for reconstruction.
struct Setup {
    measured: Quorum,
    ideal: Quorum,
    noise_std_error: Option<f64>,
}

fn setup(cfg: &TomographyConfig, seed: u64) -> Result<Setup, CliError> {
    let ideal = build_quorum(&cfg.quorum)?;
    if let Some(f) = cfg.fidelity {
        return Ok(Setup { measured: degrade_quorum(&ideal, f).map_err(config_err)?, ideal, noise_std_error: None });
    }
    if let Some(noise) = &cfg.noise {
        let preps = ideal.preparations().expect("mub quorum carries circuits").to_vec();
        let averaged = par::map_indexed(preps.len(), |j| {
            let prep = &preps[j];
            let sub_seed = seed.wrapping_add(1 + j as u64);
            average_projector(&prep.measurement_circuit(), &sweep_projector(prep.base), noise, sub_seed)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let worst = averaged.iter().map(|a| a.std_error).fold(0.0, f64::max);
        let measured = ideal.map_projectors(|p| {
            let j = ideal.projectors().iter().position(|x| std::ptr::eq(x, p)).expect("member of the quorum");
            let avg = &averaged[j].projector;
            Projector::new(*avg.matrix(), format!("<{}>", p.label()), p.basis_index(), ProjectorKind::Averaged)
        })?;
        return Ok(Setup { measured, ideal, noise_std_error: Some(worst) });
    }
    Ok(Setup { measured: ideal.clone(), ideal, noise_std_error: None })
}

/// Fidelity is `null` when `est` is not a valid density matrix.
fn compare(truth: &DensityMatrix, est: &ComplexMatrix4) -> Value {
    json!({
        "fidelity": state_fidelity(truth.matrix(), est).ok(),
        "trace_distance": trace_distance(truth.matrix(), est),
        "max_entry_error": max_abs_diff(truth.matrix(), est),
    })
}

fn exact_run(truth: &DensityMatrix, setup: &Setup) -> Result<(Value, bool), CliError> {
    let q = &setup.measured;
    let pm = pmatrix(q)?;
    let freqs = probabilities(truth, q.projectors())?;
    let linear = linear_from_frequencies(&freqs, &pm)?;
    let mle = mle_from_frequencies(q.projectors(), &freqs, &[1.0; 15], MleOptions::default())?;
    let body = json!({
        "mode": "exact",
        "probabilities": freqs,
        "linear": compare(truth, &linear),
        "linear_is_psd": is_psd(&linear),
        "mle": compare(truth, mle.rho.matrix()),
        "mle_details": {
            "method": format!("{:?}", mle.method),
            "loglik": mle.loglik,
            "iterations": mle.iterations,
            "converged": mle.converged,
            "gradient_norm": mle.gradient_norm,
            "optimality_gap": mle.optimality_gap,
            "pauli_coeffs": mle.rho.pauli_coefficients().0,
        },
    });
    Ok((body, mle.converged))
}

struct RepOutcome {
    coeffs: [f64; 15],
    rho4: Option<f64>,
}

fn repetition_block(
    truth: &DensityMatrix,
    plan: &MeasurementPlan,
    q: &Quorum,
    cfg: &TomographyConfig,
    reps: usize,
    sink: &Sink,
    header: &Header,
) -> Result<Value, CliError> {
    let pm = pmatrix(q)?;
    let rho4_f = cfg.fidelity.filter(|_| cfg.quorum == "mub");
    let outcomes = par::map_indexed(reps, |r| -> Result<RepOutcome, TomoError> {
        let recs = simulate_counts_rep(truth, plan, r as u64)?;
        let coeffs = pauli_expand(&linear_reconstruct(&recs, &pm)?)?.traceless();
        let rho4 = match rho4_f {
            Some(f) => Some(degraded_marginal_rho4(recs[3].estimate, recs[5].estimate, f)?),
            None => None,
        };
        Ok(RepOutcome { coeffs, rho4 })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let samples: Vec<[f64; 15]> = outcomes.iter().map(|o| o.coeffs).collect();
    let truth_coeffs = truth.pauli_coefficients().traceless();
    let mut block = json!({ "reps": reps, "rms_error": rms_error(&samples, &truth_coeffs) });

    if reps >= 2 {
        let (_, empirical) = sample_covariance(&samples)?;
        let predicted = covariance_predict(truth, q.projectors(), &pm, plan.shots())?;
        let max_rel = (0..15)
            .map(|k| ((empirical[(k, k)] - predicted[(k, k)]) / predicted[(k, k)]).abs())
            .fold(0.0, f64::max);
        block["covariance"] = json!({
            "max_rel_diag_error": max_rel,
            "max_abs_entry_predicted": predicted.amax(),
            "max_abs_entry_empirical": empirical.amax(),
        });
        if let Some(n) = uniform_shots(plan) {
            let bound = covariance_bound(n, pm.abs_det());
            block["covariance"]["entry_bound"] = json!(bound);
            block["covariance"]["within_bound"] = json!(within(&predicted, bound));
        }
        sink.write("covariance_predicted.csv", &csv_string(header, &mat15_csv(&predicted)))?;
        sink.write("covariance_empirical.csv", &csv_string(header, &mat15_csv(&empirical)))?;
    }

    if rho4_f.is_some() {
        let vals: Vec<f64> = outcomes.iter().filter_map(|o| o.rho4).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { f64::NAN };
        let se = (var / n).sqrt();
        let true_rho4 = truth.pauli_coefficients()[4];
        block["rho4"] = json!({
            "truth": true_rho4,
            "mean": mean,
            "std_error": se,
            "z_score": (mean - true_rho4) / se,
        });
    }
    Ok(block)
}

fn uniform_shots(plan: &MeasurementPlan) -> Option<u64> {
    let first = *plan.shots().first()?;
    plan.shots().iter().all(|&n| n == first).then_some(first)
}

fn within(m: &Mat15, bound: f64) -> bool {
    m.iter().all(|v| v.abs() <= bound)
}

fn sampled_run(
    truth: &DensityMatrix,
    setup: &Setup,
    cfg: &TomographyConfig,
    seed: u64,
    sink: &Sink,
    header: &Header,
) -> Result<(Value, bool), CliError> {
    let q = &setup.measured;
    let plan = MeasurementPlan::uniform(q, cfg.shots, seed)?;
    let records: Vec<ShotRecord> = simulate_counts(truth, &plan)?;
    let result = reconstruct(&records, q)?;
    let mut body = json!({
        "mode": "sampled",
        "linear": compare(truth, &result.rho_linear),
        "linear_is_psd": result.linear_is_psd,
        "mle": compare(truth, result.rho_mle.matrix()),
        "result": result.export(),
        "mle_optimality_gap": result.optimality_gap,
    });
    if setup.noise_std_error.is_some() {
        let naive = linear_reconstruct(&records, &pmatrix(&setup.ideal)?)?;
        body["linear_uncalibrated"] = compare(truth, &naive);
    }
    sink.write("records.csv", &csv_string(header, &records_to_csv(&records)))?;
    sink.write("covariance_predicted_mle.csv", &csv_string(header, &mat15_csv(&result.covariance_predicted)))?;
    if let Some(reps) = cfg.reps.filter(|&r| r > 1) {
        body["repetitions"] = repetition_block(truth, &plan, q, cfg, reps, sink, header)?;
    }
    Ok((body, result.converged))
}

pub fn tomography(cfg: &TomographyConfig, sink: &Sink) -> Result<(), CliError> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(0);
    let header = Header::new("tomography", cfg, Some(seed));
    let truth = cfg.state.build()?;
    let setup = setup(cfg, seed)?;

    let (mut body, converged) = if cfg.exact {
        exact_run(&truth, &setup)?
    } else {
        sampled_run(&truth, &setup, cfg, seed, sink, &header)?
    };
    body["state"] = serde_json::to_value(cfg.state).expect("state serializes");
    body["quorum"] = json!(cfg.quorum);
    body["shots"] = json!(cfg.shots);
    body["abs_det_measured"] = json!(pmatrix(&setup.measured)?.abs_det());
    if let Some(se) = setup.noise_std_error {
        body["noise_max_std_error"] = json!(se);
    }
    body["converged"] = json!(converged);

    let doc = json_string(&header, &body);
    let summary = format!(
        "mode={} mle_fidelity={} converged={converged}\n",
        body["mode"].as_str().unwrap_or(""),
        body["mle"]["fidelity"].as_f64().map_or_else(|| "n/a".into(), num),
    );
    sink.primary("tomography.json", &doc, &summary)?;
    if converged {
        Ok(())
    } else {
        Err(CliError::Numerical("maximum-likelihood iteration did not converge".into()))
    }
}
