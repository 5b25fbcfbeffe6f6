//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hmm_twostep::bench::{default_bound, generate_random_system, median, run_benchmark, BenchmarkConfig, BenchmarkOutcome};
use hmm_twostep::hmm::{sample, stationary_distribution, validate_model, ValidationLevel};
use hmm_twostep::likelihood::{gradient_hessian, log_likelihood, theta_from_p, ThetaVector};
use hmm_twostep::moments::{analytic_moments, recover_p, recover_pi, solve_moment_matching, MomentOrder};
use hmm_twostep::qp::{solve_qp, QpOptions, QpProblem, QpStatus};
use hmm_twostep::{HmmModel, Method, ObservationSequence};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 20_240_607;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_stochastic(rows: usize, cols: usize, floor: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() + floor);
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}

// ---------------------------------------------------------------------------
// Independent oracles.

/// Log-likelihood by enumerating every hidden path.
fn path_sum_loglik(p: &DMatrix<f64>, b: &DMatrix<f64>, pi0: &DVector<f64>, y: &[usize]) -> f64 {
    let x = p.nrows();
    let mut total = 0.0;
    let mut states = vec![0usize; y.len()];
    loop {
        let mut prob = pi0[states[0]] * b[(states[0], y[0])];
        for k in 1..y.len() {
            prob *= p[(states[k - 1], states[k])] * b[(states[k], y[k])];
        }
        total += prob;
        // Odometer increment over X^len paths.
        let mut k = 0;
        loop {
            if k == y.len() {
                return total.ln();
            }
            states[k] += 1;
            if states[k] < x {
                break;
            }
            states[k] = 0;
            k += 1;
        }
    }
}

/// Euclidean projection onto the probability simplex by sorting.
fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&vi| (vi - tau).max(0.0)).collect()
}

fn relative_frobenius(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm()
}

// ---------------------------------------------------------------------------
// Criteria.

fn c1_path_sum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 1);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for x in 1..=3 {
        for y in 1..=3 {
            for _ in 0..100 {
                let p = random_stochastic(x, x, 0.0, &mut rng);
                let b = random_stochastic(x, y, 0.0, &mut rng);
                let pi0 = random_stochastic(1, x, 0.0, &mut rng).transpose().column(0).into_owned();
                let theta = theta_from_p(&p).unwrap();
                for n in 0..=8 {
                    let labels: Vec<usize> = (0..=n).map(|_| rng.random_range(0..y)).collect();
                    let oracle = path_sum_loglik(&p, &b, &pi0, &labels);
                    let obs = ObservationSequence::new(labels, y).unwrap();
                    let value = log_likelihood(&theta, &b, &pi0, &obs).unwrap();
                    worst = worst.max((value - oracle).abs());
                    cases += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, format!("{cases} sequences, max |l - l_paths| = {worst:.2e} (tol 1e-12)"))
}

fn c2_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 2);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for draw in 0..50 {
        let x = 2 + draw % 2;
        let model = HmmModel::new(
            random_stochastic(x, x, 0.1, &mut rng),
            random_stochastic(x, x, 0.1, &mut rng),
            DVector::from_element(x, 1.0 / x as f64),
        )
        .unwrap();
        let obs = sample(&model, 51, &mut rng).unwrap().obs;
        // Evaluate at a random interior point, not at the generating one.
        let theta = theta_from_p(&random_stochastic(x, x, 0.2, &mut rng)).unwrap();
        let eval = gradient_hessian(&theta, model.b(), model.pi0(), &obs).unwrap();
        let d = theta.len();
        let shifted = |a: usize, h: f64| {
            let mut v = theta.values().to_vec();
            v[a] += h;
            ThetaVector::new(v, x).unwrap()
        };
        let ll = |t: &ThetaVector| log_likelihood(t, model.b(), model.pi0(), &obs).unwrap();
        let grad = |t: &ThetaVector| gradient_hessian(t, model.b(), model.pi0(), &obs).unwrap().gradient;

        let h = 1e-6;
        let fd_g = DVector::from_fn(d, |a, _| (ll(&shifted(a, h)) - ll(&shifted(a, -h))) / (2.0 * h));
        worst_g = worst_g.max((&fd_g - &eval.gradient).norm() / eval.gradient.norm());

        let h = 1e-5;
        let mut fd_h = DMatrix::zeros(d, d);
        for a in 0..d {
            fd_h.set_column(a, &((grad(&shifted(a, h)) - grad(&shifted(a, -h))) / (2.0 * h)));
        }
        let fd_h = (&fd_h + fd_h.transpose()) * 0.5;
        worst_h = worst_h.max(relative_frobenius(&eval.hessian, &fd_h));
    }
    check(
        worst_g <= 1e-6 && worst_h <= 1e-4,
        format!("50 points, max rel. gradient error {worst_g:.2e} (tol 1e-6), max rel. Hessian error {worst_h:.2e} (tol 1e-4)"),
    )
}

fn c3_qp(suite_residuals: &[f64]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 3);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=25);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.5)).collect();
        // minimize ½‖x − v‖² subject to 𝟙ᵀx = 1, x ≥ 0.
        let problem = QpProblem::new(
            DMatrix::identity(n, n),
            DVector::from_vec(v.clone()),
            -DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::from_element(1, n, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let sol = solve_qp(&problem, &QpOptions::default()).unwrap();
        if sol.status != QpStatus::Optimal || sol.residuals.max() > 1e-9 {
            failures += 1;
        }
        let oracle = simplex_projection(&v);
        let err = sol.x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let worst_kkt = suite_residuals.iter().copied().fold(0.0, f64::max);
    check(
        worst <= 1e-6 && failures == 0 && worst_kkt <= 1e-9 && !suite_residuals.is_empty(),
        format!(
            "100 projections, max error {worst:.2e} (tol 1e-6), {failures} non-optimal; \
             {} moment-matching solves, max KKT residual {worst_kkt:.2e} (tol 1e-9)",
            suite_residuals.len()
        ),
    )
}

fn c4_lemma(residuals: &mut Vec<f64>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 4);
    let mut worst_rt = 0.0f64;
    for _ in 0..1000 {
        let x = rng.random_range(1..=6);
        let p = random_stochastic(x, x, 0.01, &mut rng);
        let pi = stationary_distribution(&p).unwrap();
        let a = DMatrix::from_diagonal(&pi) * &p;
        let err_pi = (recover_pi(&a).unwrap() - &pi).amax();
        let err_p = (recover_p(&a).unwrap() - &p).amax();
        worst_rt = worst_rt.max(err_pi).max(err_p);
    }
    let mut worst_mm = 0.0f64;
    for k in 0..20u64 {
        let x = 2 + (k % 4) as usize;
        let model = generate_random_system(x, x, MASTER_SEED ^ (400 + k)).unwrap();
        assert!(validate_model(&model, ValidationLevel::Assumption1).is_valid());
        let m = analytic_moments(&model, MomentOrder::Stationary).unwrap();
        let bound = default_bound(&model).unwrap();
        let sol = solve_moment_matching(&m, model.b(), &bound, &QpOptions::default()).unwrap();
        residuals.push(sol.qp_residuals.max());
        worst_mm = worst_mm.max((&sol.p_hat - model.p()).amax());
    }
    check(
        worst_rt <= 1e-14 && worst_mm <= 1e-6,
        format!("1000 round trips, max error {worst_rt:.2e} (tol 1e-14); 20 noiseless fits, max |P_hat - P| {worst_mm:.2e} (tol 1e-6)"),
    )
}

fn consistency_config() -> BenchmarkConfig {
    BenchmarkConfig {
        num_states: 3,
        num_outputs: 3,
        sizes: vec![1_000, 10_000, 100_000],
        replicates: 20,
        seed: MASTER_SEED ^ 5,
        arms: vec![Method::Mm, Method::EmTrue, Method::TwoStep],
        ..Default::default()
    }
}

fn c5_consistency(out: &BenchmarkOutcome, elapsed: Duration) -> Outcome {
    let medians: Vec<(usize, f64)> = out.rows.iter().map(|r| (r.n, r.rmse[&Method::Mm])).collect();
    let decreasing = medians.windows(2).all(|w| w[1].1 < w[0].1);
    let scaled: Vec<f64> = medians.iter().map(|&(n, e)| e * (n as f64).sqrt()).collect();
    let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let fast = elapsed < Duration::from_secs(300);
    check(
        decreasing && spread <= 3.0 && fast,
        format!(
            "median MM RMSE {} ; RMSE*sqrt(N) max/min {spread:.2} (tol 3); {:.1}s (limit 300s)",
            medians.iter().map(|(n, e)| format!("N={n}: {e:.4e}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn c6_efficiency(out: &BenchmarkOutcome, elapsed: Duration) -> Outcome {
    let row = out.row(100_000).unwrap();
    let (mm, ts, em) = (row.rmse[&Method::Mm], row.rmse[&Method::TwoStep], row.rmse[&Method::EmTrue]);
    let fast = elapsed < Duration::from_secs(600);
    check(
        ts <= 1.10 * em && mm >= 1.25 * ts && fast,
        format!(
            "N=1e5 medians: MM {mm:.4e}, 2S {ts:.4e}, EM-True {em:.4e}; 2S/EM-True {:.3} (tol 1.10), MM/2S {:.3} (tol 1.25); {:.1}s",
            ts / em,
            mm / ts,
            elapsed.as_secs_f64()
        ),
    )
}

fn fisher_config() -> BenchmarkConfig {
    BenchmarkConfig {
        num_states: 2,
        num_outputs: 2,
        sizes: vec![100_000],
        replicates: 200,
        seed: MASTER_SEED ^ 7,
        arms: vec![Method::TwoStep],
        model: Some(
            HmmModel::new(
                DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]),
                DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.3, 0.7]),
                DVector::from_vec(vec![0.5, 0.5]),
            )
            .unwrap(),
        ),
        ..Default::default()
    }
}

/// Sample covariance of √N(θ̂ − θ*) and the elementwise median of Î_F⁻¹.
fn fisher_statistics(out: &BenchmarkOutcome) -> (DMatrix<f64>, DMatrix<f64>) {
    let truth = theta_from_p(out.systems[0].p()).unwrap();
    let reports: Vec<_> = out.records.iter().filter_map(|r| r.report.as_ref()).collect();
    let n = out.records[0].n as f64;
    let d = truth.len();
    let devs: Vec<DVector<f64>> = reports
        .iter()
        .map(|r| {
            DVector::from_iterator(d, r.theta_hat.values().iter().zip(truth.values()).map(|(a, b)| n.sqrt() * (a - b)))
        })
        .collect();
    let mean = devs.iter().fold(DVector::zeros(d), |acc, v| acc + v) / devs.len() as f64;
    let cov = devs.iter().fold(DMatrix::zeros(d, d), |acc, v| acc + (v - &mean) * (v - &mean).transpose())
        / (devs.len() - 1) as f64;
    let inverses: Vec<DMatrix<f64>> = reports
        .iter()
        .filter_map(|r| r.fisher.as_ref().and_then(|f| f.clone().try_inverse()))
        .collect();
    let med = DMatrix::from_fn(d, d, |i, j| median(&inverses.iter().map(|m| m[(i, j)]).collect::<Vec<_>>()).unwrap());
    (cov, med)
}

fn c7_fisher(out: &BenchmarkOutcome, elapsed: Duration) -> Outcome {
    let (cov, med) = fisher_statistics(out);
    let rel = relative_frobenius(&cov, &med);
    let fast = elapsed < Duration::from_secs(900);
    check(
        rel <= 0.25 && fast,
        format!(
            "200 replicates: cov {:?} vs median inverse information {:?}; rel. Frobenius error {rel:.3} (tol 0.25); {:.1}s",
            cov.as_slice().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            med.as_slice().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c8_runtime() -> Outcome {
    let config = BenchmarkConfig {
        num_states: 5,
        num_outputs: 5,
        sizes: vec![500_000],
        replicates: 10,
        seed: MASTER_SEED ^ 8,
        arms: vec![Method::Em, Method::TwoStep],
        threads: Some(1),
        ..Default::default()
    };
    let start = Instant::now();
    let out = run_benchmark(&config).unwrap();
    let elapsed = start.elapsed();
    let row = &out.rows[0];
    let (ts, em) = (row.seconds[&Method::TwoStep], row.seconds[&Method::Em]);
    check(
        ts < em && elapsed < Duration::from_secs(1800),
        format!(
            "X=Y=5, N=5e5, 10 seeds: median 2S {ts:.3}s vs EM {em:.3}s (ratio {:.2}); {:.1}s",
            em / ts,
            elapsed.as_secs_f64()
        ),
    )
}

fn c9_two_passes(outcomes: &[&BenchmarkOutcome]) -> Outcome {
    let passes: Vec<usize> = outcomes
        .iter()
        .flat_map(|o| o.records.iter())
        .filter(|r| r.method == Method::TwoStep)
        .filter_map(|r| r.report.as_ref().map(|rep| rep.passes))
        .collect();
    let all_two = passes.iter().all(|&p| p == 2);
    let failed = outcomes
        .iter()
        .flat_map(|o| o.records.iter())
        .filter(|r| r.method == Method::TwoStep && r.report.is_none())
        .count();
    check(
        all_two && failed == 0 && !passes.is_empty(),
        format!("{} 2S runs, pass counts {:?}, {failed} failed", passes.len(), {
            let mut counts = BTreeMap::new();
            for p in &passes {
                *counts.entry(*p).or_insert(0) += 1;
            }
            counts
        }),
    )
}

fn c10_outliers(out: &BenchmarkOutcome) -> Outcome {
    let records: Vec<_> = out.records_for(100_000, Method::TwoStep).collect();
    let errors: Vec<f64> = records.iter().filter_map(|r| r.rmse).collect();
    let med = median(&errors).unwrap();
    let outliers: Vec<_> = records.iter().filter(|r| r.rmse.is_some_and(|e| e > 3.0 * med)).collect();
    let unflagged = outliers.iter().filter(|r| !r.report.as_ref().is_some_and(|rep| rep.non_nd_hessian)).count();
    let flagged = records.iter().filter(|r| r.report.as_ref().is_some_and(|rep| rep.non_nd_hessian)).count();
    check(
        unflagged == 0,
        format!(
            "{} replicates, median RMSE {med:.4e}, {} above 3x median, {unflagged} of them unflagged; {flagged} flagged overall",
            records.len(),
            outliers.len()
        ),
    )
}

/// CSV content with the timing columns removed.
fn non_timing(out: &BenchmarkOutcome) -> String {
    let median: Vec<String> = out.median_csv.lines().map(|l| l.split(',').take(6).collect::<Vec<_>>().join(",")).collect();
    let raw: Vec<String> = out
        .raw_csv
        .lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 6).map(|(_, c)| c).collect::<Vec<_>>().join(","))
        .collect();
    format!("{}\n{}", median.join("\n"), raw.join("\n"))
}

fn fisher_csv(out: &BenchmarkOutcome) -> String {
    let (cov, med) = fisher_statistics(out);
    let mut text = String::from("entry,covariance,median_inverse_information\n");
    for (k, (c, m)) in cov.iter().zip(med.iter()).enumerate() {
        text.push_str(&format!("{k},{c},{m}\n"));
    }
    text
}

fn c11_determinism(first: &[String]) -> Outcome {
    let a = run_benchmark(&consistency_config()).unwrap();
    let b = run_benchmark(&fisher_config()).unwrap();
    let second = [non_timing(&a), non_timing(&b), fisher_csv(&b)];
    let identical = first.iter().zip(&second).all(|(x, y)| x == y);
    let bytes: usize = first.iter().map(|s| s.len()).sum();
    check(identical, format!("re-ran criteria 5-7: {bytes} bytes of non-timing CSV compared, identical = {identical}"))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        results.push((id, name, outcome, start.elapsed().as_secs_f64()));
    };

    // The statistical criteria share two benchmark runs.
    let start = Instant::now();
    let consistency = run_benchmark(&consistency_config()).unwrap();
    let consistency_time = start.elapsed();
    let start = Instant::now();
    let fisher = run_benchmark(&fisher_config()).unwrap();
    let fisher_time = start.elapsed();

    let mut residuals = Vec::new();
    for o in [&consistency, &fisher] {
        residuals.extend(o.records.iter().filter_map(|r| r.report.as_ref().and_then(|rep| rep.qp_residual)));
    }
    run(1, "likelihood equals path-sum oracle", &mut c1_path_sum);
    run(2, "exact derivatives vs finite differences", &mut c2_derivatives);
    run(4, "A <-> (pi, P) round trip and noiseless moments", &mut || c4_lemma(&mut residuals));
    run(3, "QP vs simplex projection, KKT residuals", &mut || c3_qp(&residuals));
    run(5, "consistency of moment matching", &mut || c5_consistency(&consistency, consistency_time));
    run(6, "efficiency of the two-step estimator", &mut || c6_efficiency(&consistency, consistency_time));
    run(7, "covariance vs inverse observed information", &mut || c7_fisher(&fisher, fisher_time));
    run(8, "two-step faster than EM", &mut c8_runtime);
    run(9, "two passes over the data", &mut || c9_two_passes(&[&consistency, &fisher]));
    run(10, "outliers carry the non-ND-Hessian flag", &mut || c10_outliers(&consistency));
    let first = [non_timing(&consistency), non_timing(&fisher), fisher_csv(&fisher)];
    run(11, "determinism of criteria 5-7", &mut || c11_determinism(&first));

    results.sort_by_key(|r| r.0);
    for (id, name, outcome, secs) in &results {
        println!(
            "[{}] C{id} {name}: {} [{secs:.1}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
