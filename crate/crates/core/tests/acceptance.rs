//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero when any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use thevenin_ambient::harness::{
    run_montecarlo_to, run_trials, simulate_trial, trial_metrics, ExperimentConfig, TrialResult,
};
use thevenin_ambient::model::{solve_port, theoretical_msp};
use thevenin_ambient::stochastic::{corrupt, gen_ou, gen_ou_pair, simulate_ambient};
use thevenin_ambient::theory::{condition_number, deviation_ratio, theoretical_snr, AutocovSpec, SnrMode};
use thevenin_ambient::windowstats::build_features;
use thevenin_ambient::{
    CorruptionSpec, MeasurementSeries, Method, NoiseDist, OuLoadConfig, RegressorConfig, TheveninParams, WindowConfig,
};

const TS: f64 = 0.01;
const METRIC_E: usize = 0;
const METRIC_R: usize = 1;
const METRIC_X: usize = 2;
const METRIC_TEP: usize = 3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn load(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = 0.5 * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    if v[lo] == v[hi] {
        v[lo]
    } else {
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    }
}

fn quartile_spread(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        v[lo] + (pos - lo as f64) * (v[pos.ceil() as usize] - v[lo])
    };
    q(0.75) - q(0.25)
}

/// One metric for one estimator label across trials; failed estimates are
/// `+∞` so that they count against the estimator.
fn metric(cfg: &ExperimentConfig, trials: &[TrialResult], label: &str, which: usize) -> Vec<f64> {
    trials
        .iter()
        .map(|t| {
            let o = t.outcomes.iter().find(|o| o.label() == label).expect("label present");
            let v = trial_metrics(&o.result, &cfg.tep)[which];
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn failures(trials: &[TrialResult], label: &str) -> usize {
    trials.iter().filter(|t| t.outcomes.iter().any(|o| o.label() == label && o.result.is_err())).count()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn sample_var(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 100 {
        let tep = TheveninParams::new(
            rng.random_range(150.0..450.0),
            rng.random_range(1.0..40.0),
            rng.random_range(10.0..120.0),
        )
        .unwrap();
        let limit = tep.e_th * tep.e_th / (4.0 * (tep.r_th + tep.x_th));
        let (p, q) = (rng.random_range(1.0..limit), rng.random_range(-0.5 * limit..limit));
        if tep.discriminant(p, q) < 0.1 * tep.discriminant(0.0, 0.0) {
            continue;
        }
        let port = solve_port(&tep, p, q).unwrap();
        let msp = theoretical_msp(&tep, &port).unwrap();
        // Step near the balance of truncation (h²) and rounding (1/h) error.
        let h = 1e-5 * (1.0 + p.abs().max(q.abs()));
        let fd = |dp: f64, dq: f64| {
            let hi = solve_port(&tep, p + dp, q + dq).unwrap();
            let lo = solve_port(&tep, p - dp, q - dq).unwrap();
            ((hi.v_mag - lo.v_mag) / (2.0 * h), (hi.i_mag - lo.i_mag) / (2.0 * h))
        };
        let (vp, ip) = fd(h, 0.0);
        let (vq, iq) = fd(0.0, h);
        let numeric = [vp, vq, ip, iq];
        let analytic = msp.as_array();
        let num: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = numeric.iter().map(|b| b * b).sum();
        worst = worst.max((num / den).sqrt());
        points += 1;
    }
    outcome(
        worst <= 1e-6,
        format!("sensitivities vs central differences at 100 points, worst relative error {worst:.2e} (limit 1e-6)"),
    )
}

fn criterion_2() -> Outcome {
    let tep = TheveninParams::new(270.0, 20.0, 50.0).unwrap();
    let series = simulate_ambient(&tep, &OuLoadConfig::default(), 12_000, TS, 2024).unwrap();
    match thevenin_ambient::estimate::identify_pipeline(
        &series,
        Method::Mean,
        &WindowConfig::default(),
        &RegressorConfig::default(),
    ) {
        Ok(r) => {
            let ratios = [r.tep.e_th / 270.0, r.tep.r_th / 20.0, r.tep.x_th / 50.0];
            let pass = ratios.iter().all(|v| (v - 1.0).abs() <= 0.01);
            outcome(
                pass,
                format!(
                    "noiseless CPL, mean method: E, R, X ratios {:.4} {:.4} {:.4} (limit ±1%)",
                    ratios[0], ratios[1], ratios[2]
                ),
            )
        }
        Err(e) => outcome(false, format!("noiseless CPL estimate failed: {e}")),
    }
}

struct ReferenceRun {
    cfg: ExperimentConfig,
    trials: Vec<TrialResult>,
}

fn criterion_3(cpl: &ReferenceRun, cil: &ReferenceRun) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in [("CPL", cpl), ("CIL", cil)] {
        let base = median(metric(&run.cfg, &run.trials, "baseline-ols", METRIC_TEP));
        for label in ["mean-ols", "variance-ols"] {
            let ratios: Vec<f64> = [METRIC_E, METRIC_R, METRIC_X]
                .iter()
                .map(|&m| median(metric(&run.cfg, &run.trials, label, m)))
                .collect();
            let err = median(metric(&run.cfg, &run.trials, label, METRIC_TEP));
            pass &= ratios.iter().all(|r| (0.98..=1.02).contains(r)) && base > err;
            parts.push(format!("{name} {label} E/R/X {:.4}/{:.4}/{:.4} err {err:.4}", ratios[0], ratios[1], ratios[2]));
        }
        parts.push(format!("{name} baseline-ols err {base:.4}"));
    }
    outcome(pass, parts.join("; "))
}

/// Variance over `reps` independent windows of each method's feature for an
/// O-U signal and for unit white noise; returns the three SNRs (dB).
fn snr_monte_carlo(n: usize, reps: usize, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let mut sig = [Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps)];
    let mut noise = [Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps)];
    let features = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        [x[1] - x[0], x[0] - mean, sample_var(x)]
    };
    for _ in 0..reps {
        let x = gen_ou(1.0, std::f64::consts::SQRT_2, n, TS, rng);
        let e = normals(n, rng);
        for (k, (s, z)) in features(&x).into_iter().zip(features(&e)).enumerate() {
            sig[k].push(s);
            noise[k].push(z);
        }
    }
    std::array::from_fn(|k| 10.0 * (sample_var(&sig[k]) / sample_var(&noise[k])).log10())
}

fn criterion_4() -> Outcome {
    let spec = AutocovSpec::exponential(1.0, 1.0, TS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    let mut parts = Vec::new();
    for w in [1.0, 5.0, 10.0, 20.0] {
        let n = (w / TS) as usize;
        let mc = snr_monte_carlo(n, 10_000, &mut rng);
        let exact: Vec<f64> =
            Method::ALL.iter().map(|&m| theoretical_snr(m, &spec, n, 1.0, SnrMode::Exact).unwrap()).collect();
        for k in 0..3 {
            worst = worst.max((mc[k] - exact[k]).abs());
        }
        ordered &= mc[2] > 0.0 && 0.0 > mc[0] && exact[2] > 0.0 && 0.0 > exact[0];
        parts.push(format!(
            "W={w}: MC {:.2}/{:.2}/{:.2} exact {:.2}/{:.2}/{:.2}",
            mc[0], mc[1], mc[2], exact[0], exact[1], exact[2]
        ));
    }
    outcome(
        worst <= 1.5 && ordered,
        format!(
            "feature SNR (dB, baseline/mean/variance) worst gap {worst:.3} dB (limit 1.5), ordering {ordered}; {}",
            parts.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    const N: usize = 2000;
    const REPS: usize = 50_000;
    const LAGS: [usize; 3] = [1, 10, 100];
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    // Running sums and sums of squares of Y and of Y − Ỹ per method and lag.
    let mut y_acc = [[0.0; 2]; 3];
    let mut d_acc = [[[0.0; 2]; 3]; 3];
    let mut prefix = vec![0.0; N + 102];
    let mut prefix_sq = vec![0.0; N + 102];
    for _ in 0..REPS {
        let x = gen_ou(1.0, std::f64::consts::SQRT_2, N + 101, TS, &mut rng);
        for (k, v) in x.iter().enumerate() {
            prefix[k + 1] = prefix[k] + v;
            prefix_sq[k + 1] = prefix_sq[k] + v * v;
        }
        let features = |s: usize| {
            let sum = prefix[s + N] - prefix[s];
            let sq = prefix_sq[s + N] - prefix_sq[s];
            let mean = sum / N as f64;
            [x[s + 1] - x[s], x[s] - mean, (sq - sum * mean) / (N - 1) as f64]
        };
        let y = features(0);
        for k in 0..3 {
            y_acc[k][0] += y[k];
            y_acc[k][1] += y[k] * y[k];
        }
        for (j, &m) in LAGS.iter().enumerate() {
            let shifted = features(m);
            for k in 0..3 {
                let d = y[k] - shifted[k];
                d_acc[k][j][0] += d;
                d_acc[k][j][1] += d * d;
            }
        }
    }
    let var = |acc: [f64; 2]| (acc[1] - acc[0] * acc[0] / REPS as f64) / (REPS - 1) as f64;
    let spec = AutocovSpec::exponential(1.0, 1.0, TS).unwrap();
    let mut worst: f64 = 0.0;
    let mut lowest = true;
    let mut parts = Vec::new();
    for (j, &m) in LAGS.iter().enumerate() {
        let mc: [f64; 3] = std::array::from_fn(|k| var(d_acc[k][j]) / var(y_acc[k]));
        let theory: Vec<f64> = Method::ALL.iter().map(|&meth| deviation_ratio(meth, &spec, N, m).unwrap()).collect();
        for k in 0..3 {
            worst = worst.max(rel(mc[k], theory[k]));
        }
        lowest &= mc[2] < mc[0] && mc[2] < mc[1] && theory[2] < theory[0] && theory[2] < theory[1];
        parts.push(format!(
            "m={m}: MC {:.4}/{:.4}/{:.4} theory {:.4}/{:.4}/{:.4}",
            mc[0], mc[1], mc[2], theory[0], theory[1], theory[2]
        ));
    }
    outcome(
        worst <= 0.05 && lowest,
        format!("deviation ratio (baseline/mean/variance) worst relative gap {:.2}% (limit 5%), variance lowest {lowest}; {}", 100.0 * worst, parts.join("; ")),
    )
}

/// Ratio of extreme singular values after centring and scaling each column
/// to unit variance.
fn standardised_condition(a: &DMatrix<f64>) -> f64 {
    let mut z = a.clone();
    for mut col in z.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let s = col.norm();
        col /= s;
    }
    let sv = z.singular_values();
    sv.max() / sv.min()
}

fn criterion_6() -> Outcome {
    const CHUNKS: usize = 10;
    const WINDOWS_PER_CHUNK: usize = 10_000;
    let wcfg = WindowConfig::new(1.0, 1.0);
    let n_win = wcfg.samples(TS).unwrap();
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    let mut parts = Vec::new();
    for (i, r) in [0.0, 0.3, 0.6, 0.9].into_iter().enumerate() {
        let load = OuLoadConfig { r_pq: r, ..Default::default() };
        let mut stacks: [Vec<DMatrix<f64>>; 3] = Default::default();
        for c in 0..CHUNKS {
            let (p, q) = gen_ou_pair(&load, WINDOWS_PER_CHUNK * n_win, TS, 600 + (i * CHUNKS + c) as u64).unwrap();
            let series = MeasurementSeries::new(TS, 0.0, p.clone(), q.clone(), p, q).unwrap();
            for (k, &m) in Method::ALL.iter().enumerate() {
                if m == Method::Baseline && c > 0 {
                    continue;
                }
                let fs = build_features(&series, m, &wcfg).unwrap();
                let rows = if m == Method::Baseline { 100_000 } else { fs.rows() };
                stacks[k].push(fs.a.rows(0, rows).into_owned());
            }
        }
        let kappas: Vec<f64> = stacks
            .iter()
            .map(|blocks| {
                let cols = blocks[0].ncols();
                let total: usize = blocks.iter().map(|b| b.nrows()).sum();
                let mut a = DMatrix::zeros(total, cols);
                let mut row = 0;
                for b in blocks {
                    a.rows_mut(row, b.nrows()).copy_from(b);
                    row += b.nrows();
                }
                standardised_condition(&a)
            })
            .collect();
        for (k, &m) in Method::ALL.iter().enumerate() {
            worst = worst.max(rel(kappas[k], condition_number(m, r).unwrap()));
        }
        ordered &= kappas[2] >= kappas[0];
        parts.push(format!(
            "r={r}: {:.3}/{:.3}/{:.3} vs {:.3}/{:.3}/{:.3}",
            kappas[0],
            kappas[1],
            kappas[2],
            condition_number(Method::Baseline, r).unwrap(),
            condition_number(Method::Mean, r).unwrap(),
            condition_number(Method::Variance, r).unwrap()
        ));
    }
    outcome(
        worst <= 0.05 && ordered,
        format!("condition numbers from 1e5 rows (baseline/mean/variance) worst relative gap {:.2}% (limit 5%), variance >= baseline {ordered}; {}", 100.0 * worst, parts.join("; ")),
    )
}

fn criterion_7(cpl: &ReferenceRun) -> Outcome {
    let low = load("fig8_lowsnr.toml");
    let low_trials = run_trials(&low);
    let err = |cfg: &ExperimentConfig, t: &[TrialResult], label: &str| median(metric(cfg, t, label, METRIC_TEP));
    let low_mean = err(&low, &low_trials, "mean-ols");
    let low_var = err(&low, &low_trials, "variance-ols");
    let low_ok = low_var < low_mean;

    let asy = load("fig8_async.toml");
    let asy_trials = run_trials(&asy);
    let mut asy_ok = true;
    let mut parts = vec![format!(
        "0 dB: variance err {low_var:.4} ({} failed) vs mean err {low_mean:.4} ({} failed)",
        failures(&low_trials, "variance-ols"),
        failures(&low_trials, "mean-ols")
    )];
    for label in ["mean-ols", "variance-ols"] {
        let ratios: Vec<f64> =
            [METRIC_E, METRIC_R, METRIC_X].iter().map(|&m| median(metric(&asy, &asy_trials, label, m))).collect();
        asy_ok &= ratios.iter().all(|r| (r - 1.0).abs() <= 0.05);
        parts.push(format!("0.1 s delay {label} E/R/X {:.4}/{:.4}/{:.4}", ratios[0], ratios[1], ratios[2]));
    }
    let base_sync = err(&cpl.cfg, &cpl.trials, "baseline-ols");
    let base_async = err(&asy, &asy_trials, "baseline-ols");
    let proposed = err(&asy, &asy_trials, "mean-ols").max(err(&asy, &asy_trials, "variance-ols"));
    let degrades = base_async > base_sync && base_async > proposed;
    parts.push(format!(
        "baseline-ols err {base_sync:.4} synchronous -> {base_async:.4} delayed ({} failed)",
        failures(&asy_trials, "baseline-ols")
    ));
    outcome(low_ok && asy_ok && degrades, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let mut gaussian = load("nongaussian_laplace.toml");
    gaussian.corruption.noise_dist = NoiseDist::Gaussian;
    let reference = quartile_spread(metric(&gaussian, &run_trials(&gaussian), "variance-ols", METRIC_X));
    let mut pass = true;
    let mut parts = vec![format!("Gaussian IQR {reference:.5}")];
    for name in ["laplace", "logistic", "student_t"] {
        let cfg = load(&format!("nongaussian_{name}.toml"));
        let x = metric(&cfg, &run_trials(&cfg), "variance-ols", METRIC_X);
        let med = median(x.clone());
        let iqr = quartile_spread(x);
        pass &= (0.98..=1.02).contains(&med) && iqr <= 2.0 * reference;
        parts.push(format!("{name} median X ratio {med:.4}, IQR {iqr:.5} ({:.2}x)", iqr / reference));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let missing = load("baddata_missing.toml");
    let mut complete = missing.clone();
    complete.corruption.missing_frac = 0.0;
    let with_gaps = run_trials(&missing);
    let without = run_trials(&complete);
    let mut pass = true;
    let mut parts = Vec::new();
    for label in ["mean-ols", "variance-ols"] {
        let a = median(metric(&missing, &with_gaps, label, METRIC_X));
        let b = median(metric(&complete, &without, label, METRIC_X));
        let shift = rel(a, b);
        pass &= shift < 0.01;
        parts.push(format!("5% missing {label} median X ratio {a:.4} vs {b:.4} (shift {:.3}%)", 100.0 * shift));
    }

    let amp = load("baddata_amplitude.toml");
    let clean = simulate_trial(&amp, 0).unwrap();
    let compressed =
        corrupt(&clean, &CorruptionSpec { amp_scale: amp.corruption.amp_scale, ..Default::default() }, 1).unwrap();
    let f0 = build_features(&clean, Method::Variance, &amp.window).unwrap();
    let f1 = build_features(&compressed, Method::Variance, &amp.window).unwrap();
    let factor = amp.corruption.amp_scale.powi(2);
    let dev = |x: &DMatrix<f64>, y: &DMatrix<f64>| (x - y * factor).abs().max() / y.abs().max();
    let scale_err = dev(&f1.a, &f0.a).max(dev(&f1.b, &f0.b));
    pass &= scale_err < 1e-9;
    let amp_trials = run_trials(&amp);
    let mut reference = amp.clone();
    reference.corruption.amp_scale = 1.0;
    let shift = rel(
        median(metric(&amp, &amp_trials, "variance-ols", METRIC_X)),
        median(metric(&reference, &run_trials(&reference), "variance-ols", METRIC_X)),
    );
    parts.push(format!(
        "95% amplitude: variance features scale by {factor:.4} to {scale_err:.1e}; variance-ols median X ratio shift {:.3}%",
        100.0 * shift
    ));
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let cfg = load("fig7_cpl.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_montecarlo_to(&cfg, d.path()).unwrap();
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let trials = read(&dirs[0], "trials.csv") == read(&dirs[1], "trials.csv");
    let summary = read(&dirs[0], "summary.csv") == read(&dirs[1], "summary.csv");
    outcome(
        trials && summary,
        format!("two montecarlo runs: trials.csv identical {trials}, summary.csv identical {summary}"),
    )
}

fn report(number: usize, budget: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let in_budget = elapsed <= budget;
    let pass = out.pass && in_budget;
    println!(
        "{} criterion {number}: {} [{:.1} s of {} s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(report(1, secs(1), criterion_1));
    results.push(report(2, secs(10), criterion_2));

    let fig7 = |name: &str| {
        let cfg = load(name);
        let trials = run_trials(&cfg);
        ReferenceRun { cfg, trials }
    };
    let mut cpl = None;
    results.push(report(3, secs(300), || {
        let (p, i) = (fig7("fig7_cpl.toml"), fig7("fig7_cil.toml"));
        let out = criterion_3(&p, &i);
        cpl = Some(p);
        out
    }));
    let cpl = cpl.expect("fig7 run");

    results.push(report(4, secs(120), criterion_4));
    results.push(report(5, secs(120), criterion_5));
    results.push(report(6, secs(60), criterion_6));
    results.push(report(7, secs(300), || criterion_7(&cpl)));
    results.push(report(8, secs(300), criterion_8));
    results.push(report(9, secs(300), criterion_9));
    results.push(report(10, secs(60), criterion_10));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
