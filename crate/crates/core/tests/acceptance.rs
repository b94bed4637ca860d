//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when
//! any criterion fails. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test -p css-core --test acceptance -- 1 9`.

use std::collections::BTreeSet;
use std::time::Instant;

use css_core::baseband::theory::{db_at_ber as theory_db_at_ber, BerAxis};
use css_core::baseband::complex_gaussian;
use css_core::experiments::complexity::{fit_curve, iteration_ridge, iteration_trough};
use css_core::experiments::contour::transition_contours;
use css_core::experiments::curves::{ber_points, db_at_ber, XAxis};
use css_core::experiments::reference::ReferenceContour;
use css_core::experiments::{run, Execution, ExperimentSpec, ResultRow, RunOptions};
use css_core::gold::{periodic_correlation, GoldDictionary};
use css_core::pursuit::{subspace_pursuit, ComplexityModel, DenseMatrix, PursuitOptions, PursuitProblem, SensingMatrix};
use css_core::rf::snr_db_from_ebn0_db;
use css_core::sampling::{build_operator, build_prewhitener, OperatorKind};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn from_checks(checks: Vec<(bool, String)>) -> Self {
        let failed = checks.iter().filter(|c| !c.0).count();
        Outcome {
            pass: failed == 0 && !checks.is_empty(),
            summary: format!("{} of {} checks pass", checks.len() - failed, checks.len()),
            details: checks
                .into_iter()
                .map(|(ok, s)| format!("{} {s}", if ok { "ok  " } else { "FAIL" }))
                .collect(),
        }
    }
}

fn execute(text: &str) -> Vec<ResultRow> {
    let spec = ExperimentSpec::from_toml(text).expect("acceptance config parses");
    run(&spec, &RunOptions::default()).expect("acceptance run succeeds").rows
}

fn curve<'a>(rows: &'a [ResultRow], name: &str) -> Vec<&'a ResultRow> {
    rows.iter().filter(|r| r.curve == name).collect()
}

fn crossing(rows: &[ResultRow], name: &str, axis: XAxis, target: f64) -> Option<f64> {
    db_at_ber(&ber_points(curve(rows, name), axis), target)
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn within(v: Option<f64>, center: f64, tol: f64) -> bool {
    v.is_some_and(|v| (v - center).abs() <= tol)
}

/// Exact cross-correlation spectrum of the preferred pairs.
fn gold_correlation() -> Outcome {
    let mut checks = Vec::new();
    for (m, t) in [(5u32, 9i64), (7, 17), (10, 65)] {
        let dict = GoldDictionary::new(m).expect("default pair");
        let values: BTreeSet<i64> = periodic_correlation(&dict.g1().chips(), &dict.g2().chips())
            .expect("equal lengths")
            .into_iter()
            .collect();
        let expected: BTreeSet<i64> = [-1, -t, t - 2].into_iter().collect();
        checks.push((values == expected, format!("m = {m}: values {values:?}, expected {expected:?}")));
    }
    Outcome::from_checks(checks)
}

/// 100 noiseless CSS trials at delta 0.5, S = 10.
fn noiseless_recovery() -> Outcome {
    let rows = execute(
        r#"
experiment = "phase"
seed = 2
m = 10
[grid]
delta = [0.5]
rho = [0.01953125]
[phase]
batch = 100
max_trials = 100
[[curve]]
name = "css"
operator = "css"
"#,
    );
    let r = &rows[0];
    let successes = (r.success_rate.unwrap_or(0.0) * r.trials as f64).round() as u64;
    let shape = r.m_rows == 512 && r.sparsity == 10 && r.trials == 100;
    Outcome {
        pass: shape && successes >= 99,
        summary: format!("{successes}/{} trials with relative error < 1e-6 (need >= 99/100)", r.trials),
        details: vec![format!("M = {}, S = {}, mean iterations {:.2}", r.m_rows, r.sparsity, r.mean_iterations)],
    }
}

/// 0.5 success contours of CSS and RD against each other and the reference.
fn phase_transition() -> Outcome {
    let rows = execute(
        r#"
experiment = "phase"
seed = 3
m = 10
[grid]
delta = [0.3, 0.5, 0.7]
rho = {start = 0.2, stop = 0.5, count = 13}
[phase]
batch = 20
max_trials = 20
[[curve]]
name = "css"
operator = "css"
[[curve]]
name = "rd"
operator = "rd"
"#,
    );
    let contours = transition_contours(&rows);
    let reference = ReferenceContour::shipped();
    let at = |name: &str, delta: f64| {
        contours
            .iter()
            .find(|p| p.curve == name && (p.delta - delta).abs() < 1e-9)
            .and_then(|p| p.rho)
    };
    let mut checks = Vec::new();
    for delta in [0.3, 0.5, 0.7] {
        let (css, rd, tst) = (at("css", delta), at("rd", delta), reference.rho_at(delta));
        let diff = css.zip(rd).map(|(a, b)| a - b);
        checks.push((
            within(diff, 0.0, 0.05),
            format!("delta {delta}: css {} vs rd {} (|diff| <= 0.05)", fmt(css), fmt(rd)),
        ));
        for (name, v) in [("css", css), ("rd", rd)] {
            checks.push((
                v.zip(tst).is_some_and(|(a, b)| (a - b).abs() <= 0.1),
                format!("delta {delta}: {name} {} vs reference {} (+-0.1)", fmt(v), fmt(tst)),
            ));
        }
    }
    Outcome::from_checks(checks)
}

const DISCRETE_M10: &str = r#"
experiment = "ber_discrete"
seed = 4
m = 10
[grid]
snr_db = {start = -18.0, stop = -8.0, count = 21}
[stop]
target_errors = 100
max_slots = 300000
ber_floor = 1e-3
[[curve]]
name = "classic"
operator = "identity"
[[curve]]
name = "css-k2"
operator = "css"
kappa = 2
[[curve]]
name = "css-k4"
operator = "css"
kappa = 4
[[curve]]
name = "rd-k2"
operator = "rd"
kappa = 2
"#;

/// Criteria 4, 5 and 6 share one sweep.
fn discrete_m10() -> (Outcome, Outcome, Outcome) {
    let rows = execute(DISCRETE_M10);
    let at = |name: &str| crossing(&rows, name, XAxis::SnrDb, 1e-3);
    let (classic, k2, k4, rd) = (at("classic"), at("css-k2"), at("css-k4"), at("rd-k2"));
    let theory = theory_db_at_ber(1023, 1e-3, BerAxis::Snr, -80.0, 40.0);
    let listing = |name: &str| {
        let pts = ber_points(curve(&rows, name), XAxis::SnrDb);
        format!(
            "{name}: {}",
            pts.iter().map(|(x, b)| format!("{x:.1}:{b:.2e}")).collect::<Vec<_>>().join(" ")
        )
    };

    let shift = classic.zip(theory).map(|(a, b)| a - b);
    let theory_check = Outcome {
        pass: within(shift, 0.0, 0.5),
        summary: format!(
            "classic at 1e-3: {} dB, theory {} dB, shift {} dB (|shift| <= 0.5)",
            fmt(classic),
            fmt(theory),
            fmt(shift)
        ),
        details: vec![listing("classic")],
    };

    let first = k2.zip(classic).map(|(a, b)| a - b);
    let second = k4.zip(k2).map(|(a, b)| a - b);
    let mut folding = Outcome::from_checks(vec![
        (within(first, 3.0, 1.0), format!("css-k2 vs classic: {} dB (3 +- 1)", fmt(first))),
        (within(second, 3.0, 1.0), format!("css-k4 vs css-k2: {} dB (3 +- 1)", fmt(second))),
    ]);
    folding.details.push(listing("css-k2"));
    folding.details.push(listing("css-k4"));

    let gap = k2.zip(rd).map(|(a, b)| a - b);
    let operator = Outcome {
        pass: within(gap, 0.0, 0.5),
        summary: format!("css-k2 {} dB vs rd-k2 {} dB at 1e-3, gap {} dB (<= 0.5)", fmt(k2), fmt(rd), fmt(gap)),
        details: vec![listing("rd-k2")],
    };
    (theory_check, folding, operator)
}

/// Unquantized RF chain against the discrete harness at 1e-2.
fn rf_equivalence() -> Outcome {
    let mut checks = Vec::new();
    for (m, top) in [(5u32, 24), (7, 16)] {
        let n = (1usize << m) - 1;
        let ebn0: Vec<f64> = (0..=top).map(|i| i as f64).collect();
        let snr: Vec<f64> = ebn0.iter().map(|&e| snr_db_from_ebn0_db(e, n, 2)).collect();
        let body = |kind: &str, axis: &str, values: &[f64]| {
            format!(
                r#"
experiment = "{kind}"
seed = 5
m = {m}
[grid]
{axis} = {values:?}
[stop]
target_errors = 200
max_slots = 200000
ber_floor = 5e-3
[[curve]]
name = "css-k2"
operator = "css"
kappa = 2
"#
            )
        };
        let rf = execute(&body("ber_rf", "ebn0_db", &ebn0));
        let discrete = execute(&body("ber_discrete", "snr_db", &snr));
        let a = crossing(&rf, "css-k2", XAxis::Ebn0Db, 1e-2);
        let b = crossing(&discrete, "css-k2", XAxis::Ebn0Db, 1e-2);
        let gap = a.zip(b).map(|(a, b)| a - b);
        checks.push((
            within(gap, 0.0, 1.0),
            format!("m = {m}: RF {} dB vs discrete {} dB Eb/N0, gap {} dB (<= 1)", fmt(a), fmt(b), fmt(gap)),
        ));
    }
    Outcome::from_checks(checks)
}

/// BER ordering of quantized receivers at the highest well-populated point.
fn quantization() -> Outcome {
    let rows = execute(
        r#"
experiment = "quantization"
seed = 6
m = 7
[grid]
ebn0_db = {start = 0.0, stop = 14.0, count = 8}
[stop]
target_errors = 100
max_slots = 20000
[[curve]]
name = "classic-2bit"
operator = "identity"
sparsity = 10
quantizer_bits = 2
[[curve]]
name = "css-4bit"
operator = "css"
kappa = 2
sparsity = 10
quantizer_bits = 4
[[curve]]
name = "classic-4bit"
operator = "identity"
sparsity = 10
quantizer_bits = 4
"#,
    );
    let names = ["classic-2bit", "css-4bit", "classic-4bit"];
    let top = rows
        .iter()
        .filter_map(|r| r.ebn0_db)
        .filter(|&x| {
            names.iter().all(|n| {
                rows.iter()
                    .any(|r| r.curve == *n && r.ebn0_db == Some(x) && r.errors.unwrap_or(0) >= 100)
            })
        })
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    let ber = |name: &str| {
        top.and_then(|x| rows.iter().find(|r| r.curve == name && r.ebn0_db == Some(x)))
            .and_then(|r| r.ber)
    };
    let (c2, s4, c4) = (ber(names[0]), ber(names[1]), ber(names[2]));
    let mut out = Outcome::from_checks(vec![
        (
            s4.zip(c2).is_some_and(|(a, b)| a < b),
            format!("css-4bit {} < classic-2bit {}", fmt_e(s4), fmt_e(c2)),
        ),
        (
            c4.zip(s4).is_some_and(|(a, b)| a < b),
            format!("classic-4bit {} < css-4bit {}", fmt_e(c4), fmt_e(s4)),
        ),
    ]);
    out.summary = format!("{} at Eb/N0 {} dB", out.summary, fmt(top));
    for n in names {
        let pts = ber_points(curve(&rows, n), XAxis::Ebn0Db);
        out.details.push(format!(
            "{n}: {}",
            pts.iter().map(|(x, b)| format!("{x:.0}:{b:.2e}")).collect::<Vec<_>>().join(" ")
        ));
    }
    out
}

fn fmt_e(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3e}"))
}

/// Line items against the closed form, the iteration line and the run-time
/// model fit.
fn complexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mismatches = (0..1000)
        .filter(|_| {
            let n = rng.random_range(2..5000u64);
            let m = rng.random_range(1..=n);
            let s = rng.random_range(1..=m);
            let k = rng.random_range(0..500u64);
            let model = ComplexityModel::new(k, s, m, n);
            model.line_items().sum() != model.closed_form()
        })
        .count();
    let mut checks = vec![(
        mismatches == 0,
        format!("line items sum to the closed form for 1000 random tuples ({mismatches} mismatches)"),
    )];

    let mut rows = execute(
        r#"
experiment = "complexity"
seed = 7
m = 10
[grid]
delta = {start = 0.0625, stop = 0.9375, count = 15}
rho = {start = 0.0625, stop = 0.9375, count = 15}
[phase]
batch = 3
max_trials = 3
[[curve]]
name = "fed-s"
operator = "css"
[[curve]]
name = "fed-2s"
operator = "css"
sparsity_multiplier = 2
"#,
    );
    let mut lines = Vec::new();
    for (name, expected) in [("fed-s", 0.5), ("fed-2s", 0.25)] {
        let c: Vec<&ResultRow> = curve(&rows, name);
        let ridge = iteration_ridge(&c, 0.5);
        let trough = iteration_trough(&c, 0.5);
        checks.push((
            ridge.is_some_and(|l| (l.rho - expected).abs() <= 0.05),
            format!(
                "{name}: elevated-iteration line at rho {} (+{:.2}), expected {expected} +- 0.05",
                fmt(ridge.map(|l| l.rho)),
                ridge.map_or(0.0, |l| l.contrast)
            ),
        ));
        lines.push(format!(
            "{name}: strongest depressed-iteration line at rho {} ({:.2})",
            fmt(trough.map(|l| l.rho)),
            trough.map_or(0.0, |l| l.contrast)
        ));
    }
    for name in ["fed-s", "fed-2s"] {
        let fit = fit_curve(&mut rows, name);
        checks.push((
            fit.as_ref().is_some_and(|f| f.correlation > 0.8),
            format!(
                "{name}: measured vs predicted run time correlation {} (> 0.8), c = {}",
                fmt(fit.as_ref().map(|f| f.correlation)),
                fit.as_ref().map_or("n/a".into(), |f| format!("{:.3e} flops", f.c))
            ),
        ));
    }
    let mut out = Outcome::from_checks(checks);
    out.details.extend(lines);
    out
}

fn gaussian_problem(rng: &mut ChaCha8Rng) -> (DenseMatrix, Vec<Complex64>, usize) {
    let m = rng.random_range(10..40);
    let n = m + rng.random_range(2..40);
    let s = rng.random_range(1..=m / 2);
    let a = DenseMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut alpha = vec![Complex64::default(); n];
    for j in rand::seq::index::sample(rng, n, s) {
        alpha[j] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let mut y = a.mul_vec(&alpha);
    let noise = if rng.random::<bool>() { 0.0 } else { rng.random_range(0.01..1.0) };
    for v in &mut y {
        *v += Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * noise;
    }
    (a, y, s)
}

/// Prewhitening, pursuit invariants, worker-count determinism and BER
/// monotonicity.
fn properties() -> Outcome {
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (n, sigma2, draws) = (127, 1.3, 20_000);
    let op = build_operator(OperatorKind::Rademacher, n, 2, &mut rng).expect("operator");
    let p = build_prewhitener(&op).expect("gram is full rank").expect("rademacher is prewhitened");
    let m = op.rows();
    let mut cov = vec![Complex64::default(); m * m];
    for _ in 0..draws {
        let v = p.apply(&op.apply(&complex_gaussian(&mut rng, n, sigma2)).expect("dimensions"));
        for i in 0..m {
            for j in 0..m {
                cov[i * m + j] += v[i] * v[j].conj();
            }
        }
    }
    let worst_diag = (0..m).map(|i| (cov[i * m + i].re / draws as f64 / sigma2 - 1.0).abs()).fold(0.0, f64::max);
    let worst_off = (0..m * m)
        .filter(|k| k / m != k % m)
        .map(|k| cov[k].norm() / draws as f64 / sigma2)
        .fold(0.0, f64::max);
    checks.push((
        worst_diag < 0.05 && worst_off < 0.05,
        format!("prewhitened covariance: worst diagonal error {worst_diag:.3}, worst off-diagonal {worst_off:.3} (< 0.05 of sigma^2)"),
    ));

    let (mut rising, mut skew) = (0, 0.0f64);
    for _ in 0..300 {
        let (a, y, s) = gaussian_problem(&mut rng);
        let out = subspace_pursuit(&PursuitProblem { a: &a, y: &y, sparsity: s }, &PursuitOptions::default())
            .expect("pursuit runs");
        rising += out.residual_norms.windows(2).filter(|w| w[1] >= w[0]).count();
        let fit = a.mul_vec(&out.alpha_hat);
        let r: Vec<Complex64> = y.iter().zip(&fit).map(|(u, v)| u - v).collect();
        let back = a.correlate(&r);
        let scale = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        for &j in &out.support {
            skew = skew.max(back[j].norm() / scale);
        }
    }
    checks.push((rising == 0, format!("pursuit residual norms strictly decrease in 300 problems ({rising} rises)")));
    checks.push((skew < 1e-8, format!("final residual orthogonal to the chosen columns (worst {skew:.1e})")));

    let spec = ExperimentSpec::from_toml(
        r#"
experiment = "ber_discrete"
seed = 11
m = 7
[grid]
snr_db = {start = -20.0, stop = -8.0, count = 7}
[stop]
target_errors = 100
max_slots = 20000
[[curve]]
name = "classic"
operator = "identity"
sparsity = 2
[[curve]]
name = "css-k2"
operator = "css"
kappa = 2
sparsity = 2
"#,
    )
    .expect("config");
    let strip = |rows: Vec<ResultRow>| rows.iter().map(ResultRow::without_timing).collect::<Vec<_>>();
    let reference = strip(
        run(
            &spec,
            &RunOptions {
                execution: Execution::Sequential,
                progress: false,
            },
        )
        .expect("run")
        .rows,
    );
    let mut same = true;
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
        let rows = pool.install(|| strip(run(&spec, &RunOptions::default()).expect("run").rows));
        same &= rows == reference;
    }
    checks.push((same, "identical rows sequentially and on 1, 2 and 4 workers".into()));

    let mut worst = f64::NEG_INFINITY;
    for name in ["classic", "css-k2"] {
        let c = curve(&reference, name);
        for w in c.windows(2) {
            let (Some(a), Some(b)) = (w[0].ber, w[1].ber) else { continue };
            let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            let rise = b - a;
            worst = worst.max(if se > 0.0 { rise / se } else if rise > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    checks.push((
        worst <= 1.0,
        format!("BER non-increasing in SNR (largest rise {worst:.2} standard errors, <= 1)"),
    ));
    Outcome::from_checks(checks)
}

fn main() {
    let wanted: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let selected = |id: u32| wanted.is_empty() || wanted.contains(&id);

    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let timed = |id: u32, title: &'static str, f: &dyn Fn() -> Outcome, results: &mut Vec<_>| {
        if selected(id) {
            let start = Instant::now();
            let o = f();
            let secs = start.elapsed().as_secs_f64();
            report(id, title, &o, secs);
            results.push((id, title, o, secs));
        }
    };
    timed(1, "gold correlation structure", &gold_correlation, &mut results);
    timed(2, "noiseless exact recovery", &noiseless_recovery, &mut results);
    timed(3, "phase-transition agreement", &phase_transition, &mut results);
    if [4, 5, 6].into_iter().any(selected) {
        let start = Instant::now();
        let (a, b, c) = discrete_m10();
        let secs = start.elapsed().as_secs_f64();
        for (id, title, o) in [
            (4, "classic receiver vs theory", a),
            (5, "noise folding", b),
            (6, "CSS vs random demodulator", c),
        ] {
            if selected(id) {
                report(id, title, &o, secs);
                results.push((id, title, o, secs));
            }
        }
    }
    timed(7, "RF chain vs discrete model", &rf_equivalence, &mut results);
    timed(8, "quantization ordering", &quantization, &mut results);
    timed(9, "complexity model", &complexity, &mut results);
    timed(10, "property suites", &properties, &mut results);

    println!();
    println!("acceptance summary");
    for (id, title, o, secs) in &results {
        println!("{} criterion {id:>2} {title}: {} ({secs:.0} s)", if o.pass { "PASS" } else { "FAIL" }, o.summary);
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("{} criteria, {} passed, {failed} failed", results.len(), results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn report(id: u32, title: &str, o: &Outcome, secs: f64) {
    println!("{} criterion {id:>2} {title}: {} ({secs:.0} s)", if o.pass { "PASS" } else { "FAIL" }, o.summary);
    for d in &o.details {
        println!("    {d}");
    }
}
