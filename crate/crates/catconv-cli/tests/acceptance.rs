//! Acceptance gate: ten criteria covering calibration, power, concordance,
//! estimator and special-function accuracy, determinism, degenerate
//! handling, and the asymptotic-vs-bootstrap cost gap. Each test prints a
//! PASS line on success (visible with --nocapture). The three Monte Carlo
//! grids are computed once and shared.

use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::Instant;

use catconv::bootstrap::{darboot, BootstrapConfig, NullModel};
use catconv::chain::{CategoryAlphabet, SegmentSet};
use catconv::diagnose::run_method;
use catconv::simulate::{derive_stream, simulate_dar1, Dar1Params};
use catconv::special::chi_squared_sf;
use catconv::stats::{
    estimate_dar1, hangartner_test, kappa_hat, pearson_statistic, weiss_test, Method, Warning,
};
use catconv::study::{run_bench, run_study, BenchGrid, StudyGrid, StudyResult};
use catconv::tables::FrequencyTable;
use catconv::Error;

const ALPHA_BAND: (f64, f64) = (0.025, 0.08);

struct TimedStudy {
    result: StudyResult,
    seconds: f64,
}

fn timed_study(grid: StudyGrid) -> TimedStudy {
    let start = Instant::now();
    let result = run_study(&grid).expect("study grid runs");
    TimedStudy {
        result,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Converged chains (beta = 1) at t = 1000 across the autocorrelation axis;
/// feeds the calibration, miscalibration, and concordance criteria.
fn null_grid() -> &'static TimedStudy {
    static GRID: OnceLock<TimedStudy> = OnceLock::new();
    GRID.get_or_init(|| {
        timed_study(StudyGrid {
            lengths: vec![1000],
            phis: vec![0.0, 0.5, 0.75],
            betas: vec![1.0],
            replications: 500,
            bootstrap_replicates: 200,
            keep_pvalues: true,
            seed: 2024,
            ..StudyGrid::default()
        })
    })
}

/// Grossly different segment distributions (beta = 0) without
/// autocorrelation; feeds the power criterion.
fn power_grid() -> &'static TimedStudy {
    static GRID: OnceLock<TimedStudy> = OnceLock::new();
    GRID.get_or_init(|| {
        timed_study(StudyGrid {
            lengths: vec![1000],
            phis: vec![0.0],
            betas: vec![0.0],
            replications: 500,
            bootstrap_replicates: 200,
            seed: 7,
            ..StudyGrid::default()
        })
    })
}

/// Intermediate alternative across segment lengths; feeds the
/// small-sample ordering criterion.
fn length_grid() -> &'static TimedStudy {
    static GRID: OnceLock<TimedStudy> = OnceLock::new();
    GRID.get_or_init(|| {
        timed_study(StudyGrid {
            lengths: vec![10, 100, 1000],
            phis: vec![0.5],
            betas: vec![0.5],
            replications: 500,
            bootstrap_replicates: 200,
            seed: 11,
            ..StudyGrid::default()
        })
    })
}

fn rate(result: &StudyResult, method: Method, length: usize, phi: f64, beta: f64) -> f64 {
    result
        .cell(method, length, phi, beta)
        .unwrap_or_else(|| panic!("missing cell {method} t={length} phi={phi} beta={beta}"))
        .rejection_rate()
}

const NON_HANGARTNER: [Method; 5] = [
    Method::Weiss,
    Method::Darboot,
    Method::Mcboot,
    Method::Billingsley,
    Method::Billingsleyboot,
];

#[test]
fn criterion_01_type_i_error_is_calibrated() {
    let study = null_grid();
    for &phi in &[0.0, 0.5] {
        for method in NON_HANGARTNER {
            let r = rate(&study.result, method, 1000, phi, 1.0);
            assert!(
                (ALPHA_BAND.0..=ALPHA_BAND.1).contains(&r),
                "{method} at phi={phi}: rejection rate {r} outside [{}, {}]",
                ALPHA_BAND.0,
                ALPHA_BAND.1,
            );
        }
    }
    assert!(
        study.seconds < 900.0,
        "null grid took {:.1}s, budgeted 900s",
        study.seconds
    );
    println!(
        "criterion 01 type-I error calibration: PASS ({:.0}s)",
        study.seconds
    );
}

#[test]
fn criterion_02_hangartner_miscalibrates_under_autocorrelation() {
    let study = &null_grid().result;
    let hangartner = rate(study, Method::Hangartner, 1000, 0.75, 1.0);
    assert!(
        hangartner > 0.20,
        "hangartner rejection rate {hangartner} not inflated at phi=0.75"
    );
    for method in NON_HANGARTNER {
        let r = rate(study, method, 1000, 0.75, 1.0);
        assert!(
            (0.02..=0.10).contains(&r),
            "{method} at phi=0.75: rejection rate {r} outside [0.02, 0.10]"
        );
    }
    println!("criterion 02 hangartner miscalibration: PASS");
}

#[test]
fn criterion_03_all_methods_have_power() {
    let study = &power_grid().result;
    for method in Method::ALL {
        let r = rate(study, method, 1000, 0.0, 0.0);
        assert!(r > 0.95, "{method}: power {r} not above 0.95");
    }
    println!("criterion 03 power at beta=0: PASS");
}

#[test]
fn criterion_04_procedures_concord() {
    let study = &null_grid().result;
    let concordance = study.concordance().expect("p-values retained");
    let r_of = |phi: f64, a: Method, b: Method| -> f64 {
        concordance
            .iter()
            .find(|c| {
                c.phi == phi
                    && ((c.method_a == a && c.method_b == b)
                        || (c.method_a == b && c.method_b == a))
            })
            .unwrap_or_else(|| panic!("missing pair {a}/{b} at phi={phi}"))
            .r
    };
    let close_pairs = [
        (Method::Weiss, Method::Darboot),
        (Method::Weiss, Method::Mcboot),
        (Method::Darboot, Method::Mcboot),
        (Method::Billingsley, Method::Billingsleyboot),
    ];
    for &phi in &[0.0, 0.75] {
        for &(a, b) in &close_pairs {
            let r = r_of(phi, a, b);
            assert!(r > 0.9, "{a}/{b} at phi={phi}: r={r} not above 0.9");
        }
    }
    let hw_independent = r_of(0.0, Method::Hangartner, Method::Weiss);
    assert!(
        hw_independent > 0.97,
        "hangartner/weiss at phi=0: r={hw_independent} not above 0.97"
    );
    let hw_dependent = r_of(0.75, Method::Hangartner, Method::Weiss);
    assert!(
        hw_dependent < 0.95,
        "hangartner/weiss at phi=0.75: r={hw_dependent} not below 0.95"
    );
    println!("criterion 04 procedure concordance: PASS");
}

#[test]
fn criterion_05_short_segments_lose_power() {
    let study = &length_grid().result;
    for method in Method::ALL {
        let long = rate(study, method, 1000, 0.5, 0.5);
        for &short in &[10usize, 100] {
            let r = rate(study, method, short, 0.5, 0.5);
            assert!(
                r < long,
                "{method}: rejection at t={short} ({r}) not strictly below t=1000 ({long})"
            );
        }
    }
    println!("criterion 05 small-sample conservatism: PASS");
}

fn single_chain(phi: f64, length: usize, seed_index: u64) -> SegmentSet {
    let params = Dar1Params::new(vec![0.25, 0.3, 0.45], phi).unwrap();
    let mut rng = derive_stream(99, seed_index);
    let path = simulate_dar1(&params, length, &mut rng).unwrap();
    SegmentSet::from_indices(vec![path], CategoryAlphabet::integers(3)).unwrap()
}

#[test]
fn criterion_06_estimator_oracles() {
    // kappa_hat recovers phi^m on long DAR(1) paths, judged against the
    // Monte Carlo spread of the estimator itself.
    let replicates = 16;
    for m in 1..=3usize {
        let values: Vec<f64> = (0..replicates)
            .map(|i| kappa_hat(&single_chain(0.75, 100_000, i), m).unwrap())
            .collect();
        let mean = values.iter().sum::<f64>() / replicates as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
        let se = (var / replicates as f64).sqrt();
        let target = 0.75f64.powi(m as i32);
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "kappa_hat lag {m}: mean {mean} vs {target}, 3*SE={}",
            3.0 * se
        );
    }

    // c_hat is exactly (1 + phi_hat)/(1 - phi_hat).
    let set = SegmentSet::from_indices(
        vec![
            single_chain(0.5, 400, 60).segments()[0].clone(),
            single_chain(0.5, 400, 61).segments()[0].clone(),
        ],
        CategoryAlphabet::integers(3),
    )
    .unwrap();
    let est = estimate_dar1(&set).unwrap();
    assert_eq!(
        est.c_hat.to_bits(),
        ((1.0 + est.phi_hat) / (1.0 - est.phi_hat)).to_bits(),
        "c_hat is not exactly (1+phi)/(1-phi)"
    );

    // Hand-computed table: counts [[3,1],[1,3]] give X^2 = 2, df = 1.
    let table_set = SegmentSet::from_indices(
        vec![vec![0, 0, 0, 1], vec![0, 1, 1, 1]],
        CategoryAlphabet::integers(2),
    )
    .unwrap();
    let (x2, df) = pearson_statistic(&FrequencyTable::from_segments(&table_set));
    assert!((x2 - 2.0).abs() <= 1e-12, "X^2 = {x2}, expected 2");
    assert_eq!(df, 1);
    let out = hangartner_test(&FrequencyTable::from_segments(&table_set)).unwrap();
    assert!(
        (out.p_value - 0.157_299_207_050_285_13).abs() <= 1e-12,
        "p = {}, expected erfc(1)",
        out.p_value
    );

    // Hand-computed kappa sequence: [1,1,2,2] at lag 1 gives
    // 1 + 1/4 - (1/3)/(1/2) = 7/12.
    let seq = SegmentSet::from_indices(vec![vec![0, 0, 1, 1]], CategoryAlphabet::integers(2))
        .unwrap();
    let k = kappa_hat(&seq, 1).unwrap();
    assert!((k - 7.0 / 12.0).abs() <= 1e-12, "kappa = {k}, expected 7/12");

    println!("criterion 06 estimator oracles: PASS");
}

/// Composite Simpson integral of f over [lo, hi].
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let x = lo + h * i as f64;
        acc += f(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
    }
    acc * h / 3.0
}

/// Adaptive Simpson with absolute tolerance.
fn adaptive(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let left = simpson(f, lo, mid, 8);
    let right = simpson(f, mid, hi, 8);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, lo, mid, left, tol * 0.5, depth - 1)
        + adaptive(f, mid, hi, right, tol * 0.5, depth - 1)
}

fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    let whole = simpson(&f, lo, hi, 8);
    adaptive(&f, lo, hi, whole, tol, 40)
}

/// Gamma(k/2) by exact half-integer recursion.
fn gamma_half_integer(a: f64) -> f64 {
    let mut value = if (a * 2.0).rem_euclid(2.0) == 1.0 {
        std::f64::consts::PI.sqrt()
    } else {
        1.0
    };
    let mut k = if (a * 2.0).rem_euclid(2.0) == 1.0 { 0.5 } else { 1.0 };
    while k < a - 0.25 {
        value *= k;
        k += 1.0;
    }
    value
}

/// Quadrature oracle for the regularized lower incomplete gamma at
/// half-integer a; substitutes t = u^2 so the integrand stays bounded
/// when a < 1, and divides by Gamma(a) inside the integrand so the
/// absolute tolerance is meaningful at large a.
fn oracle_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let norm = gamma_half_integer(a);
    integrate(
        |u| 2.0 * u.powf(2.0 * a - 1.0) * (-u * u).exp() / norm,
        0.0,
        x.sqrt(),
        1e-12,
    )
}

fn oracle_erfc(z: f64) -> f64 {
    2.0 / std::f64::consts::PI.sqrt() * integrate(|t| (-t * t).exp(), z, z + 12.0, 1e-13)
}

#[test]
fn criterion_07_special_function_accuracy() {
    // Closed forms on x in [0, 50] at half steps.
    for k in 0..=100 {
        let x = k as f64 * 0.5;
        let df2 = (-x / 2.0).exp();
        assert!(
            (chi_squared_sf(2.0, x).unwrap() - df2).abs() <= 1e-6,
            "sf(2, {x}) off closed form"
        );
        let df4 = (1.0 + x / 2.0) * (-x / 2.0).exp();
        assert!(
            (chi_squared_sf(4.0, x).unwrap() - df4).abs() <= 1e-6,
            "sf(4, {x}) off closed form"
        );
        let df1 = oracle_erfc((x / 2.0).sqrt());
        assert!(
            (chi_squared_sf(1.0, x).unwrap() - df1).abs() <= 1e-6,
            "sf(1, {x}) off erfc oracle"
        );
    }

    // Quadrature oracle over a in {0.5, 1, ..., 25}, x spanning [0, 100].
    let mut xs: Vec<f64> = vec![0.0, 0.1, 0.5, 1.0, 2.5];
    xs.extend((1..=20).map(|k| k as f64 * 5.0));
    let mut worst = 0.0f64;
    for half in 1..=50 {
        let a = half as f64 * 0.5;
        for &x in &xs {
            let got = 1.0 - chi_squared_sf(2.0 * a, 2.0 * x).unwrap();
            let want = oracle_gamma_p(a, x);
            worst = worst.max((got - want).abs());
        }
    }
    assert!(worst <= 1e-9, "max |P - quadrature| = {worst:e}");
    println!("criterion 07 special-function accuracy: PASS (max err {worst:.1e})");
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn expect_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn criterion_08_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();

    // Bootstrap engine, in process: identical replicate streams at any
    // worker count.
    let set = SegmentSet::from_indices(
        vec![
            single_chain(0.5, 300, 70).segments()[0].clone(),
            single_chain(0.5, 300, 71).segments()[0].clone(),
        ],
        CategoryAlphabet::integers(3),
    )
    .unwrap();
    let cfg = |workers: usize| BootstrapConfig {
        replicates: 200,
        seed: 5,
        workers: Some(workers),
        null_model: NullModel::Pooled,
    };
    let one = darboot(&set, &cfg(1)).unwrap();
    let four = darboot(&set, &cfg(4)).unwrap();
    assert_eq!(one.replicate_statistics, four.replicate_statistics);
    assert_eq!(one.p_value, four.p_value);

    // simulate: same flags, same bytes.
    let sim_args = [
        "simulate", "--model", "dar1", "--p", "0.25,0.3,0.45", "--phi", "0.5", "--length",
        "500", "--chains", "4", "--seed", "3",
    ];
    let first = cli(&sim_args);
    let second = cli(&sim_args);
    expect_ok(&first, "simulate");
    assert_eq!(first.stdout, second.stdout, "simulate bytes differ");

    // diagnose: worker counts 1 and 4.
    let chains = dir.path().join("chains.csv");
    std::fs::write(&chains, &first.stdout).unwrap();
    let diag = |workers: &str| {
        cli(&[
            "diagnose",
            "--input",
            chains.to_str().unwrap(),
            "--format",
            "wide",
            "--method",
            "all",
            "--boot-B",
            "100",
            "--seed",
            "17",
            "--workers",
            workers,
        ])
    };
    let d1 = diag("1");
    let d4 = diag("4");
    expect_ok(&d1, "diagnose");
    assert_eq!(d1.stdout, d4.stdout, "diagnose bytes differ across workers");

    // simstudy: worker counts 1 and 4, compared file by file.
    let study = |sub: &str, workers: &str| {
        let out_dir = dir.path().join(sub);
        let out = cli(&[
            "simstudy",
            "--lengths",
            "80",
            "--phis",
            "0,0.5",
            "--betas",
            "0.5,1",
            "--replications",
            "10",
            "--boot-B",
            "40",
            "--seed",
            "23",
            "--workers",
            workers,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        expect_ok(&out, "simstudy");
        out_dir
    };
    let s1 = study("one", "1");
    let s4 = study("four", "4");
    for name in ["cells.csv", "concordance.csv"] {
        assert_eq!(
            std::fs::read(s1.join(name)).unwrap(),
            std::fs::read(s4.join(name)).unwrap(),
            "simstudy {name} differs across workers"
        );
    }

    // bench: timings necessarily vary, so compare everything but the
    // timing columns.
    let bench_args = [
        "bench", "--chains", "2", "--categories", "2", "--lengths", "100", "--methods",
        "hangartner,weiss", "--reps", "1", "--seed", "2",
    ];
    let b1 = cli(&bench_args);
    let b2 = cli(&bench_args);
    expect_ok(&b1, "bench");
    let strip = |out: &Output| {
        String::from_utf8(out.stdout.clone())
            .unwrap()
            .lines()
            .map(|l| l.split(',').take(5).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&b1), strip(&b2), "bench grid columns differ");

    println!("criterion 08 determinism: PASS");
}

#[test]
fn criterion_09_degenerate_inputs_are_handled() {
    let constant = SegmentSet::from_indices(
        vec![vec![0; 120], vec![0; 120]],
        CategoryAlphabet::integers(1),
    )
    .unwrap();

    // Asymptotic paths: df = 0, p = 1, warnings, no error.
    for method in [Method::Hangartner, Method::Weiss, Method::Billingsley] {
        let out = run_method(&constant, method, &BootstrapConfig::default()).unwrap();
        assert_eq!(out.df, Some(0), "{method} df");
        assert_eq!(out.p_value, 1.0, "{method} p-value");
        assert!(
            out.warnings.contains(&Warning::ZeroDf)
                && out.warnings.contains(&Warning::DegenerateSupport),
            "{method} warnings: {:?}",
            out.warnings
        );
    }

    // DAR(1) estimation refuses: no variation means no dependence estimate.
    assert!(matches!(
        estimate_dar1(&constant),
        Err(Error::InsufficientVariation)
    ));
    let boot = BootstrapConfig {
        replicates: 30,
        ..BootstrapConfig::default()
    };
    assert!(matches!(
        run_method(&constant, Method::Darboot, &boot),
        Err(Error::InsufficientVariation)
    ));
    assert!(weiss_test(&constant).unwrap().warnings.contains(&Warning::ZeroDf));

    // A battery of awkward inputs: every method either returns a coherent
    // outcome or a typed error, never a panic or NaN.
    let corpus = [
        SegmentSet::from_indices(vec![vec![0, 1], vec![1, 0]], CategoryAlphabet::integers(2))
            .unwrap(),
        SegmentSet::from_indices(
            vec![vec![0, 1, 0, 1, 0, 1], vec![0, 1, 0, 1, 0, 1]],
            CategoryAlphabet::integers(2),
        )
        .unwrap(),
        SegmentSet::from_indices(
            vec![vec![0; 50], (0..50).map(|t| t % 2).collect()],
            CategoryAlphabet::integers(2),
        )
        .unwrap(),
        SegmentSet::from_indices(
            vec![(0..30).map(|t| t % 5).collect(), (0..30).rev().map(|t| t % 5).collect()],
            CategoryAlphabet::integers(5),
        )
        .unwrap(),
        SegmentSet::from_indices(
            vec![vec![0, 0, 1, 2, 0, 0, 1, 0, 0, 2], vec![2, 2, 2, 2, 1, 2, 2, 2, 2, 0]],
            CategoryAlphabet::integers(3),
        )
        .unwrap(),
    ];
    for (i, set) in corpus.iter().enumerate() {
        for method in Method::ALL {
            match run_method(set, method, &boot) {
                Ok(out) => {
                    assert!(
                        out.statistic.is_finite() && out.statistic >= 0.0,
                        "corpus {i} {method}: statistic {}",
                        out.statistic
                    );
                    assert!(
                        (0.0..=1.0).contains(&out.p_value),
                        "corpus {i} {method}: p {}",
                        out.p_value
                    );
                }
                Err(Error::InsufficientVariation) => {}
                Err(other) => panic!("corpus {i} {method}: unexpected error {other}"),
            }
        }
    }
    println!("criterion 09 degenerate handling: PASS");
}

#[test]
fn criterion_10_bootstraps_cost_more() {
    let grid = BenchGrid {
        chains: vec![4],
        categories: vec![4],
        lengths: vec![10_000],
        methods: Method::ALL.to_vec(),
        bootstrap_replicates: 200,
        repetitions: 3,
        seed: 1,
    };
    let rows = run_bench(&grid).unwrap();
    let median_of = |methods: &[Method]| -> f64 {
        let mut medians: Vec<f64> = rows
            .iter()
            .filter(|r| methods.contains(&r.method))
            .map(|r| r.median_seconds)
            .collect();
        medians.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians[medians.len() / 2]
    };
    let asymptotic = median_of(&[Method::Hangartner, Method::Weiss, Method::Billingsley]);
    let bootstrap = median_of(&[Method::Darboot, Method::Mcboot, Method::Billingsleyboot]);
    assert!(
        bootstrap > 5.0 * asymptotic,
        "bootstrap median {bootstrap}s not above 5x asymptotic median {asymptotic}s"
    );
    println!(
        "criterion 10 bench sanity: PASS (ratio {:.0}x)",
        bootstrap / asymptotic
    );
}
