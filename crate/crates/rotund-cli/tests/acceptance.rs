//! Acceptance gate: one test per shipping criterion. Every test collects its
//! clause failures, prints a single `acceptance criterion N (...): PASS|FAIL`
//! line, and panics with the full clause list when anything missed its
//! tolerance or runtime budget. Tolerances and budgets are stated inline next
//! to the clause they guard.

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rotund::domain::DomainSpec;
use rotund::functional::weak_gap;
use rotund::integrand::{
    catalog_get, gradient_audit, numeric_conjugate, suite_dimension, ConjugateData, Integrand,
    CATALOG_NAMES,
};
use rotund::lab::{self, preservation_check_i, preservation_check_ii, RunConfig, SequenceFamily};
use rotund::maxent::{brute_force_primal, solve, stability_run, trig_moment_demo};
use rotund::probe::{
    level_set_compactness_probe, strict_convexity_transfer, ProbeResult, DEFAULT_TRIALS,
};
use rotund::watson::{lattice_average, threshold_alpha, watson};
use rotund_cli::load_problem;

macro_rules! check {
    ($fails:ident, $cond:expr, $($msg:tt)+) => {
        if !$cond {
            $fails.push(format!($($msg)+));
        }
    };
}

/// Prints the per-criterion verdict line and fails the test on any clause.
fn conclude(criterion: &str, fails: Vec<String>) {
    if fails.is_empty() {
        println!("acceptance {criterion}: PASS");
    } else {
        println!("acceptance {criterion}: FAIL");
        panic!("{criterion}:\n  {}", fails.join("\n  "));
    }
}

fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

#[test]
fn criterion_1_watson_threshold() {
    let mut fails = Vec::new();

    // Threshold moment level, absolute error at most 1e-9, within 5 s.
    let started = Instant::now();
    let alpha = threshold_alpha();
    let elapsed = started.elapsed().as_secs_f64();
    let reference = 0.340537329550999142833;
    check!(
        fails,
        (alpha - reference).abs() <= 1e-9,
        "threshold {alpha:.18} off reference by {:e}",
        (alpha - reference).abs()
    );
    check!(fails, elapsed <= 5.0, "threshold took {elapsed:.2} s, budget 5 s");

    // Bessel-form quadrature against the direct cube average, 1e-6.
    for &w in &[0.0, 0.25, 0.5, 0.75, 0.99] {
        let bessel = watson(w).expect("watson value").value;
        let cube = lattice_average(w).expect("lattice average");
        check!(
            fails,
            (bessel - cube).abs() <= 1e-6,
            "route disagreement {:e} at w = {w}",
            (bessel - cube).abs()
        );
    }

    conclude("criterion 1 (watson threshold)", fails);
}

#[test]
fn criterion_2_counterexample_golden_numbers() {
    let mut fails = Vec::new();
    let config = RunConfig::default();

    // Burg values along the slab family: -log n / (1 + log n), to 1e-12.
    let slab = SequenceFamily::named("exlbr2").expect("family");
    let burg = catalog_get("burg", 1).expect("integrand");
    let started = Instant::now();
    let report = lab::run(&slab, &burg, &config).expect("lab run");
    let elapsed = started.elapsed().as_secs_f64();
    check!(fails, elapsed <= 1.0, "exlbr2 run took {elapsed:.2} s, budget 1 s");
    for row in &report.rows {
        let ln = (row.n as f64).ln();
        let closed = -ln / (1.0 + ln);
        check!(
            fails,
            (row.value - closed).abs() <= 1e-12,
            "exlbr2 n = {}: value {:.15} vs closed form {closed:.15}",
            row.n,
            row.value
        );
        // Both cells sit at least eta away from the constant limit.
        check!(
            fails,
            row.deviation >= 0.5,
            "exlbr2 n = {}: deviation {} below 1/2",
            row.n,
            row.deviation
        );
    }

    // Linear-plus-barrier values along the spike family:
    // -(log n)/n + 2 - 1/n, to 1e-12, with the limit integrand value 1.
    let spike = SequenceFamily::named("incompat").expect("family");
    let bpl = catalog_get("burg_plus_linear", 1).expect("integrand");
    let started = Instant::now();
    let report = lab::run(&spike, &bpl, &config).expect("lab run");
    let elapsed = started.elapsed().as_secs_f64();
    check!(fails, elapsed <= 1.0, "incompat run took {elapsed:.2} s, budget 1 s");
    check!(
        fails,
        (report.limit_value - 1.0).abs() <= 1e-12,
        "limit value {} is not 1",
        report.limit_value
    );
    for row in &report.rows {
        let nf = row.n as f64;
        let closed = -(nf.ln()) / nf + 2.0 - 1.0 / nf;
        check!(
            fails,
            (row.value - closed).abs() <= 1e-12,
            "incompat n = {}: value {:.15} vs closed form {closed:.15}",
            row.n,
            row.value
        );
        check!(
            fails,
            (row.deviation - 1.0 / nf).abs() <= 1e-12,
            "incompat n = {}: deviation {} is not 1/n",
            row.n,
            row.deviation
        );
        // The value gap must close to within 1e-3 of the persistent offset 2
        // by n = 10^4.
        if row.n == 10_000 {
            check!(
                fails,
                (row.value - 2.0).abs() <= 1e-3,
                "incompat n = 10^4: |value - 2| = {:e} exceeds 1e-3",
                (row.value - 2.0).abs()
            );
        }
    }
    check!(
        fails,
        report.rows.iter().any(|r| r.n == 10_000),
        "schedule must include n = 10^4"
    );

    conclude("criterion 2 (counterexample golden numbers)", fails);
}

#[test]
fn criterion_3_duality_oracle_equivalence() {
    let mut fails = Vec::new();
    let files = [
        "bs_mean.json",
        "bs_cos1.json",
        "bs_trig3.json",
        "fd_mean.json",
        "fd_cos1.json",
        "fd_window.json",
    ];
    for file in files {
        let spec = load_problem(&problems_dir().join(file)).expect("problem file");
        check!(
            fails,
            spec.integrand == "boltzmann_shannon" || spec.integrand == "fermi_dirac",
            "{file}: integrand {} outside the audited pair",
            spec.integrand
        );
        check!(fails, spec.cells <= 64, "{file}: {} cells exceed 64", spec.cells);
        let problem = spec.to_problem().expect("valid problem");

        let started = Instant::now();
        let solution = match solve(&problem) {
            Ok(s) => s,
            Err(e) => {
                fails.push(format!("{file}: solve failed: {e}"));
                continue;
            }
        };
        let elapsed = started.elapsed().as_secs_f64();
        check!(fails, elapsed <= 1.0, "{file}: solve took {elapsed:.2} s, budget 1 s");

        let brute = match brute_force_primal(&problem) {
            Ok(b) => b,
            Err(e) => {
                fails.push(format!("{file}: brute force failed: {e}"));
                continue;
            }
        };
        check!(
            fails,
            (solution.value - brute.value).abs() <= 1e-5,
            "{file}: value {} vs brute force {} differ by {:e}",
            solution.value,
            brute.value,
            (solution.value - brute.value).abs()
        );
        check!(
            fails,
            solution.gap.abs() <= 1e-6,
            "{file}: duality gap {:e} exceeds 1e-6",
            solution.gap.abs()
        );
        check!(
            fails,
            solution.residual_norm <= 1e-8,
            "{file}: residual norm {:e} exceeds 1e-8",
            solution.residual_norm
        );
        for (i, r) in solution.residuals.iter().enumerate() {
            check!(
                fails,
                r.abs() <= 1e-8,
                "{file}: residual {i} is {:e}",
                r.abs()
            );
        }
    }
    conclude("criterion 3 (duality oracle equivalence)", fails);
}

#[test]
fn criterion_4_stability_property() {
    let mut fails = Vec::new();
    let demo = trig_moment_demo();

    // Values must be nondecreasing within 1e-9 along every nested schedule;
    // the full prefix ladder plus two sparser subsets exercise it.
    let schedules: [&[usize]; 3] = [&[1, 2, 3, 4, 5, 6, 7, 8, 9], &[2, 5, 8], &[1, 3, 5, 7, 9]];
    for schedule in schedules {
        let report = stability_run(&demo, schedule).expect("stability run");
        check!(
            fails,
            report.monotone,
            "values decreased by {:e} along {schedule:?}",
            report.worst_decrease
        );
    }

    // Distance to the full solution must shrink by 10x from one constraint
    // to eight on the documented demo.
    let report = stability_run(&demo, &[1, 2, 3, 4, 5, 6, 7, 8, 9]).expect("stability run");
    let d1 = report
        .entries
        .iter()
        .find(|e| e.n == 1)
        .expect("n = 1 entry")
        .distance_to_full;
    let d8 = report
        .entries
        .iter()
        .find(|e| e.n == 8)
        .expect("n = 8 entry")
        .distance_to_full;
    check!(
        fails,
        d1 >= 10.0 * d8,
        "L1 distance fell only from {d1:e} to {d8:e}, below a factor of 10"
    );

    conclude("criterion 4 (stability property)", fails);
}

#[test]
fn criterion_5_conjugate_gradient_suite() {
    let mut fails = Vec::new();
    let started = Instant::now();

    for name in CATALOG_NAMES {
        let phi = catalog_get(name, suite_dimension(name)).expect("catalog entry");
        let audit = gradient_audit(&phi, 42, 100);
        check!(
            fails,
            audit.max_value_grad_err <= 1e-6,
            "{name}: value gradient error {:e}",
            audit.max_value_grad_err
        );
        check!(
            fails,
            audit.max_conj_grad_err <= 1e-6,
            "{name}: conjugate gradient error {:e}",
            audit.max_conj_grad_err
        );
        check!(
            fails,
            audit.max_fenchel_young_gap <= 1e-10,
            "{name}: Fenchel-Young gap {:e}",
            audit.max_fenchel_young_gap
        );

        // Independent grid-maximization oracle for the conjugate values,
        // boxes centered on the conjugate gradient so lattice spacing is
        // the only error source.
        if phi.conjugate_data < ConjugateData::FirstOrder {
            continue;
        }
        let grid = match phi.dimension {
            1 => 20_001,
            2 => 301,
            _ => 61,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y = phi.conj_domain.sample_interior(&mut rng, 0.2);
            let zstar = phi.conj_grad(&y).expect("conjugate gradient");
            let boxed = DomainSpec::ClosedBox {
                lo: zstar.iter().map(|v| v - 0.5).collect(),
                hi: zstar.iter().map(|v| v + 0.5).collect(),
            };
            let numeric = numeric_conjugate(&phi, &y, &boxed, grid);
            let closed = phi.conj_value(&y);
            check!(
                fails,
                (numeric - closed).abs() <= 1e-3,
                "{name}: numeric conjugate {numeric} vs closed form {closed} at y = {y:?}"
            );
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    check!(fails, elapsed <= 30.0, "suite took {elapsed:.1} s, budget 30 s");
    conclude("criterion 5 (conjugate/gradient suite)", fails);
}

#[test]
fn criterion_6_preservation_checks() {
    let mut fails = Vec::new();
    let spike = SequenceFamily::named("spike_preservation").expect("family");
    let clipped = catalog_get("clipped_norm", 1).expect("integrand");
    let burg = catalog_get("burg", 1).expect("integrand");

    // Direction I: measure convergence carries the values along for a
    // bounded integrand.
    let config = RunConfig::default();
    let report = preservation_check_i(&spike, &clipped, &config).expect("check I");
    check!(fails, report.applicable, "check I refused: {}", report.reason);
    check!(fails, report.passed, "check I did not pass");
    check!(fails, !report.rows.is_empty(), "check I produced no rows");

    // Direction II: the quantitative bound 2 M eps + delta eta mu(S) must
    // hold on every row, at the default eta and at a tight one.
    let delta = clipped.clarke_bound.expect("subgradient bound");
    let m_bound = clipped.value_bound.expect("value bound");
    let mu_total = spike.limit().space().total_measure();
    for eta in [1.0, 0.01] {
        let config = RunConfig {
            eta,
            ..RunConfig::default()
        };
        let report = preservation_check_ii(&spike, &clipped, &config).expect("check II");
        check!(
            fails,
            report.applicable,
            "check II refused at eta = {eta}: {}",
            report.reason
        );
        check!(fails, report.passed, "check II did not pass at eta = {eta}");
        for row in &report.rows {
            let bound = 2.0 * m_bound * row.deviation + delta * eta * mu_total;
            check!(
                fails,
                (row.bound - bound).abs() <= 1e-12,
                "n = {}: reported bound {} differs from 2 M eps + delta eta mu = {bound}",
                row.n,
                row.bound
            );
            check!(
                fails,
                row.within && row.value_gap <= bound + 1e-12,
                "n = {}: value gap {:e} escapes the bound {bound:e} at eta = {eta}",
                row.n,
                row.value_gap
            );
        }
    }

    // Refusals: the Burg integrand violates the hypotheses of both
    // directions and must be turned away, not judged.
    let refusal = preservation_check_i(&spike, &burg, &config).expect("check I");
    check!(fails, !refusal.applicable, "check I accepted an unbounded integrand");
    check!(
        fails,
        refusal.reason.contains("unbounded"),
        "check I refusal reason: {}",
        refusal.reason
    );
    let refusal = preservation_check_ii(&spike, &burg, &config).expect("check II");
    check!(
        fails,
        !refusal.applicable,
        "check II accepted an integrand with no uniform bounds"
    );

    conclude("criterion 6 (preservation checks)", fails);
}

#[test]
fn criterion_7_non_compactness_witness() {
    let mut fails = Vec::new();

    // The escaping family stays in the zero level set of the Burg values
    // with L1 norms below 2 while its weak gap to the limit tends to 1.
    let burg = catalog_get("burg", 1).expect("integrand");
    let escape = SequenceFamily::named("burg_level_escape").expect("family");
    let config = RunConfig {
        schedule: vec![2, 10, 100, 10_000],
        ..RunConfig::default()
    };
    let probe = level_set_compactness_probe(&burg, &escape, 0.0, &config).expect("probe");
    check!(
        fails,
        probe.result == ProbeResult::Failed,
        "no escape witnessed: {}",
        probe.reason
    );
    check!(fails, probe.sup_l1 <= 2.0, "sup L1 {} above 2", probe.sup_l1);
    for row in &probe.rows {
        check!(fails, row.value <= 0.0, "n = {}: value {} above the level", row.n, row.value);
        check!(fails, row.l1_norm <= 2.0, "n = {}: L1 norm {} above 2", row.n, row.l1_norm);
    }
    for &n in &config.schedule {
        let gap = weak_gap(&escape.member(n), escape.limit(), &config.dictionary)
            .expect("weak gap");
        let floor = 1.0 - 1.0 / n as f64;
        check!(
            fails,
            gap >= floor - 1e-12,
            "n = {n}: weak gap {gap} below 1 - 1/n = {floor}"
        );
    }

    // The product of fourth roots is affine along the coordinate faces, so
    // the midpoint strictness test must fail with a concrete pair.
    let probe = strict_convexity_transfer(&Integrand::product_root(), 0, DEFAULT_TRIALS);
    check!(
        fails,
        probe.result == ProbeResult::Failed,
        "strictness probe returned {:?}",
        probe.result
    );
    match probe.witness {
        Some(w) => check!(
            fails,
            w.gap.abs() <= 1e-9,
            "witness midpoint gap {:e} is not flat",
            w.gap
        ),
        None => fails.push("strictness failure carries no witness pair".to_string()),
    }

    conclude("criterion 7 (non-compactness witness)", fails);
}
