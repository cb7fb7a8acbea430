//! The `rotund` binary: catalog listing, moment solving, lattice averages,
//! convergence laboratory runs and rotundity probe suites.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver non-convergence,
//! 3 infeasible or ill-posed problem, 4 probe failure. Documents go to
//! stdout unless an output path is given; equal inputs and seeds produce
//! byte-identical output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use rotund::integrand::{classify, CATALOG_NAMES};
use rotund::lab::{run as lab_run, RunConfig, SequenceFamily};
use rotund::maxent::{solve, stability_run, trig_moment_demo, MaxentError};
use rotund::measure::integral_functional;
use rotund::probe::{
    conjugate_identity_check, kadec_probe, level_set_compactness_probe,
    strict_convexity_transfer, ProbeResult, DEFAULT_TRIALS,
};
use rotund::watson::{classify_attainment, threshold_alpha, verify_density_moments, watson};

use rotund_cli::formats::{self, Header, Tolerances};

#[derive(Parser)]
#[command(
    name = "rotund",
    version,
    about = "Convex integrands, moment problems and rotundity diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List catalog integrands with their classification.
    Integrands {
        /// Restrict to a single integrand name.
        #[arg(long)]
        integrand: Option<String>,
        /// Ambient dimension to instantiate in.
        #[arg(long, default_value_t = 1)]
        dimension: usize,
        /// Write the document here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Maximum-entropy moment problems.
    Maxent {
        #[command(subcommand)]
        cmd: MaxentCmd,
    },
    /// The body-centered lattice average, its moment level and threshold.
    Watson {
        /// Evaluate at this interaction strength in [0, 1].
        #[arg(long)]
        w: Option<f64>,
        /// Report the attainment threshold (the moment level at w = 1).
        #[arg(long)]
        threshold: bool,
        /// Classify this moment level against the threshold.
        #[arg(long)]
        alpha: Option<f64>,
        /// Write slices of the attaining density here (with --alpha).
        #[arg(long)]
        density_csv: Option<PathBuf>,
        /// Write the document here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Convergence laboratory for sequence families.
    Lab {
        #[command(subcommand)]
        cmd: LabCmd,
    },
    /// Randomized rotundity probes.
    Rotundity {
        #[command(subcommand)]
        cmd: RotundityCmd,
    },
}

#[derive(Subcommand)]
enum MaxentCmd {
    /// Solve a moment problem file.
    Solve {
        /// Problem JSON path.
        #[arg(long)]
        problem: PathBuf,
        /// Write the solution document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the recovered primal as CSV.
        #[arg(long)]
        primal_csv: Option<PathBuf>,
    },
    /// Solve the nested constraint prefixes of a problem and check value
    /// monotonicity; without a problem file, runs the built-in
    /// trigonometric moment demo.
    Stability {
        /// Problem JSON path (defaults to the built-in demo).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Write the document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LabCmd {
    /// Run a named family against an integrand.
    Run {
        /// Family name: exlbr2, exlbr3, incompat, burg_level_escape,
        /// rademacher, spike_preservation.
        #[arg(long)]
        family: String,
        /// Integrand name.
        #[arg(long)]
        integrand: String,
        /// Comma-separated member indices (defaults to the standard
        /// schedule).
        #[arg(long)]
        schedule: Option<String>,
        /// Deviation threshold eta.
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Write the rows as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the document here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RotundityCmd {
    /// Run every applicable probe against one integrand.
    Suite {
        /// Integrand name (catalog names plus product_root and affine).
        #[arg(long)]
        integrand: String,
        /// Ambient dimension to instantiate in.
        #[arg(long, default_value_t = 1)]
        dimension: usize,
        /// Probe sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the document here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Failure classes carrying the process exit code.
enum Fail {
    Usage(String),
    NonConvergence(String),
    Infeasible(String),
    Probe(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 1,
            Fail::NonConvergence(_) => 2,
            Fail::Infeasible(_) => 3,
            Fail::Probe(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Usage(m) | Fail::NonConvergence(m) | Fail::Infeasible(m) | Fail::Probe(m) => m,
        }
    }
}

impl From<MaxentError> for Fail {
    fn from(e: MaxentError) -> Fail {
        match e {
            MaxentError::Diverged { .. } | MaxentError::MaxIterations { .. } => {
                Fail::NonConvergence(e.to_string())
            }
            MaxentError::NoFeasibleStart
            | MaxentError::NoInteriorStart
            | MaxentError::RankDeficient { .. }
            | MaxentError::DomainViolation { .. } => Fail::Infeasible(e.to_string()),
            _ => Fail::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(fail) => {
            eprintln!("error: {}", fail.message());
            ExitCode::from(fail.code())
        }
    }
}

/// Serializes `doc` to the path, or to stdout when no path is given.
fn emit<T: Serialize>(doc: &T, path: Option<&PathBuf>) -> Result<(), Fail> {
    let text = formats::to_canonical_json(doc).map_err(Fail::Usage)?;
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Fail::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Fail> {
    match cli.cmd {
        Cmd::Integrands {
            integrand,
            dimension,
            json,
        } => run_integrands(integrand, dimension, json),
        Cmd::Maxent { cmd } => match cmd {
            MaxentCmd::Solve {
                problem,
                out,
                primal_csv,
            } => run_solve(problem, out, primal_csv),
            MaxentCmd::Stability { problem, out } => run_stability(problem, out),
        },
        Cmd::Watson {
            w,
            threshold,
            alpha,
            density_csv,
            json,
        } => run_watson(w, threshold, alpha, density_csv, json),
        Cmd::Lab { cmd } => match cmd {
            LabCmd::Run {
                family,
                integrand,
                schedule,
                eta,
                csv,
                json,
            } => run_lab(family, integrand, schedule, eta, csv, json),
        },
        Cmd::Rotundity { cmd } => match cmd {
            RotundityCmd::Suite {
                integrand,
                dimension,
                seed,
                json,
            } => run_suite(integrand, dimension, seed, json),
        },
    }
}

#[derive(Serialize)]
struct IntegrandRow {
    name: String,
    dimension: usize,
    conjugate: String,
    classification: rotund::RotundityClass,
}

#[derive(Serialize)]
struct IntegrandsDoc {
    #[serde(flatten)]
    header: Header,
    entries: Vec<IntegrandRow>,
}

fn run_integrands(
    only: Option<String>,
    dimension: usize,
    json: Option<PathBuf>,
) -> Result<(), Fail> {
    let names: Vec<String> = match only {
        Some(name) => vec![name],
        None => CATALOG_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        // log_det needs a packed dimension; fall back to its smallest one
        // in the default listing.
        let d = if name == "log_det" && dimension == 1 {
            3
        } else {
            dimension
        };
        let phi = formats::resolve_integrand(&name, d).map_err(Fail::Usage)?;
        entries.push(IntegrandRow {
            name: phi.name.clone(),
            dimension: phi.dimension,
            conjugate: format!("{:?}", phi.conjugate_data),
            classification: classify(&phi),
        });
    }
    let doc = IntegrandsDoc {
        header: Header::new(),
        entries,
    };
    emit(&doc, json.as_ref())
}

fn run_solve(
    problem_path: PathBuf,
    out: Option<PathBuf>,
    primal_csv: Option<PathBuf>,
) -> Result<(), Fail> {
    let spec = formats::load_problem(&problem_path).map_err(Fail::Usage)?;
    let problem = spec.to_problem().map_err(Fail::Usage)?;
    let solution = solve(&problem)?;
    if let Some(path) = primal_csv {
        formats::write_primal_csv(&solution.primal, &path).map_err(Fail::Usage)?;
    }
    let doc = formats::SolutionDoc {
        header: Header::new(),
        problem: spec,
        tolerances: Tolerances::current(),
        solution,
    };
    emit(&doc, out.as_ref())
}

fn run_stability(problem_path: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), Fail> {
    let (problem, label) = match &problem_path {
        Some(path) => {
            let spec = formats::load_problem(path).map_err(Fail::Usage)?;
            (spec.to_problem().map_err(Fail::Usage)?, path.display().to_string())
        }
        None => (trig_moment_demo(), "trig_moment_demo".to_string()),
    };
    let schedule: Vec<usize> = (1..=problem.constraints.len()).collect();
    let report = stability_run(&problem, &schedule)?;
    let doc = formats::StabilityDoc {
        header: Header::new(),
        problem: label,
        tolerances: Tolerances::current(),
        monotone_slack: rotund::maxent::MONOTONE_SLACK,
        report,
    };
    emit(&doc, out.as_ref())
}

fn run_watson(
    w: Option<f64>,
    threshold: bool,
    alpha: Option<f64>,
    density_csv: Option<PathBuf>,
    json: Option<PathBuf>,
) -> Result<(), Fail> {
    let modes = usize::from(w.is_some()) + usize::from(threshold) + usize::from(alpha.is_some());
    if modes != 1 {
        return Err(Fail::Usage(
            "pass exactly one of --w, --threshold, --alpha".to_string(),
        ));
    }
    let mut doc = formats::WatsonDoc {
        header: Header::new(),
        quadrature: rotund::watson::QUADRATURE,
        mode: String::new(),
        w: None,
        value: None,
        alpha: None,
        threshold: threshold_alpha(),
        attained: None,
        density_check: None,
    };
    if let Some(w) = w {
        let result = watson(w).map_err(|e| Fail::Usage(e.to_string()))?;
        doc.mode = "value".to_string();
        doc.w = Some(result.w);
        doc.value = Some(result.value);
        doc.alpha = Some(result.alpha);
    } else if threshold {
        let result = watson(1.0).expect("w = 1 is in range");
        doc.mode = "threshold".to_string();
        doc.w = Some(1.0);
        doc.value = Some(result.value);
        doc.alpha = Some(result.alpha);
    } else if let Some(alpha) = alpha {
        let attainment = classify_attainment(alpha).map_err(|e| Fail::Usage(e.to_string()))?;
        doc.mode = "attainment".to_string();
        doc.alpha = Some(attainment.alpha);
        doc.attained = Some(attainment.attained);
        doc.w = attainment.w;
        if let Some(density) = &attainment.density {
            doc.value = Some(density.normalizer());
            doc.density_check = Some(verify_density_moments(density));
            if let Some(path) = &density_csv {
                formats::write_density_csv(density, path).map_err(Fail::Usage)?;
            }
        } else if density_csv.is_some() {
            return Err(Fail::Usage(
                "no density to write: the level is not attained".to_string(),
            ));
        }
    }
    emit(&doc, json.as_ref())
}

fn run_lab(
    family: String,
    integrand: String,
    schedule: Option<String>,
    eta: f64,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
) -> Result<(), Fail> {
    let family = SequenceFamily::named(&family).map_err(|e| Fail::Usage(e.to_string()))?;
    let phi = formats::resolve_integrand(&integrand, 1).map_err(Fail::Usage)?;
    let mut config = RunConfig::default();
    config.eta = eta;
    if let Some(text) = schedule {
        let parsed: Result<Vec<usize>, _> =
            text.split(',').map(|t| t.trim().parse::<usize>()).collect();
        config.schedule = parsed.map_err(|e| Fail::Usage(format!("bad schedule: {e}")))?;
        if config.schedule.is_empty() || config.schedule.contains(&0) {
            return Err(Fail::Usage("schedule needs positive indices".to_string()));
        }
    }
    let report = lab_run(&family, &phi, &config).map_err(|e| Fail::Usage(e.to_string()))?;
    if let Some(path) = csv {
        formats::write_lab_csv(&report, &path).map_err(Fail::Usage)?;
    }
    let doc = formats::LabDoc {
        header: Header::new(),
        report,
    };
    emit(&doc, json.as_ref())
}

fn run_suite(
    integrand: String,
    dimension: usize,
    seed: u64,
    json: Option<PathBuf>,
) -> Result<(), Fail> {
    let phi = formats::resolve_integrand(&integrand, dimension).map_err(Fail::Usage)?;
    let strict = strict_convexity_transfer(&phi, seed, DEFAULT_TRIALS);
    let conj = conjugate_identity_check(&phi, seed, DEFAULT_TRIALS);
    let (kadec, level_set) = if phi.dimension == 1 {
        let config = RunConfig {
            schedule: vec![10, 100, 1000],
            ..RunConfig::default()
        };
        let family = SequenceFamily::rademacher_perturbation();
        let kadec = kadec_probe(&family, &phi, &config)
            .map_err(|e| Fail::Usage(e.to_string()))?;
        // Escape is only a fair question when the conjugate is not finite
        // everywhere (the regime where level sets can fail weak
        // compactness) and the family's values stay finite; everywhere-
        // finite conjugates get the weakly convergent perturbed constants,
        // whose level sets must hold them.
        let escape = SequenceFamily::named("burg_level_escape").expect("named family");
        let escape_schedule = vec![2usize, 10, 100, 10_000];
        let (family, config) = if !phi.flags.conjugate_full_domain
            && escape_schedule
                .iter()
                .all(|&n| integral_functional(&phi, &escape.member(n)).is_finite())
        {
            (escape, RunConfig {
                schedule: escape_schedule,
                ..RunConfig::default()
            })
        } else {
            (SequenceFamily::rademacher_perturbation(), config)
        };
        // Level chosen from the family's own values, so membership holds
        // by construction and the probe only judges weak compactness; both
        // candidate families keep these values bounded in n.
        let level = config
            .schedule
            .iter()
            .map(|&n| integral_functional(&phi, &family.member(n)))
            .fold(f64::NEG_INFINITY, f64::max)
            + 1e-9;
        let level_set = level_set_compactness_probe(&phi, &family, level, &config)
            .map_err(|e| Fail::Usage(e.to_string()))?;
        (Some(kadec), Some(level_set))
    } else {
        (None, None)
    };
    let failed = strict.result == ProbeResult::Failed
        || conj.result == ProbeResult::Failed
        || kadec.as_ref().is_some_and(|p| p.result == ProbeResult::Failed)
        || level_set
            .as_ref()
            .is_some_and(|p| p.result == ProbeResult::Failed);
    let doc = formats::SuiteDoc {
        header: Header::new(),
        integrand: phi.name.clone(),
        dimension: phi.dimension,
        seed,
        trials: DEFAULT_TRIALS,
        classification: classify(&phi),
        strict_convexity: strict,
        conjugate_identity: conj,
        kadec,
        level_set,
        failed,
    };
    emit(&doc, json.as_ref())?;
    if failed {
        return Err(Fail::Probe(format!(
            "one or more probes failed for `{}`",
            phi.name
        )));
    }
    Ok(())
}
