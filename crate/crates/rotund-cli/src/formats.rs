//! Problem files, result documents and CSV writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rotund::functional::Phase;
use rotund::integrand::{catalog_get, RotundityClass};
use rotund::lab::ConvergenceReport;
use rotund::maxent::{Solution, StabilityReport};
use rotund::measure::SimpleFunction;
use rotund::probe::{ConjugateProbe, ConvexityProbe, KadecProbe, LevelSetProbe};
use rotund::watson::{BurgDensity, DensityCheck, QuadratureInfo};
use rotund::{Integrand, MeasureSpace, TestFunctional};

/// Points along the density CSV slices.
pub const DENSITY_GRID: usize = 65;

/// Common document header: which tool, which build.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
}

impl Header {
    pub fn new() -> Header {
        Header {
            tool: "rotund".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

impl Default for Header {
    fn default() -> Self {
        Header::new()
    }
}

/// Solver tolerances echoed into every maxent document.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub gradient: f64,
    pub divergence_lambda: f64,
    pub max_iterations: usize,
}

impl Tolerances {
    pub fn current() -> Tolerances {
        Tolerances {
            gradient: rotund::maxent::GRAD_TOL,
            divergence_lambda: rotund::maxent::DIVERGENCE_LAMBDA,
            max_iterations: rotund::maxent::MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSpec {
    Cos,
    Sin,
}

impl From<PhaseSpec> for Phase {
    fn from(p: PhaseSpec) -> Phase {
        match p {
            PhaseSpec::Cos => Phase::Cos,
            PhaseSpec::Sin => Phase::Sin,
        }
    }
}

/// A test functional in file form; moment problems are one-dimensional, so
/// indicator bounds are scalars and trig waves run along the only axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    Constant { c: f64 },
    Indicator { lo: f64, hi: f64 },
    Trig { frequency: u32, phase: PhaseSpec },
}

impl FunctionalSpec {
    pub fn to_functional(&self) -> TestFunctional {
        match *self {
            FunctionalSpec::Constant { c } => TestFunctional::constant(c),
            FunctionalSpec::Indicator { lo, hi } => TestFunctional::indicator(vec![lo], vec![hi]),
            FunctionalSpec::Trig { frequency, phase } => {
                TestFunctional::trig(frequency, phase.into(), 0)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintSpec {
    #[serde(flatten)]
    pub functional: FunctionalSpec,
    /// Target moment.
    pub b: f64,
}

/// A moment problem file: integrand name, interval, uniform cell count and
/// the constraint list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub integrand: String,
    #[serde(rename = "box")]
    pub bounds: [f64; 2],
    pub cells: usize,
    pub constraints: Vec<ConstraintSpec>,
}

impl ProblemSpec {
    pub fn to_problem(&self) -> Result<rotund::maxent::MomentProblem, String> {
        if !(self.bounds[0] < self.bounds[1])
            || !self.bounds[0].is_finite()
            || !self.bounds[1].is_finite()
        {
            return Err("problem box must be a finite nonempty interval".to_string());
        }
        if self.cells == 0 {
            return Err("problem needs at least one cell".to_string());
        }
        let integrand = resolve_integrand(&self.integrand, 1)?;
        let space = MeasureSpace::uniform(self.bounds[0], self.bounds[1], self.cells);
        let constraints = self
            .constraints
            .iter()
            .map(|c| rotund::maxent::Constraint {
                functional: c.functional.to_functional(),
                target: c.b,
            })
            .collect();
        Ok(rotund::maxent::MomentProblem {
            integrand,
            space,
            constraints,
        })
    }
}

/// Parses a problem file.
pub fn load_problem(path: &Path) -> Result<ProblemSpec, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Resolves an integrand name: the catalog names plus the two constructor
/// entries (`product_root` on the unit square, `affine` with unit slope).
pub fn resolve_integrand(name: &str, dimension: usize) -> Result<Integrand, String> {
    match name {
        "product_root" => Ok(Integrand::product_root()),
        "affine" => Ok(Integrand::affine(vec![1.0; dimension], 0.0)),
        _ => catalog_get(name, dimension).map_err(|e| e.to_string()),
    }
}

/// Result document of `maxent solve`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDoc {
    #[serde(flatten)]
    pub header: Header,
    pub problem: ProblemSpec,
    pub tolerances: Tolerances,
    pub solution: Solution,
}

/// Result document of `maxent stability`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityDoc {
    #[serde(flatten)]
    pub header: Header,
    /// Problem file echo, or the name of the built-in demo.
    pub problem: String,
    pub tolerances: Tolerances,
    pub monotone_slack: f64,
    pub report: StabilityReport,
}

/// Result document of `watson`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WatsonDoc {
    #[serde(flatten)]
    pub header: Header,
    pub quadrature: QuadratureInfo,
    /// `value`, `threshold` or `attainment`.
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// The lattice average `W(w)`.
    #[serde(rename = "W1", skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attained: Option<bool>,
    /// Lattice-rule verification of the attaining density, when one was
    /// constructed and written.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_check: Option<DensityCheck>,
}

/// Result document of `lab run`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabDoc {
    #[serde(flatten)]
    pub header: Header,
    pub report: ConvergenceReport,
}

/// Result document of `rotundity suite`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteDoc {
    #[serde(flatten)]
    pub header: Header,
    pub integrand: String,
    pub dimension: usize,
    pub seed: u64,
    pub trials: usize,
    pub classification: RotundityClass,
    pub strict_convexity: ConvexityProbe,
    pub conjugate_identity: ConjugateProbe,
    /// Run on one-dimensional integrands only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kadec: Option<KadecProbe>,
    /// Run on one-dimensional integrands only; the level is the family's
    /// own value range plus slack, so membership holds by construction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_set: Option<LevelSetProbe>,
    /// True when any probe reported a failure.
    pub failed: bool,
}

/// Canonical serialization: pretty JSON, struct field order, trailing
/// newline.
pub fn to_canonical_json<T: Serialize>(doc: &T) -> Result<String, String> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| e.to_string())
}

/// Writes the recovered primal as CSV: one row per cell, columns
/// `lo_*`, `hi_*`, `weight`, `v_*`.
pub fn write_primal_csv(x: &SimpleFunction, path: &Path) -> Result<(), String> {
    let dim = x.space().box_dim();
    let d = x.codomain_dim();
    let mut out = String::new();
    for k in 1..=dim {
        let _ = write!(out, "lo_{k},");
    }
    for k in 1..=dim {
        let _ = write!(out, "hi_{k},");
    }
    out.push_str("weight");
    for k in 1..=d {
        let _ = write!(out, ",v_{k}");
    }
    out.push('\n');
    for (c, cell) in x.space().cells().iter().enumerate() {
        for v in &cell.lo {
            let _ = write!(out, "{v},");
        }
        for v in &cell.hi {
            let _ = write!(out, "{v},");
        }
        let _ = write!(out, "{}", cell.weight);
        for v in x.cell_value(c) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes a convergence report as CSV: one row per schedule entry, tails
/// labeled by their thresholds.
pub fn write_lab_csv(report: &ConvergenceReport, path: &Path) -> Result<(), String> {
    let mut out = String::from("n,value,l1,deviation,weak_gap");
    for t in &report.thresholds {
        let _ = write!(out, ",tail_at_{t}");
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            row.n, row.value, row.l1, row.deviation, row.weak_gap
        );
        for t in &row.tails {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes the attaining density along two slices of the cube: the main
/// diagonal `(t, t, t)` and the first axis `(t, 0, 0)`.
pub fn write_density_csv(density: &BurgDensity, path: &Path) -> Result<(), String> {
    let mut out = String::from("t,density_diagonal,density_axis\n");
    for i in 0..DENSITY_GRID {
        let t = i as f64 / (DENSITY_GRID - 1) as f64;
        let diag = density.value(&[t, t, t]);
        let axis = density.value(&[t, 0.0, 0.0]);
        let _ = writeln!(out, "{t},{diag},{axis}");
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
