//! Maximum-entropy moment problems: minimize an integral functional
//! `I_phi(x)` over simple functions subject to finitely many pairing
//! constraints `<x, a_i> = b_i`, solved through the Fenchel dual
//!
//! ```text
//! g(lambda) = lambda . b - sum_c mu_c phi*(u_c),   u_c = sum_i lambda_i a_ic,
//! ```
//!
//! where `a_ic` is the exact average of the constraint functional over cell
//! `c`. Using exact averages everywhere (dual, primal recovery and residuals
//! all see the same per-cell constraint representation) makes the recovered
//! primal `x_c = (phi*)'(u_c)` satisfy the pairing constraints to the same
//! accuracy as the dual gradient, and makes the pointwise optimality
//! identity `phi'(x_c) = u_c` exact. The gap between midpoint samples and
//! exact averages of the constraint functionals is reported separately as a
//! discretization diagnostic.
//!
//! The dual is maximized by a damped Newton method (closed-form conjugate
//! second derivatives) with an Armijo line search and a fraction-to-boundary
//! rule for conjugates with open domains; integrands carrying only
//! first-order conjugate data fall back to Barzilai-Borwein gradient ascent.
//! A projected-gradient primal solver over the cell values provides an
//! independent cross-check on small problems.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::functional::TestFunctional;
use crate::integrand::{ConjugateData, Integrand};
use crate::linalg;
use crate::measure::{l1_distance, MeasureError, MeasureSpace, SimpleFunction};
use crate::sum::Neumaier;

/// Convergence: the sup norm of the dual gradient, which is exactly the
/// vector of constraint residuals of the recovered primal.
pub const GRAD_TOL: f64 = 1e-9;
/// A dual iterate this large signals an infeasible or unattained problem
/// (the dual ascends forever instead of converging).
pub const DIVERGENCE_LAMBDA: f64 = 1e8;
/// Iteration cap for both solver paths.
pub const MAX_ITERATIONS: usize = 200;
/// Cell cap for the brute-force primal cross-check.
pub const BRUTE_FORCE_CELL_LIMIT: usize = 256;

/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;
/// Fraction of the distance to the conjugate-domain boundary a step may take.
const BOUNDARY_FRACTION: f64 = 0.99;
/// Relative tolerance for the constraint-matrix rank test.
const RANK_RTOL: f64 = 1e-10;
/// Step for differentiating first-order conjugate gradients; cube root of
/// machine epsilon, the standard central-difference optimum.
const HESSIAN_FD_STEP: f64 = 6.055454452393343e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum MaxentError {
    /// Moment problems act on scalar-valued functions.
    DimensionMismatch(&'static str),
    /// The dual path needs at least first-order conjugate data.
    NoConjugate(String),
    /// Piecewise-constant functionals are not supported as constraints.
    UnsupportedConstraint,
    /// `u_c` left the conjugate domain at the given cell.
    DomainViolation { cell: usize },
    /// The constraint matrix has dependent rows; the problem is degenerate
    /// or outright inconsistent.
    RankDeficient { rank: usize, constraints: usize },
    /// `0` lies outside the conjugate domain and no constant constraint is
    /// available to shift the start into it.
    NoFeasibleStart,
    /// Dual iterates diverged: the moment vector is infeasible or the
    /// infimum is not attained.
    Diverged { lambda_norm: f64 },
    MaxIterations { grad_norm: f64 },
    TooManyCells { cells: usize, limit: usize },
    /// No domain-interior feasible start found for the primal solver.
    NoInteriorStart,
    Measure(MeasureError),
}

impl From<MeasureError> for MaxentError {
    fn from(e: MeasureError) -> Self {
        MaxentError::Measure(e)
    }
}

impl core::fmt::Display for MaxentError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MaxentError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            MaxentError::NoConjugate(name) => {
                write!(f, "integrand `{name}` lacks conjugate data for the dual solver")
            }
            MaxentError::UnsupportedConstraint => {
                write!(f, "constraints must be constants, indicators or trig waves")
            }
            MaxentError::DomainViolation { cell } => {
                write!(f, "dual variable leaves the conjugate domain at cell {cell}")
            }
            MaxentError::RankDeficient { rank, constraints } => write!(
                f,
                "constraint matrix has rank {rank} < {constraints}: dependent or inconsistent constraints"
            ),
            MaxentError::NoFeasibleStart => {
                write!(f, "no dual-feasible starting point (0 is outside the conjugate domain)")
            }
            MaxentError::Diverged { lambda_norm } => write!(
                f,
                "dual iterates diverged (|lambda| = {lambda_norm:.3e}): moments infeasible or infimum unattained"
            ),
            MaxentError::MaxIterations { grad_norm } => write!(
                f,
                "no convergence in {MAX_ITERATIONS} iterations (residual {grad_norm:.3e})"
            ),
            MaxentError::TooManyCells { cells, limit } => {
                write!(f, "{cells} cells exceed the brute-force limit of {limit}")
            }
            MaxentError::NoInteriorStart => {
                write!(f, "no feasible starting point inside the integrand domain")
            }
            MaxentError::Measure(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MaxentError {}

/// One pairing constraint `<x, functional> = target`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub functional: TestFunctional,
    pub target: f64,
}

/// A moment problem over scalar simple functions on a measure space.
#[derive(Clone, Debug)]
pub struct MomentProblem {
    pub integrand: Integrand,
    pub space: MeasureSpace,
    pub constraints: Vec<Constraint>,
}

/// Exact per-cell discretization of a problem: `a` holds the cell averages
/// of the constraint functionals (row-major, m x cells), `a_mid` their
/// midpoint samples for the discretization diagnostic.
struct Disc {
    m: usize,
    cells: usize,
    a: Vec<f64>,
    a_mid: Vec<f64>,
    mu: Vec<f64>,
    b: Vec<f64>,
}

fn discretize(problem: &MomentProblem) -> Result<Disc, MaxentError> {
    if problem.integrand.dimension != 1 {
        return Err(MaxentError::DimensionMismatch(
            "moment problems act on scalar-valued functions",
        ));
    }
    let cells = problem.space.cell_count();
    let m = problem.constraints.len();
    let mut a = Vec::with_capacity(m * cells);
    let mut a_mid = Vec::with_capacity(m * cells);
    for cons in &problem.constraints {
        if matches!(cons.functional, TestFunctional::PiecewiseConstant { .. }) {
            return Err(MaxentError::UnsupportedConstraint);
        }
        for cell in problem.space.cells() {
            a.push(cons.functional.cell_average(&cell.lo, &cell.hi));
            a_mid.push(cons.functional.value_at(&cell.midpoint()));
        }
    }
    Ok(Disc {
        m,
        cells,
        a,
        a_mid,
        mu: problem.space.cells().iter().map(|c| c.weight).collect(),
        b: problem.constraints.iter().map(|c| c.target).collect(),
    })
}

impl Disc {
    fn u(&self, lambda: &[f64]) -> Vec<f64> {
        linalg::mat_t_vec(&self.a, self.m, self.cells, lambda)
    }
}

/// One evaluation of the dual objective.
#[derive(Clone, Debug)]
pub struct DualEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Negative semidefinite matrix, row-major m x m.
    pub hessian: Vec<f64>,
    /// True when `(phi*)''` was differenced from first-order data rather
    /// than evaluated in closed form.
    pub hessian_by_finite_differences: bool,
}

fn conj_second(phi: &Integrand, u: f64) -> Option<(f64, bool)> {
    if let Some(h) = phi.conj_hess_diag(&[u]) {
        return Some((h[0], false));
    }
    let step = HESSIAN_FD_STEP * u.abs().max(1.0);
    let up = phi.conj_grad(&[u + step])?;
    let dn = phi.conj_grad(&[u - step])?;
    Some(((up[0] - dn[0]) / (2.0 * step), true))
}

fn eval_dual(phi: &Integrand, disc: &Disc, lambda: &[f64]) -> Result<DualEval, MaxentError> {
    assert_eq!(lambda.len(), disc.m);
    let u = disc.u(lambda);
    let mut value = Neumaier::new();
    for (i, &l) in lambda.iter().enumerate() {
        value.add(l * disc.b[i]);
    }
    let mut xhat = Vec::with_capacity(disc.cells);
    let mut dd = Vec::with_capacity(disc.cells);
    let mut any_fd = false;
    for c in 0..disc.cells {
        let star = phi.conj_value(&[u[c]]);
        if !star.is_finite() {
            return Err(MaxentError::DomainViolation { cell: c });
        }
        value.add(-disc.mu[c] * star);
        let g = phi
            .conj_grad(&[u[c]])
            .ok_or(MaxentError::DomainViolation { cell: c })?;
        xhat.push(g[0]);
        let (h, fd) = conj_second(phi, u[c]).ok_or(MaxentError::DomainViolation { cell: c })?;
        dd.push(disc.mu[c] * h);
        any_fd |= fd;
    }
    let mut gradient = Vec::with_capacity(disc.m);
    for i in 0..disc.m {
        let mut moment = Neumaier::new();
        for c in 0..disc.cells {
            moment.add(disc.mu[c] * self_a(disc, i, c) * xhat[c]);
        }
        gradient.push(disc.b[i] - moment.value());
    }
    let mut hessian = vec![0.0; disc.m * disc.m];
    for i in 0..disc.m {
        for j in i..disc.m {
            let mut acc = Neumaier::new();
            for c in 0..disc.cells {
                acc.add(dd[c] * self_a(disc, i, c) * self_a(disc, j, c));
            }
            let v = -acc.value();
            hessian[i * disc.m + j] = v;
            hessian[j * disc.m + i] = v;
        }
    }
    Ok(DualEval {
        value: value.value(),
        gradient,
        hessian,
        hessian_by_finite_differences: any_fd,
    })
}

#[inline]
fn self_a(disc: &Disc, i: usize, c: usize) -> f64 {
    disc.a[i * disc.cells + c]
}

/// The dual objective, its gradient and Hessian at `lambda`.
pub fn dual_objective(problem: &MomentProblem, lambda: &[f64]) -> Result<DualEval, MaxentError> {
    let disc = discretize(problem)?;
    if lambda.len() != disc.m {
        return Err(MaxentError::DimensionMismatch(
            "lambda length must equal the number of constraints",
        ));
    }
    eval_dual(&problem.integrand, &disc, lambda)
}

/// Interval bounds of a one-dimensional domain, for boundary handling.
fn bounds_1d(domain: &crate::domain::DomainSpec) -> (f64, f64) {
    use crate::domain::DomainSpec::*;
    match domain {
        AllSpace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        OpenBox { lo, hi } | ClosedBox { lo, hi } => (lo[0], hi[0]),
        OpenUnitBall { .. } => (-1.0, 1.0),
        PositiveDefinite { .. } => (0.0, f64::INFINITY),
        NegativeDefinite { .. } => (f64::NEG_INFINITY, 0.0),
    }
}

/// Largest step `t` keeping `u + t du` strictly inside `(lo, hi)` cellwise,
/// shortened by the boundary fraction. Infinite when nothing binds.
fn step_to_boundary(u: &[f64], du: &[f64], lo: f64, hi: f64) -> f64 {
    let mut t = f64::INFINITY;
    for (ui, di) in u.iter().zip(du) {
        if *di > 0.0 && hi.is_finite() {
            t = t.min((hi - ui) / di);
        } else if *di < 0.0 && lo.is_finite() {
            t = t.min((lo - ui) / di);
        }
    }
    if t.is_finite() {
        BOUNDARY_FRACTION * t
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolveMethod {
    Newton,
    BarzilaiBorwein,
}

/// A converged dual solve with its recovered primal.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Solution {
    pub lambda: Vec<f64>,
    /// Primal value `I_phi(x)` of the recovered function.
    pub value: f64,
    pub dual_value: f64,
    /// `value - dual_value`, nonnegative up to rounding.
    pub gap: f64,
    /// `b_i - <x, a_i>` per constraint; equals the dual gradient.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    pub hessian_by_finite_differences: bool,
    /// The recovered primal, constant per cell.
    pub primal: SimpleFunction,
    /// Worst moment discrepancy between midpoint samples and exact cell
    /// averages of the constraint functionals: the discretization error a
    /// midpoint formulation would have committed.
    pub midpoint_moment_gap: f64,
}

fn feasible_start(phi: &Integrand, problem: &MomentProblem, disc: &Disc) -> Result<Vec<f64>, MaxentError> {
    let mut lambda = vec![0.0; disc.m];
    if phi.conj_value(&[0.0]).is_finite() {
        return Ok(lambda);
    }
    // 0 is outside dom phi*; shift along a constant constraint when one
    // exists, landing one unit inside the finite end of the domain.
    let (lo, hi) = bounds_1d(&phi.conj_domain);
    let target = if hi.is_finite() && lo.is_finite() {
        0.5 * (lo + hi)
    } else if hi.is_finite() {
        hi - 1.0
    } else {
        lo + 1.0
    };
    for (i, cons) in problem.constraints.iter().enumerate() {
        if let TestFunctional::Constant { c } = cons.functional {
            if c != 0.0 {
                lambda[i] = target / c;
                return Ok(lambda);
            }
        }
    }
    Err(MaxentError::NoFeasibleStart)
}

/// Solves the moment problem through its dual, starting from the canonical
/// feasible point.
pub fn solve(problem: &MomentProblem) -> Result<Solution, MaxentError> {
    solve_from(problem, None)
}

/// As [`solve`], but from a caller-supplied dual start when given (used to
/// probe uniqueness of the maximizer).
pub fn solve_from(
    problem: &MomentProblem,
    start: Option<Vec<f64>>,
) -> Result<Solution, MaxentError> {
    let phi = &problem.integrand;
    if phi.conjugate_data < ConjugateData::FirstOrder {
        return Err(MaxentError::NoConjugate(phi.name.clone()));
    }
    let disc = discretize(problem)?;
    if disc.m > 0 {
        let rank = linalg::row_rank(&disc.a, disc.m, disc.cells, RANK_RTOL);
        if rank < disc.m {
            return Err(MaxentError::RankDeficient {
                rank,
                constraints: disc.m,
            });
        }
    }
    let mut lambda = match start {
        Some(l) => {
            if l.len() != disc.m {
                return Err(MaxentError::DimensionMismatch(
                    "start length must equal the number of constraints",
                ));
            }
            l
        }
        None => feasible_start(phi, problem, &disc)?,
    };
    let (clo, chi) = bounds_1d(&phi.conj_domain);
    let newton = phi.conjugate_data >= ConjugateData::SecondOrder;

    let mut eval = eval_dual(phi, &disc, &lambda)?;
    let mut iterations = 0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    while disc.m > 0 && sup_norm(&eval.gradient) > GRAD_TOL {
        if iterations >= MAX_ITERATIONS {
            return Err(MaxentError::MaxIterations {
                grad_norm: sup_norm(&eval.gradient),
            });
        }
        if sup_norm(&lambda) > DIVERGENCE_LAMBDA {
            return Err(MaxentError::Diverged {
                lambda_norm: sup_norm(&lambda),
            });
        }
        // Ascent direction: Newton on -hessian (positive semidefinite), or
        // the BB-scaled gradient.
        let direction = if newton {
            let neg_h: Vec<f64> = eval.hessian.iter().map(|v| -v).collect();
            match linalg::solve_spd_ridged(&neg_h, disc.m, &eval.gradient) {
                Some((d, _ridge)) => d,
                None => eval.gradient.clone(),
            }
        } else {
            let scale = match &prev {
                Some((s, y)) => {
                    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
                    let yy: f64 = y.iter().map(|v| v * v).sum();
                    // Maximization: s = d lambda, y = d gradient; the BB
                    // quotient -s.y / y.y is positive for concave g.
                    if yy > 0.0 && sy < 0.0 {
                        (-sy / yy).clamp(1e-12, 1e12)
                    } else {
                        1.0 / sup_norm(&eval.gradient).max(1.0)
                    }
                }
                None => 1.0 / sup_norm(&eval.gradient).max(1.0),
            };
            eval.gradient.iter().map(|g| scale * g).collect()
        };
        let du = disc.u(&direction);
        let u_now = disc.u(&lambda);
        let t_boundary = step_to_boundary(&u_now, &du, clo, chi);
        let mut t = t_boundary.min(1.0);
        // Armijo on the concave dual: require a sufficient increase.
        let slope: f64 = eval
            .gradient
            .iter()
            .zip(&direction)
            .map(|(g, d)| g * d)
            .sum();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = lambda
                .iter()
                .zip(&direction)
                .map(|(l, d)| l + t * d)
                .collect();
            match eval_dual(phi, &disc, &trial) {
                Ok(e) if e.value >= eval.value + ARMIJO_C1 * t * slope => {
                    accepted = Some((trial, e));
                    break;
                }
                _ => t *= 0.5,
            }
        }
        let (next_lambda, next_eval) = match accepted {
            Some(pair) => pair,
            None => {
                return Err(MaxentError::MaxIterations {
                    grad_norm: sup_norm(&eval.gradient),
                })
            }
        };
        let s: Vec<f64> = next_lambda
            .iter()
            .zip(&lambda)
            .map(|(a, b)| a - b)
            .collect();
        let y: Vec<f64> = next_eval
            .gradient
            .iter()
            .zip(&eval.gradient)
            .map(|(a, b)| a - b)
            .collect();
        prev = Some((s, y));
        lambda = next_lambda;
        eval = next_eval;
        iterations += 1;
    }
    finish(problem, &disc, lambda, eval, iterations, newton)
}

fn finish(
    problem: &MomentProblem,
    disc: &Disc,
    lambda: Vec<f64>,
    eval: DualEval,
    iterations: usize,
    newton: bool,
) -> Result<Solution, MaxentError> {
    let phi = &problem.integrand;
    let u = disc.u(&lambda);
    let mut values = Vec::with_capacity(disc.cells);
    for c in 0..disc.cells {
        let g = phi
            .conj_grad(&[u[c]])
            .ok_or(MaxentError::DomainViolation { cell: c })?;
        values.push(g[0]);
    }
    let mut primal_value = Neumaier::new();
    for c in 0..disc.cells {
        primal_value.add(disc.mu[c] * phi.value(&values[c..=c]));
    }
    let value = primal_value.value();
    // Midpoint-vs-average moment discrepancy of the recovered primal.
    let mut midpoint_moment_gap = 0.0_f64;
    for i in 0..disc.m {
        let mut acc = Neumaier::new();
        for c in 0..disc.cells {
            acc.add(
                disc.mu[c] * values[c] * (disc.a_mid[i * disc.cells + c] - self_a(disc, i, c)),
            );
        }
        midpoint_moment_gap = midpoint_moment_gap.max(acc.value().abs());
    }
    let primal = SimpleFunction::new(problem.space.clone(), 1, values);
    Ok(Solution {
        value,
        dual_value: eval.value,
        gap: value - eval.value,
        residual_norm: sup_norm(&eval.gradient),
        residuals: eval.gradient,
        iterations,
        method: if newton {
            SolveMethod::Newton
        } else {
            SolveMethod::BarzilaiBorwein
        },
        hessian_by_finite_differences: eval.hessian_by_finite_differences,
        primal,
        midpoint_moment_gap,
        lambda,
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// A primal solve by projected gradient descent on the cell values.
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub value: f64,
    pub x: SimpleFunction,
    /// Least-squares multipliers reproducing `phi'(x_c)` from the
    /// constraint rows.
    pub multipliers: Vec<f64>,
    /// `max_c |phi'(x_c) - sum_i nu_i a_ic|`.
    pub kkt_residual: f64,
    /// `max_i |<x, a_i> - b_i|`.
    pub feasibility: f64,
    pub iterations: usize,
}

const BRUTE_MAX_ITERATIONS: usize = 50_000;
/// Projected-gradient stop: the projected gradient is this much smaller
/// than the unprojected one (or tiny in absolute terms).
const BRUTE_GRAD_TOL: f64 = 1e-11;

/// Minimizes `sum_c mu_c phi(x_c)` over the affine set `A x = b` directly,
/// independent of all conjugate machinery. Limited to small problems.
pub fn brute_force_primal(problem: &MomentProblem) -> Result<BruteForce, MaxentError> {
    let phi = &problem.integrand;
    let disc = discretize(problem)?;
    if disc.cells > BRUTE_FORCE_CELL_LIMIT {
        return Err(MaxentError::TooManyCells {
            cells: disc.cells,
            limit: BRUTE_FORCE_CELL_LIMIT,
        });
    }
    let (dlo, dhi) = bounds_1d(&phi.domain);
    // Rows of the constraint map on cell values: A[i][c] = mu_c a_ic.
    let mut a_mu = vec![0.0; disc.m * disc.cells];
    for i in 0..disc.m {
        for c in 0..disc.cells {
            a_mu[i * disc.cells + c] = disc.mu[c] * self_a(&disc, i, c);
        }
    }
    let chol = if disc.m > 0 {
        let rank = linalg::row_rank(&disc.a, disc.m, disc.cells, RANK_RTOL);
        if rank < disc.m {
            return Err(MaxentError::RankDeficient {
                rank,
                constraints: disc.m,
            });
        }
        let mut gram = vec![0.0; disc.m * disc.m];
        for i in 0..disc.m {
            for j in 0..disc.m {
                gram[i * disc.m + j] = (0..disc.cells)
                    .map(|c| a_mu[i * disc.cells + c] * a_mu[j * disc.cells + c])
                    .sum();
            }
        }
        Some(
            linalg::cholesky(&gram, disc.m).ok_or(MaxentError::RankDeficient {
                rank: disc.m - 1,
                constraints: disc.m,
            })?,
        )
    } else {
        None
    };
    let project = |v: &[f64]| -> Vec<f64> {
        // v - A^T (A A^T)^{-1} A v, the orthogonal projector onto ker A.
        match &chol {
            None => v.to_vec(),
            Some(l) => {
                let av = linalg::matvec(&a_mu, disc.m, disc.cells, v);
                let coef = linalg::cho_solve(l, disc.m, &av);
                let corr = linalg::mat_t_vec(&a_mu, disc.m, disc.cells, &coef);
                v.iter().zip(&corr).map(|(x, c)| x - c).collect()
            }
        }
    };

    // Start: a domain-interior constant, moved onto the affine set.
    let center = if dlo.is_finite() && dhi.is_finite() {
        0.5 * (dlo + dhi)
    } else if dlo.is_finite() {
        dlo + 1.0
    } else if dhi.is_finite() {
        dhi - 1.0
    } else {
        0.0
    };
    let mut x = vec![center; disc.cells];
    if let Some(l) = &chol {
        let ax = linalg::matvec(&a_mu, disc.m, disc.cells, &x);
        let defect: Vec<f64> = disc.b.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let coef = linalg::cho_solve(l, disc.m, &defect);
        let corr = linalg::mat_t_vec(&a_mu, disc.m, disc.cells, &coef);
        for c in 0..disc.cells {
            x[c] += corr[c];
        }
    }
    let interior = |v: &[f64]| v.iter().all(|&t| t > dlo && t < dhi);
    if !interior(&x) {
        return Err(MaxentError::NoInteriorStart);
    }

    let objective = |v: &[f64]| -> f64 {
        let mut acc = Neumaier::new();
        for c in 0..disc.cells {
            let val = phi.value(&v[c..=c]);
            if !val.is_finite() {
                return f64::INFINITY;
            }
            acc.add(disc.mu[c] * val);
        }
        acc.value()
    };

    let mut fx = objective(&x);
    let mut iterations = 0;
    loop {
        let mut grad = Vec::with_capacity(disc.cells);
        for c in 0..disc.cells {
            let g = phi
                .grad(&x[c..=c])
                .ok_or(MaxentError::DomainViolation { cell: c })?;
            grad.push(disc.mu[c] * g[0]);
        }
        let pg = project(&grad);
        let pg_norm = sup_norm(&pg);
        if pg_norm <= BRUTE_GRAD_TOL * sup_norm(&grad).max(1.0) || iterations >= BRUTE_MAX_ITERATIONS
        {
            let nu = kkt_multipliers(phi, &disc, &x)?;
            let mut kkt_residual = 0.0_f64;
            for c in 0..disc.cells {
                let g = phi.grad(&x[c..=c]).ok_or(MaxentError::DomainViolation { cell: c })?[0];
                let mut fit = 0.0;
                for i in 0..disc.m {
                    fit += nu[i] * self_a(&disc, i, c);
                }
                kkt_residual = kkt_residual.max((g - fit).abs());
            }
            let ax = linalg::matvec(&a_mu, disc.m, disc.cells, &x);
            let feasibility = disc
                .b
                .iter()
                .zip(&ax)
                .fold(0.0_f64, |m, (b, v)| m.max((b - v).abs()));
            let x_fn = SimpleFunction::new(problem.space.clone(), 1, x);
            return Ok(BruteForce {
                value: fx,
                x: x_fn,
                multipliers: nu,
                kkt_residual,
                feasibility,
                iterations,
            });
        }
        // Descent along -pg with fraction-to-boundary and Armijo backtracking.
        let down: Vec<f64> = pg.iter().map(|g| -g).collect();
        let t_bound = step_to_boundary(&x, &down, dlo, dhi);
        let mut t = t_bound.min(1.0 / pg_norm.max(1e-12)).min(1e6);
        let slope: f64 = -pg.iter().map(|g| g * g).sum::<f64>();
        let mut moved = false;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&down).map(|(xi, d)| xi + t * d).collect();
            let ft = objective(&trial);
            if ft <= fx + ARMIJO_C1 * t * slope {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !moved {
            // The line search stalled at rounding level; report as converged
            // on the next pass through the stopping test.
            continue;
        }
    }
}

fn kkt_multipliers(phi: &Integrand, disc: &Disc, x: &[f64]) -> Result<Vec<f64>, MaxentError> {
    if disc.m == 0 {
        return Ok(Vec::new());
    }
    // Least squares: min_nu sum_c (phi'(x_c) - sum_i nu_i a_ic)^2.
    let mut gram = vec![0.0; disc.m * disc.m];
    let mut rhs = vec![0.0; disc.m];
    for c in 0..disc.cells {
        let g = phi.grad(&x[c..=c]).ok_or(MaxentError::DomainViolation { cell: c })?[0];
        for i in 0..disc.m {
            rhs[i] += self_a(disc, i, c) * g;
            for j in 0..disc.m {
                gram[i * disc.m + j] += self_a(disc, i, c) * self_a(disc, j, c);
            }
        }
    }
    linalg::solve_spd_ridged(&gram, disc.m, &rhs)
        .map(|(nu, _)| nu)
        .ok_or(MaxentError::RankDeficient {
            rank: 0,
            constraints: disc.m,
        })
}

/// One row of a stability run: the optimal value of the problem truncated to
/// the first `n` constraints and the L1 distance of its solution to the
/// full-constraint solution.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityEntry {
    pub n: usize,
    pub value: f64,
    pub distance_to_full: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub entries: Vec<StabilityEntry>,
    /// Values are nondecreasing in `n` within [`MONOTONE_SLACK`].
    pub monotone: bool,
    /// Worst decrease observed between consecutive entries (0 when none).
    pub worst_decrease: f64,
}

/// Numerical slack for the value-monotonicity check across nested problems.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Solves the nested family `P_n` (first `n` constraints) for each `n` in
/// `schedule`, comparing against the full problem. Values must be
/// nondecreasing: each `P_n` relaxes `P_{n+1}`. When `n` equals the total
/// constraint count the full solve is reused, making that distance exactly 0.
pub fn stability_run(
    problem: &MomentProblem,
    schedule: &[usize],
) -> Result<StabilityReport, MaxentError> {
    let full = solve(problem)?;
    let mut entries = Vec::with_capacity(schedule.len());
    let mut monotone = true;
    let mut worst_decrease = 0.0_f64;
    let mut prev_value = f64::NEG_INFINITY;
    for &n in schedule {
        assert!(n <= problem.constraints.len(), "schedule exceeds constraint count");
        let solution = if n == problem.constraints.len() {
            full.clone()
        } else {
            let sub = MomentProblem {
                integrand: problem.integrand.clone(),
                space: problem.space.clone(),
                constraints: problem.constraints[..n].to_vec(),
            };
            solve(&sub)?
        };
        let distance_to_full = l1_distance(&solution.primal, &full.primal)?;
        if solution.value < prev_value - MONOTONE_SLACK {
            monotone = false;
        }
        worst_decrease = worst_decrease.max(prev_value - solution.value);
        prev_value = solution.value;
        entries.push(StabilityEntry {
            n,
            value: solution.value,
            distance_to_full,
        });
    }
    Ok(StabilityReport {
        entries,
        monotone,
        worst_decrease: worst_decrease.max(0.0),
    })
}

/// The documented stability demo: a Boltzmann-Shannon problem on 64 cells
/// whose target moments come from pairing a smooth positive profile (a
/// cosine series with 1/k^2 coefficients) against mass and the first eight
/// cosine moments. Each added constraint moves the solution closer to the
/// full one; the drop from one constraint to eight exceeds a factor of ten.
pub fn trig_moment_demo() -> MomentProblem {
    use crate::functional::Phase;
    let space = MeasureSpace::uniform(0.0, 1.0, 64);
    let integrand = crate::integrand::catalog_get("boltzmann_shannon", 1)
        .expect("catalog entry exists");
    // Cell-averaged target profile exp(sum_k cos(2 pi k s) / (2 k^2)),
    // evaluated at midpoints: a representable, strictly positive function.
    let target: Vec<f64> = space
        .cells()
        .iter()
        .map(|cell| {
            let s = cell.midpoint()[0];
            let mut arg = 0.0;
            for k in 1..=8u32 {
                let kf = f64::from(k);
                arg += fp::cos(2.0 * core::f64::consts::PI * kf * s) / (2.0 * kf * kf);
            }
            fp::exp(arg)
        })
        .collect();
    let target_fn = SimpleFunction::new(space.clone(), 1, target);
    let mut constraints = Vec::with_capacity(9);
    let mut functionals = vec![TestFunctional::constant(1.0)];
    for k in 1..=8u32 {
        functionals.push(TestFunctional::trig(k, Phase::Cos, 0));
    }
    for g in functionals {
        let b = crate::functional::pair(&target_fn, &g).expect("same space");
        constraints.push(Constraint {
            functional: g,
            target: b,
        });
    }
    MomentProblem {
        integrand,
        space,
        constraints,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Phase;
    use crate::integrand::catalog_get;

    fn problem(
        name: &str,
        cells: usize,
        constraints: Vec<(TestFunctional, f64)>,
    ) -> MomentProblem {
        MomentProblem {
            integrand: catalog_get(name, 1).unwrap(),
            space: MeasureSpace::uniform(0.0, 1.0, cells),
            constraints: constraints
                .into_iter()
                .map(|(functional, target)| Constraint { functional, target })
                .collect(),
        }
    }

    #[test]
    fn dual_objective_at_zero_for_unit_mass() {
        // g(0) = -sum mu phi*(0) = -1 for Boltzmann-Shannon; the gradient is
        // b - <(phi*)'(0), a> = 1 - 1 = 0, so lambda = 0 is already optimal.
        let p = problem(
            "boltzmann_shannon",
            16,
            vec![(TestFunctional::constant(1.0), 1.0)],
        );
        let eval = dual_objective(&p, &[0.0]).unwrap();
        assert!((eval.value + 1.0).abs() < 1e-12);
        assert!(eval.gradient[0].abs() < 1e-12);
        assert!(eval.hessian[0] < 0.0);
        assert!(!eval.hessian_by_finite_differences);
    }

    #[test]
    fn dual_objective_reports_domain_violations_by_cell() {
        let p = problem("burg", 4, vec![(TestFunctional::constant(1.0), 1.0)]);
        // lambda = +1 puts u = +1 outside dom phi* = (-inf, 0) in every
        // cell; the first one is reported.
        match dual_objective(&p, &[1.0]) {
            Err(MaxentError::DomainViolation { cell }) => assert_eq!(cell, 0),
            other => panic!("expected a domain violation, got {other:?}"),
        }
    }

    #[test]
    fn unit_mass_problems_recover_flat_solutions() {
        let p = problem(
            "boltzmann_shannon",
            16,
            vec![(TestFunctional::constant(1.0), 1.0)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.method, SolveMethod::Newton);
        assert!(s.lambda[0].abs() < 1e-9);
        assert!((s.value + 1.0).abs() < 1e-10);
        assert!(s.gap.abs() <= 1e-6);
        assert!(s.residual_norm <= 1e-8);
        for c in 0..16 {
            assert!((s.primal.cell_value(c)[0] - 1.0).abs() < 1e-9);
        }

        let p = problem(
            "fermi_dirac",
            16,
            vec![(TestFunctional::constant(1.0), 0.5)],
        );
        let s = solve(&p).unwrap();
        assert!((s.value + core::f64::consts::LN_2).abs() < 1e-10);
        assert!(s.lambda[0].abs() < 1e-9);
    }

    #[test]
    fn unconstrained_fermi_dirac_settles_at_one_half() {
        let p = problem("fermi_dirac", 8, vec![]);
        let s = solve(&p).unwrap();
        assert_eq!(s.iterations, 0);
        assert!((s.value + core::f64::consts::LN_2).abs() < 1e-12);
        assert!((s.primal.cell_value(3)[0] - 0.5).abs() < 1e-12);
        assert!(s.gap.abs() < 1e-10);
    }

    #[test]
    fn burg_mass_problem_needs_and_finds_a_shifted_start() {
        // dom phi* = (-inf, 0), so lambda = 0 is dual-infeasible; the
        // constant constraint provides the shift. Optimum: lambda = -1,
        // x = 1, value 0.
        let p = problem("burg", 8, vec![(TestFunctional::constant(1.0), 1.0)]);
        let s = solve(&p).unwrap();
        assert!((s.lambda[0] + 1.0).abs() < 1e-8);
        assert!(s.value.abs() < 1e-9);
        assert!((s.primal.cell_value(5)[0] - 1.0).abs() < 1e-8);
        assert!(s.gap.abs() <= 1e-6);

        // Without a constant constraint there is nothing to shift along.
        let p = problem("burg", 8, vec![(TestFunctional::trig(1, Phase::Cos, 0), 0.1)]);
        assert_eq!(solve(&p).unwrap_err(), MaxentError::NoFeasibleStart);
    }

    #[test]
    fn first_order_conjugates_take_the_gradient_path() {
        let p = problem("inverse_gap", 8, vec![(TestFunctional::constant(1.0), 0.3)]);
        let eval = dual_objective(&p, &[0.0]).unwrap();
        assert!(eval.hessian_by_finite_differences);
        let s = solve(&p).unwrap();
        assert_eq!(s.method, SolveMethod::BarzilaiBorwein);
        // Flat solution x = 0.3: lambda = phi'(0.3), value = 1/(1 - 0.09).
        let grad = p.integrand.grad(&[0.3]).unwrap()[0];
        assert!((s.lambda[0] - grad).abs() < 1e-7, "lambda = {}", s.lambda[0]);
        assert!((s.value - 1.0 / 0.91).abs() < 1e-9);
        assert!(s.residual_norm <= 1e-8);
    }

    #[test]
    fn trig_moment_solutions_match_brute_force() {
        let cases: Vec<(&str, Vec<(TestFunctional, f64)>)> = vec![
            (
                "boltzmann_shannon",
                vec![
                    (TestFunctional::constant(1.0), 1.0),
                    (TestFunctional::trig(1, Phase::Cos, 0), 0.2),
                ],
            ),
            (
                "boltzmann_shannon",
                vec![
                    (TestFunctional::constant(1.0), 1.3),
                    (TestFunctional::trig(1, Phase::Sin, 0), -0.1),
                ],
            ),
            (
                "fermi_dirac",
                vec![
                    (TestFunctional::constant(1.0), 0.5),
                    (TestFunctional::trig(1, Phase::Cos, 0), 0.1),
                ],
            ),
            (
                "fermi_dirac",
                vec![
                    (TestFunctional::constant(1.0), 0.4),
                    (TestFunctional::trig(2, Phase::Cos, 0), -0.05),
                    (TestFunctional::trig(1, Phase::Sin, 0), 0.08),
                ],
            ),
            (
                "boltzmann_shannon",
                vec![
                    (TestFunctional::constant(1.0), 1.0),
                    (TestFunctional::trig(1, Phase::Cos, 0), 0.15),
                    (TestFunctional::trig(2, Phase::Cos, 0), 0.05),
                ],
            ),
        ];
        for (name, cons) in cases {
            let p = problem(name, 64, cons);
            let s = solve(&p).unwrap();
            let bf = brute_force_primal(&p).unwrap();
            assert!(
                (s.value - bf.value).abs() <= 1e-5,
                "{name}: dual {} vs brute {}",
                s.value,
                bf.value
            );
            assert!(s.gap.abs() <= 1e-6, "{name}: gap {}", s.gap);
            assert!(s.residual_norm <= 1e-8, "{name}: residuals {}", s.residual_norm);
            assert!(bf.feasibility <= 1e-8);
            // The brute-force multipliers agree with the dual variables.
            for (a, b) in s.lambda.iter().zip(&bf.multipliers) {
                assert!((a - b).abs() < 1e-4, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn recovered_primal_satisfies_pointwise_optimality() {
        let p = problem(
            "boltzmann_shannon",
            64,
            vec![
                (TestFunctional::constant(1.0), 1.0),
                (TestFunctional::trig(1, Phase::Cos, 0), 0.2),
            ],
        );
        let s = solve(&p).unwrap();
        let disc = discretize(&p).unwrap();
        let u = disc.u(&s.lambda);
        for c in 0..disc.cells {
            let g = p.integrand.grad(&[s.primal.cell_value(c)[0]]).unwrap()[0];
            assert!((g - u[c]).abs() <= 1e-7, "cell {c}: {g} vs {}", u[c]);
        }
        // The exact-average formulation pairs exactly; the midpoint gap it
        // avoided is visible and far above the residual tolerance.
        assert!(s.midpoint_moment_gap > 1e-6);
        assert!(s.midpoint_moment_gap < 1e-2);
    }

    #[test]
    fn perturbed_starts_reach_the_same_maximizer() {
        let p = problem(
            "fermi_dirac",
            32,
            vec![
                (TestFunctional::constant(1.0), 0.55),
                (TestFunctional::trig(1, Phase::Cos, 0), 0.08),
            ],
        );
        let a = solve(&p).unwrap();
        let b = solve_from(&p, Some(vec![0.4, -0.3])).unwrap();
        let l1: f64 = a
            .lambda
            .iter()
            .zip(&b.lambda)
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(l1 <= 1e-7, "maximizers differ by {l1}");
    }

    #[test]
    fn inconsistent_constraints_are_rejected_by_rank() {
        let cons = vec![
            (TestFunctional::constant(1.0), 1.0),
            (TestFunctional::constant(1.0), 2.0),
        ];
        let p = problem("boltzmann_shannon", 8, cons);
        match solve(&p) {
            Err(MaxentError::RankDeficient { rank, constraints }) => {
                assert_eq!((rank, constraints), (1, 2));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(matches!(
            brute_force_primal(&p),
            Err(MaxentError::RankDeficient { .. })
        ));
    }

    #[test]
    fn infeasible_moments_diverge() {
        // |<x, cos>| <= <x, 1> = 1 for x >= 0, so a cosine moment of 1.5 is
        // infeasible; the dual ascends without bound.
        let p = problem(
            "boltzmann_shannon",
            16,
            vec![
                (TestFunctional::constant(1.0), 1.0),
                (TestFunctional::trig(1, Phase::Cos, 0), 1.5),
            ],
        );
        match solve(&p) {
            Err(MaxentError::Diverged { lambda_norm }) => assert!(lambda_norm > DIVERGENCE_LAMBDA),
            Err(MaxentError::MaxIterations { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn unconstrained_brute_force_matches_the_closed_form() {
        let p = problem("fermi_dirac", 8, vec![]);
        let bf = brute_force_primal(&p).unwrap();
        assert!((bf.value + core::f64::consts::LN_2).abs() <= 1e-8);
        assert!((bf.x.cell_value(2)[0] - 0.5).abs() <= 1e-6);
        assert!(bf.kkt_residual <= 1e-6);
    }

    #[test]
    fn stability_values_are_monotone_and_distances_collapse() {
        let demo = trig_moment_demo();
        let schedule: Vec<usize> = (1..=9).collect();
        let report = stability_run(&demo, &schedule).unwrap();
        assert!(report.monotone, "worst decrease {}", report.worst_decrease);
        assert_eq!(report.entries.len(), 9);
        // Reusing the full solve pins the last distance at exactly zero.
        assert_eq!(report.entries[8].distance_to_full, 0.0);
        let d1 = report.entries[0].distance_to_full;
        let d8 = report.entries[7].distance_to_full;
        assert!(
            d1 >= 10.0 * d8,
            "distance drop too small: {d1} vs {d8}"
        );
    }

    #[test]
    fn exhausted_schedules_end_at_zero_distance() {
        // Truncate the demo to its first eight constraints; a schedule that
        // uses all of them ends at the full problem itself.
        let demo = trig_moment_demo();
        let truncated = MomentProblem {
            integrand: demo.integrand.clone(),
            space: demo.space.clone(),
            constraints: demo.constraints[..8].to_vec(),
        };
        let report = stability_run(&truncated, &[2, 5, 8]).unwrap();
        assert!(report.monotone);
        assert_eq!(report.entries[2].distance_to_full, 0.0);
        assert!(report.entries[1].distance_to_full > 0.0);
    }

    #[test]
    fn value_only_conjugates_are_refused() {
        let p = MomentProblem {
            integrand: Integrand::affine(vec![1.0], 0.0),
            space: MeasureSpace::uniform(0.0, 1.0, 4),
            constraints: vec![Constraint {
                functional: TestFunctional::constant(1.0),
                target: 1.0,
            }],
        };
        assert!(matches!(solve(&p), Err(MaxentError::NoConjugate(_))));
    }
}
