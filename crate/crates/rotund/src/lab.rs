//! A laboratory of sequences of simple functions whose value, L1, measure
//! and weak convergence behaviors deliberately disagree, plus checks of the
//! two regimes in which convergence in measure does transfer to convergence
//! of integral values.
//!
//! Each family declares a limit and convergence claims, but every verdict in
//! a report is recomputed from the generated data alone: a corrupted
//! declaration flips no verdict. Verdicts are three-valued because finite
//! schedules cannot distinguish slow (logarithmic) convergence from genuine
//! persistence; the trend rules are fixed constants documented below.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::functional::{standard_dictionary, weak_gap, TestFunctional};
use crate::integrand::Integrand;
use crate::measure::{
    deviation_measure, integral_functional, l1_distance, MeasureError, MeasureSpace,
    SimpleFunction,
};

/// The index schedule used when none is given.
pub const DEFAULT_SCHEDULE: [usize; 5] = [10, 100, 1_000, 10_000, 1_000_000];

/// Oscillation levels cap here: beyond 2^20 cells every reported quantity of
/// the sign-pattern family is already at its limit to well below the trend
/// thresholds, and partitions stop being worth their memory.
pub const MAX_OSCILLATION_LEVEL: usize = 20;

/// A gap sequence counts as vanished when its last entry is below this
/// absolute floor (or 1% of its first entry).
const TREND_VANISH_ABS: f64 = 1e-3;
const TREND_VANISH_REL: f64 = 0.01;
/// A gap sequence counts as persistent when its last `TREND_WINDOW` entries
/// all stay at or above this level.
const TREND_PERSIST: f64 = 0.1;
const TREND_WINDOW: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum LabError {
    UnknownFamily(String),
    Measure(MeasureError),
}

impl From<MeasureError> for LabError {
    fn from(e: MeasureError) -> Self {
        LabError::Measure(e)
    }
}

impl core::fmt::Display for LabError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LabError::UnknownFamily(name) => write!(f, "unknown sequence family `{name}`"),
            LabError::Measure(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LabError {}

/// Three-valued convergence verdict from finite data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Trend {
    Vanishing,
    Persistent,
    Inconclusive,
}

/// Verdict for a sequence of gaps along the schedule.
pub(crate) fn trend(gaps: &[f64]) -> Trend {
    if gaps.is_empty() {
        return Trend::Inconclusive;
    }
    let first = gaps[0];
    let last = gaps[gaps.len() - 1];
    if last <= TREND_VANISH_ABS.max(TREND_VANISH_REL * first) {
        return Trend::Vanishing;
    }
    let window = TREND_WINDOW.min(gaps.len());
    if gaps[gaps.len() - window..].iter().all(|&g| g >= TREND_PERSIST) {
        return Trend::Persistent;
    }
    Trend::Inconclusive
}

/// What a family claims about its own convergence to the declared limit.
/// Reports carry these next to the recomputed verdicts; they never influence
/// them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Claims {
    pub l1: bool,
    pub measure: bool,
    pub weak: bool,
}

/// A sequence of simple functions with a declared limit.
pub struct SequenceFamily {
    name: String,
    limit: SimpleFunction,
    declared: Claims,
    generator: Box<dyn Fn(usize) -> SimpleFunction>,
}

/// The unit interval with the single-cell partition.
fn unit_interval() -> MeasureSpace {
    MeasureSpace::uniform(0.0, 1.0, 1)
}

/// Value `inner` on `[0, t]`, `outer` on `[t, 1]`; collapses to a single
/// cell when `t` reaches 1.
fn two_cell(t: f64, inner: f64, outer: f64) -> SimpleFunction {
    if t >= 1.0 {
        SimpleFunction::constant(unit_interval(), &[inner])
    } else {
        SimpleFunction::new(
            MeasureSpace::from_breakpoints(&[0.0, t, 1.0]),
            1,
            vec![inner, outer],
        )
    }
}

impl SequenceFamily {
    /// The named catalog:
    ///
    /// * `exlbr2`: `n` on `[0, 1/(1 + log n)]`, 1 elsewhere; limit the
    ///   constant `e`. Burg values converge to -1 = I(e) while the functions
    ///   stay far from `e` on most of the interval.
    /// * `exlbr3`: the same generator declared against the limit 1: now the
    ///   functions converge in measure but the Burg values do not follow.
    /// * `incompat`: `n` on `[0, 1/n]`, 1 elsewhere; limit 1. Converges in
    ///   measure, but carries an escaping unit of mass, so neither the
    ///   `x - log x` values nor the pairings against 1 reach the limit's.
    /// * `burg_level_escape`: the same generator under the Burg lens: values
    ///   `-(log n)/n <= 0` keep the family inside a level set with bounded
    ///   L1 norm, yet it stays a unit of weak gap away from everything.
    /// * `rademacher`: the +-1 sign pattern on `2^n` cells; limit 0. Weakly
    ///   vanishing, never in measure or L1 (levels cap at
    ///   [`MAX_OSCILLATION_LEVEL`]).
    /// * `spike_preservation`: 5 on `[0, 1/n]`, 0.5 elsewhere; limit the
    ///   constant 0.5. Converges every way; the spike's contribution under a
    ///   bounded integrand dies like 1/n.
    pub fn named(name: &str) -> Result<SequenceFamily, LabError> {
        let family = match name {
            "exlbr2" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[core::f64::consts::E]),
                declared: Claims {
                    l1: false,
                    measure: false,
                    weak: false,
                },
                generator: Box::new(|n| {
                    let nf = n as f64;
                    two_cell(1.0 / (1.0 + fp::ln(nf)), nf, 1.0)
                }),
            },
            "exlbr3" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[1.0]),
                declared: Claims {
                    l1: false,
                    measure: true,
                    weak: false,
                },
                generator: Box::new(|n| {
                    let nf = n as f64;
                    two_cell(1.0 / (1.0 + fp::ln(nf)), nf, 1.0)
                }),
            },
            "incompat" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[1.0]),
                declared: Claims {
                    l1: false,
                    measure: true,
                    weak: false,
                },
                generator: Box::new(|n| {
                    let nf = n as f64;
                    two_cell(1.0 / nf, nf, 1.0)
                }),
            },
            "burg_level_escape" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[1.0]),
                declared: Claims {
                    l1: false,
                    measure: true,
                    weak: false,
                },
                generator: Box::new(|n| {
                    let nf = n as f64;
                    two_cell(1.0 / nf, nf, 1.0)
                }),
            },
            "rademacher" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[0.0]),
                declared: Claims {
                    l1: false,
                    measure: false,
                    weak: true,
                },
                generator: Box::new(|n| sign_pattern(n.min(MAX_OSCILLATION_LEVEL))),
            },
            "spike_preservation" => SequenceFamily {
                name: name.to_string(),
                limit: SimpleFunction::constant(unit_interval(), &[0.5]),
                declared: Claims {
                    l1: true,
                    measure: true,
                    weak: true,
                },
                generator: Box::new(|n| {
                    let nf = n as f64;
                    two_cell(1.0 / nf, 5.0, 0.5)
                }),
            },
            _ => return Err(LabError::UnknownFamily(name.to_string())),
        };
        Ok(family)
    }

    /// The constant family `x_n = c` for every `n`.
    pub fn constant(c: f64) -> SequenceFamily {
        SequenceFamily {
            name: "constant".to_string(),
            limit: SimpleFunction::constant(unit_interval(), &[c]),
            declared: Claims {
                l1: true,
                measure: true,
                weak: true,
            },
            generator: Box::new(move |_| SimpleFunction::constant(unit_interval(), &[c])),
        }
    }

    /// `x_n = base (1 + 1/n)`, limit the constant `base`: converges every
    /// way, with composition distance `|log(1 + 1/n)|` under the Burg map.
    pub fn scaled_limit(base: f64) -> SequenceFamily {
        SequenceFamily {
            name: "scaled_limit".to_string(),
            limit: SimpleFunction::constant(unit_interval(), &[base]),
            declared: Claims {
                l1: true,
                measure: true,
                weak: true,
            },
            generator: Box::new(move |n| {
                SimpleFunction::constant(unit_interval(), &[base * (1.0 + 1.0 / n as f64)])
            }),
        }
    }

    /// `y_n = 1 + r_n / n` with `r_n` a sign pattern of `||r_n||_1 = 1` on
    /// `2^(floor(log2 n) + 1)` cells: the weak gap and the value gap both
    /// vanish, and so does the L1 distance (at rate 1/n), making it the
    /// positive example for the weak-plus-value-implies-L1 probe.
    pub fn rademacher_perturbation() -> SequenceFamily {
        SequenceFamily {
            name: "rademacher_perturbation".to_string(),
            limit: SimpleFunction::constant(unit_interval(), &[1.0]),
            declared: Claims {
                l1: true,
                measure: true,
                weak: true,
            },
            generator: Box::new(|n| {
                let level = (usize::BITS - n.leading_zeros()) as usize;
                let r = sign_pattern(level.min(MAX_OSCILLATION_LEVEL));
                let scale = 1.0 / n as f64;
                let values: Vec<f64> = r.values().iter().map(|v| 1.0 + scale * v).collect();
                SimpleFunction::new(r.space().clone(), 1, values)
            }),
        }
    }

    /// A caller-defined family.
    pub fn custom(
        name: &str,
        limit: SimpleFunction,
        declared: Claims,
        generator: Box<dyn Fn(usize) -> SimpleFunction>,
    ) -> SequenceFamily {
        SequenceFamily {
            name: name.to_string(),
            limit,
            declared,
            generator,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn limit(&self) -> &SimpleFunction {
        &self.limit
    }

    pub fn declared(&self) -> Claims {
        self.declared
    }

    /// The `n`-th member.
    pub fn member(&self, n: usize) -> SimpleFunction {
        assert!(n >= 1, "members are indexed from 1");
        (self.generator)(n)
    }
}

/// +1/-1 alternating on `2^level` equal cells.
fn sign_pattern(level: usize) -> SimpleFunction {
    let cells = 1usize << level;
    let values: Vec<f64> = (0..cells)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    SimpleFunction::new(MeasureSpace::uniform(0.0, 1.0, cells), 1, values)
}

/// Schedule, deviation threshold, weak-gap dictionary and tail thresholds
/// for a run.
pub struct RunConfig {
    pub schedule: Vec<usize>,
    pub eta: f64,
    pub dictionary: Vec<TestFunctional>,
    pub thresholds: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schedule: DEFAULT_SCHEDULE.to_vec(),
            eta: 1.0,
            dictionary: standard_dictionary(4),
            thresholds: vec![10.0, 100.0],
        }
    }
}

/// One schedule entry of a run, all quantities measured against the
/// declared limit.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Row {
    pub n: usize,
    /// `I_phi(x_n)`.
    pub value: f64,
    /// `||x_n - limit||_1`.
    pub l1: f64,
    /// `mu{ |x_n - limit| >= eta }`.
    pub deviation: f64,
    /// Weak gap to the limit over the dictionary.
    pub weak_gap: f64,
    /// Tail integrals of `x_n` at each configured threshold.
    pub tails: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verdicts {
    /// `|I_phi(x_n) - I_phi(limit)|` along the schedule.
    pub value: Trend,
    pub l1: Trend,
    pub measure: Trend,
    pub weak: Trend,
    /// The family-wide tail supremum at the largest threshold.
    pub uniform_integrability: Trend,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub family: String,
    pub integrand: String,
    pub eta: f64,
    pub thresholds: Vec<f64>,
    /// `I_phi` of the declared limit.
    pub limit_value: f64,
    pub rows: Vec<Row>,
    /// Per threshold, the supremum over the schedule of the tail integrals.
    pub ui_profile: Vec<f64>,
    pub verdicts: Verdicts,
    pub declared: Claims,
}

/// Runs a family against an integrand and recomputes every verdict from the
/// generated rows.
pub fn run(
    family: &SequenceFamily,
    phi: &Integrand,
    config: &RunConfig,
) -> Result<ConvergenceReport, LabError> {
    assert!(config.eta > 0.0);
    let limit_value = integral_functional(phi, &family.limit);
    let mut rows = Vec::with_capacity(config.schedule.len());
    for &n in &config.schedule {
        let x = family.member(n);
        let tails = config
            .thresholds
            .iter()
            .map(|&m| x.tail_l1(m))
            .collect::<Vec<f64>>();
        rows.push(Row {
            n,
            value: integral_functional(phi, &x),
            l1: l1_distance(&x, &family.limit)?,
            deviation: deviation_measure(&x, &family.limit, config.eta)?,
            weak_gap: weak_gap(&x, &family.limit, &config.dictionary)?,
            tails,
        });
    }
    let ui_profile: Vec<f64> = (0..config.thresholds.len())
        .map(|j| rows.iter().fold(0.0_f64, |m, r| m.max(r.tails[j])))
        .collect();
    let value_gaps: Vec<f64> = rows
        .iter()
        .map(|r| {
            if r.value.is_finite() && limit_value.is_finite() {
                (r.value - limit_value).abs()
            } else if r.value == limit_value {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let l1_gaps: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    let dev_gaps: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let weak_gaps: Vec<f64> = rows.iter().map(|r| r.weak_gap).collect();
    let ui_worst = ui_profile.last().copied().unwrap_or(0.0);
    let verdicts = Verdicts {
        value: trend(&value_gaps),
        l1: trend(&l1_gaps),
        measure: trend(&dev_gaps),
        weak: trend(&weak_gaps),
        uniform_integrability: if ui_worst <= TREND_VANISH_ABS {
            Trend::Vanishing
        } else if ui_worst >= TREND_PERSIST {
            Trend::Persistent
        } else {
            Trend::Inconclusive
        },
    };
    Ok(ConvergenceReport {
        family: family.name.clone(),
        integrand: phi.name.clone(),
        eta: config.eta,
        thresholds: config.thresholds.clone(),
        limit_value,
        rows,
        ui_profile,
        verdicts,
        declared: family.declared,
    })
}

/// Outcome of a preservation check: either the premises fail (with the
/// reason) or the row data decide.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreservationReport {
    pub applicable: bool,
    pub reason: String,
    /// `(n, |I(x_n) - I(limit)|, deviation at eta)`.
    pub rows: Vec<(usize, f64, f64)>,
    pub passed: bool,
}

/// Convergence in measure transfers to value convergence for integrands
/// bounded on all of R^d. Refuses integrands without that bound and
/// families whose measure convergence the data do not establish.
pub fn preservation_check_i(
    family: &SequenceFamily,
    phi: &Integrand,
    config: &RunConfig,
) -> Result<PreservationReport, LabError> {
    if !phi.bounded_on_all_space {
        return Ok(PreservationReport {
            applicable: false,
            reason: alloc::format!(
                "`{}` is unbounded: measure convergence does not control its values",
                phi.name
            ),
            rows: Vec::new(),
            passed: false,
        });
    }
    let limit_value = integral_functional(phi, &family.limit);
    let mut rows = Vec::with_capacity(config.schedule.len());
    for &n in &config.schedule {
        let x = family.member(n);
        let gap = (integral_functional(phi, &x) - limit_value).abs();
        let dev = deviation_measure(&x, &family.limit, config.eta)?;
        rows.push((n, gap, dev));
    }
    let devs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    if trend(&devs) != Trend::Vanishing {
        return Ok(PreservationReport {
            applicable: false,
            reason: "measure convergence is not established by the data".to_string(),
            rows,
            passed: false,
        });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let passed = trend(&gaps) == Trend::Vanishing;
    Ok(PreservationReport {
        applicable: true,
        reason: String::new(),
        rows,
        passed,
    })
}

/// One row of the quantitative preservation bound.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundRow {
    pub n: usize,
    pub value_gap: f64,
    pub deviation: f64,
    /// `2 M mu(T_eta) + delta eta mu(S)`.
    pub bound: f64,
    pub within: bool,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreservationBoundReport {
    pub applicable: bool,
    pub reason: String,
    pub rows: Vec<BoundRow>,
    pub passed: bool,
}

/// The quantitative form: for `|phi| <= M` with Clarke subgradients bounded
/// by `delta`, splitting the domain at the deviation set `T_eta` gives
/// `|I(x_n) - I(limit)| <= 2 M mu(T_eta) + delta eta mu(S)` row by row.
/// Refuses integrands that carry no such bounds.
pub fn preservation_check_ii(
    family: &SequenceFamily,
    phi: &Integrand,
    config: &RunConfig,
) -> Result<PreservationBoundReport, LabError> {
    let (delta, m_bound) = match (phi.clarke_bound, phi.value_bound) {
        (Some(d), Some(m)) => (d, m),
        _ => {
            return Ok(PreservationBoundReport {
                applicable: false,
                reason: alloc::format!(
                    "`{}` carries no uniform value and subgradient bounds",
                    phi.name
                ),
                rows: Vec::new(),
                passed: false,
            })
        }
    };
    let mu_total = family.limit.space().total_measure();
    let limit_value = integral_functional(phi, &family.limit);
    let mut rows = Vec::with_capacity(config.schedule.len());
    let mut passed = true;
    for &n in &config.schedule {
        let x = family.member(n);
        let value_gap = (integral_functional(phi, &x) - limit_value).abs();
        let deviation = deviation_measure(&x, &family.limit, config.eta)?;
        let bound = 2.0 * m_bound * deviation + delta * config.eta * mu_total;
        let within = value_gap <= bound + 1e-12;
        passed &= within;
        rows.push(BoundRow {
            n,
            value_gap,
            deviation,
            bound,
            within,
        });
    }
    Ok(PreservationBoundReport {
        applicable: true,
        reason: String::new(),
        rows,
        passed,
    })
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureValueReport {
    pub applicable: bool,
    pub reason: String,
    /// `(n, ||phi(x_n) - phi(limit)||_1, deviation at eta)`.
    pub rows: Vec<(usize, f64, f64)>,
    /// Distance of the limit's values from the domain boundary.
    pub epsilon0: f64,
    /// For a limit in `[eps0, L]`, a deviation of `eta` forces a composition
    /// distance of at least `eta eps0 / (L + eta)` per unit of deviating
    /// measure; reported so that violations are quantitative.
    pub level_bound: f64,
    pub passed: bool,
}

/// The converse direction for barrier-type integrands (open domain with a
/// finite lower endpoint, like the Burg map): when the compositions
/// `phi(x_n)` converge in L1 and the limit stays away from the boundary,
/// the functions themselves must converge in measure. Not applicable when
/// the composition distances do not vanish or the limit touches the
/// boundary.
pub fn measure_to_value_probe(
    family: &SequenceFamily,
    phi: &Integrand,
    config: &RunConfig,
) -> Result<MeasureValueReport, LabError> {
    use crate::domain::DomainSpec;
    let lo = match &phi.domain {
        DomainSpec::OpenBox { lo, .. } if phi.dimension == 1 && lo[0].is_finite() => lo[0],
        _ => {
            return Ok(MeasureValueReport {
                applicable: false,
                reason: alloc::format!(
                    "`{}` is not a barrier on a one-dimensional open domain",
                    phi.name
                ),
                rows: Vec::new(),
                epsilon0: 0.0,
                level_bound: 0.0,
                passed: false,
            })
        }
    };
    let limit = &family.limit;
    let eps0 = limit
        .values()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v - lo));
    if eps0 <= 0.0 {
        return Ok(MeasureValueReport {
            applicable: false,
            reason: "the declared limit touches the domain boundary".to_string(),
            rows: Vec::new(),
            epsilon0: eps0,
            level_bound: 0.0,
            passed: false,
        });
    }
    let compose = |x: &SimpleFunction| -> Option<SimpleFunction> {
        let mut values = Vec::with_capacity(x.space().cell_count());
        for c in 0..x.space().cell_count() {
            let v = phi.value(x.cell_value(c));
            if !v.is_finite() {
                return None;
            }
            values.push(v);
        }
        Some(SimpleFunction::new(x.space().clone(), 1, values))
    };
    let limit_composed = match compose(limit) {
        Some(f) => f,
        None => {
            return Ok(MeasureValueReport {
                applicable: false,
                reason: "the limit leaves the integrand domain".to_string(),
                rows: Vec::new(),
                epsilon0: eps0,
                level_bound: 0.0,
                passed: false,
            })
        }
    };
    let mut rows = Vec::with_capacity(config.schedule.len());
    let mut range_top = limit
        .values()
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    for &n in &config.schedule {
        let x = family.member(n);
        range_top = x.values().iter().fold(range_top, |m, v| m.max(*v));
        let composition = match compose(&x) {
            Some(fx) => l1_distance(&fx, &limit_composed)?,
            None => f64::INFINITY,
        };
        let deviation = deviation_measure(&x, limit, config.eta)?;
        rows.push((n, composition, deviation));
    }
    let level_bound = config.eta * eps0 / (range_top - lo + config.eta);
    let compositions: Vec<f64> = rows.iter().map(|r| r.1).collect();
    if trend(&compositions) != Trend::Vanishing {
        return Ok(MeasureValueReport {
            applicable: false,
            reason: "composition distances do not vanish".to_string(),
            rows,
            epsilon0: eps0,
            level_bound,
            passed: false,
        });
    }
    let deviations: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let passed = trend(&deviations) == Trend::Vanishing;
    Ok(MeasureValueReport {
        applicable: true,
        reason: String::new(),
        rows,
        epsilon0: eps0,
        level_bound,
        passed,
    })
}
