//! Randomized spot checks of the rotundity properties the classifier only
//! asserts: strict convexity, the Fenchel-Young identity at gradient pairs,
//! the weak-plus-value route to L1 convergence, and weak compactness of
//! lower level sets.
//!
//! Probes are deterministic per seed and three-valued: a probe whose
//! premises fail reports `NotApplicable` rather than passing vacuously, and
//! every failure carries the concrete witness that caused it. Probes are
//! one-sided by construction: a pass reports that no counterexample was
//! found at the sampled points, never a proof.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::DomainSpec;
use crate::fp;
use crate::functional::weak_gap;
use crate::integrand::{ConjugateData, Integrand};
use crate::lab::{trend, LabError, RunConfig, SequenceFamily, Trend};
use crate::measure::{integral_functional, l1_distance, MeasureSpace, SimpleFunction};
use crate::sum::Neumaier;

/// Interior samples stay this fraction of each width away from boundaries.
const SAMPLE_MARGIN: f64 = 1e-3;
/// Midpoint pairs are redrawn until they differ by this fraction of the
/// smallest sampling width, so that strictness gaps are measured across
/// genuine segments rather than rounding noise.
const PAIR_SEPARATION: f64 = 1e-2;
/// Redraw budget per pair before the trial is skipped.
const PAIR_ATTEMPTS: usize = 20;
/// A midpoint gap at or below this (relative to the value scale) is an
/// affine segment: separated pairs of every strictly convex catalog entry
/// sit orders of magnitude above it, while genuinely affine pairs produce
/// exact zeros.
const STRICT_GAP_FLOOR: f64 = 1e-12;
/// Absolute ceiling on |phi(x) + phi*(grad phi(x)) - <x, grad phi(x)>|.
const FY_EQUALITY_TOL: f64 = 1e-9;
/// Slack allowed below zero in the Fenchel-Young inequality at random
/// pairs, relative to the value scale.
const FY_INEQUALITY_SLACK: f64 = 1e-12;
/// A level-set escape is witnessed only while the weak gap to every
/// candidate limit stays at or above this.
const WITNESS_GAP: f64 = 0.1;
/// Default sample count for the pointwise probes.
pub const DEFAULT_TRIALS: usize = 100;

/// Three-valued probe outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProbeResult {
    Passed,
    Failed,
    NotApplicable,
}

impl ProbeResult {
    /// True only for `Passed`; a not-applicable probe has not passed.
    pub fn passed(&self) -> bool {
        matches!(self, ProbeResult::Passed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeError {
    /// The family handed to the level-set probe left the level set, so the
    /// compactness question does not arise for it.
    FamilyLeftLevelSet { n: usize, value: f64, level: f64 },
    Lab(LabError),
}

impl From<LabError> for ProbeError {
    fn from(e: LabError) -> Self {
        ProbeError::Lab(e)
    }
}

impl From<crate::measure::MeasureError> for ProbeError {
    fn from(e: crate::measure::MeasureError) -> Self {
        ProbeError::Lab(LabError::Measure(e))
    }
}

impl core::fmt::Display for ProbeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProbeError::FamilyLeftLevelSet { n, value, level } => write!(
                f,
                "family member {n} has value {value}, outside the level set at {level}"
            ),
            ProbeError::Lab(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProbeError {}

/// A sampled pair on which the midpoint inequality is not strict.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MidpointWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `(phi(x) + phi(y)) / 2 - phi((x + y) / 2)`.
    pub gap: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexityProbe {
    pub result: ProbeResult,
    pub reason: String,
    /// Pairs actually tested (skipped degenerate draws excluded).
    pub trials: usize,
    pub witness: Option<MidpointWitness>,
}

/// Draws a point on a uniformly chosen closed face of the box, the free
/// coordinates inset by the margin.
fn sample_face<R: Rng>(lo: &[f64], hi: &[f64], axis: usize, upper: bool, rng: &mut R) -> Vec<f64> {
    lo.iter()
        .zip(hi.iter())
        .enumerate()
        .map(|(k, (&a, &b))| {
            if k == axis {
                if upper {
                    b
                } else {
                    a
                }
            } else {
                let pad = SAMPLE_MARGIN * (b - a);
                rng.gen_range((a + pad)..(b - pad))
            }
        })
        .collect()
}

/// Searches for a sampled affine segment of `phi`. Strict convexity of the
/// integrand is what transfers to strict convexity of its integral
/// functional, so a witness pair here is also a direction (through constant
/// functions) in which the integral functional fails strict rotundity.
///
/// Pairs are drawn from the domain interior and, for closed box domains of
/// dimension at least two, from randomly chosen faces: boundary faces are
/// where otherwise strictly convex integrands hide affine segments.
pub fn strict_convexity_transfer(phi: &Integrand, seed: u64, trials: usize) -> ConvexityProbe {
    if !phi.flags.convex {
        return ConvexityProbe {
            result: ProbeResult::NotApplicable,
            reason: alloc::format!("`{}` is not convex", phi.name),
            trials: 0,
            witness: None,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faces = match &phi.domain {
        DomainSpec::ClosedBox { lo, hi }
            if phi.dimension >= 2 && lo.iter().all(|v| v.is_finite()) && hi.iter().all(|v| v.is_finite()) =>
        {
            Some((lo.clone(), hi.clone()))
        }
        _ => None,
    };
    let (box_lo, box_hi) = phi.domain.sampling_box();
    let min_width = box_lo
        .iter()
        .zip(box_hi.iter())
        .fold(f64::INFINITY, |m, (&a, &b)| m.min(b - a));
    let separation = PAIR_SEPARATION * min_width;
    let mut tested = 0usize;
    for t in 0..trials {
        let on_face = faces.is_some() && t % 2 == 1;
        let mut pair = None;
        for _ in 0..PAIR_ATTEMPTS {
            let (x, y) = if on_face {
                let (lo, hi) = faces.as_ref().unwrap();
                let axis = rng.gen_range(0..phi.dimension);
                let upper = rng.gen_range(0..2) == 1;
                (
                    sample_face(lo, hi, axis, upper, &mut rng),
                    sample_face(lo, hi, axis, upper, &mut rng),
                )
            } else {
                (
                    phi.domain.sample_interior(&mut rng, SAMPLE_MARGIN),
                    phi.domain.sample_interior(&mut rng, SAMPLE_MARGIN),
                )
            };
            let dist = x
                .iter()
                .zip(y.iter())
                .fold(0.0_f64, |m, (&a, &b)| m.max(fp::abs(a - b)));
            if dist >= separation {
                pair = Some((x, y));
                break;
            }
        }
        let (x, y) = match pair {
            Some(p) => p,
            // One-dimensional faces are points; separated draws never come.
            None => continue,
        };
        let fx = phi.value(&x);
        let fy = phi.value(&y);
        let mid: Vec<f64> = x.iter().zip(y.iter()).map(|(&a, &b)| 0.5 * (a + b)).collect();
        let fm = phi.value(&mid);
        if !fx.is_finite() || !fy.is_finite() || !fm.is_finite() {
            continue;
        }
        tested += 1;
        let gap = 0.5 * (fx + fy) - fm;
        let scale = fp::abs(fx).max(fp::abs(fy)).max(1.0);
        if gap <= STRICT_GAP_FLOOR * scale {
            return ConvexityProbe {
                result: ProbeResult::Failed,
                reason: "midpoint inequality is not strict on the witness pair".to_string(),
                trials: tested,
                witness: Some(MidpointWitness { x, y, gap }),
            };
        }
    }
    ConvexityProbe {
        result: ProbeResult::Passed,
        reason: String::new(),
        trials: tested,
        witness: None,
    }
}

/// A pair violating the Fenchel-Young identity or inequality.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FenchelWitness {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// `phi(x) + phi*(g) - <x, g>`.
    pub gap: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjugateProbe {
    pub result: ProbeResult,
    pub reason: String,
    /// Worst |phi(x) + phi*(grad phi(x)) - <x, grad phi(x)>| seen.
    pub max_equality_gap: f64,
    /// Smallest phi(x) + phi*(y) - <x, y> over random cross pairs.
    pub min_inequality_margin: f64,
    pub witness: Option<FenchelWitness>,
}

/// Conjugate-domain samples, tolerating the degenerate boxes that indicator
/// conjugates use (every width-zero coordinate is pinned to its endpoint).
fn sample_conjugate_point<R: Rng>(domain: &DomainSpec, rng: &mut R) -> Vec<f64> {
    let (lo, hi) = domain.sampling_box();
    if lo.iter().zip(hi.iter()).all(|(&a, &b)| b > a) {
        return domain.sample_interior(rng, SAMPLE_MARGIN);
    }
    lo.iter()
        .zip(hi.iter())
        .map(|(&a, &b)| {
            if b > a {
                let pad = SAMPLE_MARGIN * (b - a);
                rng.gen_range((a + pad)..(b - pad))
            } else {
                a
            }
        })
        .collect()
}

/// Integral of `phi*` composed with a simple function `g`, and the pairing
/// `<x, g>`, cell by cell in partition order.
fn conjugate_integral_and_pairing(
    phi: &Integrand,
    x: &SimpleFunction,
    g: &SimpleFunction,
) -> (f64, f64) {
    let mut conj = Neumaier::new();
    let mut pair = Neumaier::new();
    for (c, cell) in x.space().cells().iter().enumerate() {
        let w = cell.weight;
        conj.add(w * phi.conj_value(g.cell_value(c)));
        pair.add(w * fp::dot(x.cell_value(c), g.cell_value(c)));
    }
    (conj.value(), pair.value())
}

/// Checks Fenchel-Young: equality within [`FY_EQUALITY_TOL`] at gradient
/// pairs `(x, grad phi(x))`, and nonnegativity at independently drawn
/// pairs. Both are exercised pointwise and once more cellwise on a random
/// simple function, where the summed identity is what makes the integral
/// functional and its conjugate functional a dual pair.
pub fn conjugate_identity_check(phi: &Integrand, seed: u64, trials: usize) -> ConjugateProbe {
    if phi.conjugate_data == ConjugateData::Unavailable {
        return ConjugateProbe {
            result: ProbeResult::NotApplicable,
            reason: alloc::format!("`{}` has no usable conjugate", phi.name),
            max_equality_gap: 0.0,
            min_inequality_margin: 0.0,
            witness: None,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_eq = 0.0_f64;
    let mut min_ineq = f64::INFINITY;
    for _ in 0..trials {
        let x = phi.domain.sample_interior(&mut rng, SAMPLE_MARGIN);
        let fx = phi.value(&x);
        if !fx.is_finite() {
            continue;
        }
        if let Some(g) = phi.grad(&x) {
            let gap = fx + phi.conj_value(&g) - fp::dot(&x, &g);
            if fp::abs(gap) > FY_EQUALITY_TOL {
                return ConjugateProbe {
                    result: ProbeResult::Failed,
                    reason: "Fenchel-Young equality fails at a gradient pair".to_string(),
                    max_equality_gap: fp::abs(gap),
                    min_inequality_margin: min_ineq,
                    witness: Some(FenchelWitness { x, g, gap }),
                };
            }
            max_eq = max_eq.max(fp::abs(gap));
        }
        let y = sample_conjugate_point(&phi.conj_domain, &mut rng);
        let cy = phi.conj_value(&y);
        if cy.is_finite() {
            let margin = fx + cy - fp::dot(&x, &y);
            let scale = fp::abs(fx).max(fp::abs(cy)).max(1.0);
            if margin < -FY_INEQUALITY_SLACK * scale {
                return ConjugateProbe {
                    result: ProbeResult::Failed,
                    reason: "Fenchel-Young inequality fails at a random pair".to_string(),
                    max_equality_gap: max_eq,
                    min_inequality_margin: margin,
                    witness: Some(FenchelWitness { x, g: y, gap: margin }),
                };
            }
            min_ineq = min_ineq.min(margin);
        }
    }
    // Cellwise lift on an 8-cell partition: I_phi(x) + I_phi*(g) = <x, g>
    // when g takes the gradient value on every cell.
    let cells = 8usize;
    let space = MeasureSpace::uniform(0.0, 1.0, cells);
    let d = phi.dimension;
    let mut xv = Vec::with_capacity(cells * d);
    let mut gv = Vec::with_capacity(cells * d);
    let mut have_gradient = true;
    for _ in 0..cells {
        let z = phi.domain.sample_interior(&mut rng, SAMPLE_MARGIN);
        match phi.grad(&z) {
            Some(g) => gv.extend_from_slice(&g),
            None => {
                have_gradient = false;
                break;
            }
        }
        xv.extend_from_slice(&z);
    }
    if have_gradient {
        let x = SimpleFunction::new(space.clone(), d, xv);
        let g = SimpleFunction::new(space, d, gv);
        let value = integral_functional(phi, &x);
        let (conj, pairing) = conjugate_integral_and_pairing(phi, &x, &g);
        let gap = value + conj - pairing;
        if fp::abs(gap) > FY_EQUALITY_TOL {
            return ConjugateProbe {
                result: ProbeResult::Failed,
                reason: "cellwise Fenchel-Young equality fails on a simple function".to_string(),
                max_equality_gap: fp::abs(gap),
                min_inequality_margin: min_ineq,
                witness: Some(FenchelWitness {
                    x: x.values().to_vec(),
                    g: g.values().to_vec(),
                    gap,
                }),
            };
        }
        max_eq = max_eq.max(fp::abs(gap));
    }
    ConjugateProbe {
        result: ProbeResult::Passed,
        reason: String::new(),
        max_equality_gap: max_eq,
        min_inequality_margin: min_ineq,
        witness: None,
    }
}

/// One schedule entry of the weak-plus-value probe.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KadecRow {
    pub n: usize,
    pub weak_gap: f64,
    pub value_gap: f64,
    pub l1: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KadecProbe {
    pub result: ProbeResult,
    pub reason: String,
    pub rows: Vec<KadecRow>,
    pub witness: Option<KadecRow>,
}

/// The sequential route to norm convergence: when the weak gaps and the
/// value gaps both vanish along the family, L1 distances must follow. The
/// premise is checked from the data first; a family that never satisfies it
/// reports `NotApplicable` rather than passing vacuously.
pub fn kadec_probe(
    family: &SequenceFamily,
    phi: &Integrand,
    config: &RunConfig,
) -> Result<KadecProbe, LabError> {
    let limit_value = integral_functional(phi, family.limit());
    let mut rows = Vec::with_capacity(config.schedule.len());
    for &n in &config.schedule {
        let x = family.member(n);
        let value = integral_functional(phi, &x);
        let value_gap = if value.is_finite() && limit_value.is_finite() {
            fp::abs(value - limit_value)
        } else if value == limit_value {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(KadecRow {
            n,
            weak_gap: weak_gap(&x, family.limit(), &config.dictionary)?,
            value_gap,
            l1: l1_distance(&x, family.limit())?,
        });
    }
    let weak: Vec<f64> = rows.iter().map(|r| r.weak_gap).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.value_gap).collect();
    if trend(&weak) != Trend::Vanishing {
        return Ok(KadecProbe {
            result: ProbeResult::NotApplicable,
            reason: "premise not met: weak gaps do not vanish".to_string(),
            rows,
            witness: None,
        });
    }
    if trend(&values) != Trend::Vanishing {
        return Ok(KadecProbe {
            result: ProbeResult::NotApplicable,
            reason: "premise not met: value gaps do not vanish".to_string(),
            rows,
            witness: None,
        });
    }
    let l1: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    if trend(&l1) == Trend::Vanishing {
        Ok(KadecProbe {
            result: ProbeResult::Passed,
            reason: String::new(),
            rows,
            witness: None,
        })
    } else {
        let witness = rows.last().copied();
        Ok(KadecProbe {
            result: ProbeResult::Failed,
            reason: "weak and value gaps vanish but the L1 distance persists".to_string(),
            rows,
            witness,
        })
    }
}

/// One schedule entry of the level-set probe.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelSetRow {
    pub n: usize,
    /// `I_phi(x_n)`; stays at or below the level by assumption.
    pub value: f64,
    pub l1_norm: f64,
    /// Over all candidate limits, the smallest weak gap to `x_n`.
    pub min_candidate_gap: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelSetProbe {
    pub result: ProbeResult,
    pub reason: String,
    pub level: f64,
    pub rows: Vec<LevelSetRow>,
    /// Largest L1 norm along the schedule; the escape witness is only as
    /// strong as this bound.
    pub sup_l1: f64,
    pub candidates: usize,
}

/// Hunts for a witness that the lower level set `{I_phi <= level}` fails
/// weak compactness: an L1-bounded family inside the level set that keeps a
/// weak gap of at least [`WITNESS_GAP`] to every candidate limit. `Failed`
/// means such a witness was found (the rows are the witness); `Passed`
/// means this family produced none, which is one-sided evidence only. A
/// family that leaves the level set is an error, not a verdict.
///
/// Candidate limits are the family's declared limit, the constants 0 and 1,
/// and the constant matching the final member's mean. Later family members
/// are deliberately excluded: a weakly null perturbation looks close to its
/// own tail against any fixed dictionary.
pub fn level_set_compactness_probe(
    phi: &Integrand,
    family: &SequenceFamily,
    level: f64,
    config: &RunConfig,
) -> Result<LevelSetProbe, ProbeError> {
    let space = family.limit().space().clone();
    let last_n = config.schedule.last().copied().unwrap_or(1);
    let last = family.member(last_n);
    let mean = last
        .values()
        .iter()
        .zip(last.space().cells().iter())
        .fold(0.0, |acc, (v, c)| acc + v * c.weight)
        / last.space().total_measure();
    let candidates = [
        family.limit().clone(),
        SimpleFunction::constant(space.clone(), &[0.0]),
        SimpleFunction::constant(space.clone(), &[1.0]),
        SimpleFunction::constant(space, &[mean]),
    ];
    let mut rows = Vec::with_capacity(config.schedule.len());
    let mut sup_l1 = 0.0_f64;
    for &n in &config.schedule {
        let x = family.member(n);
        let value = integral_functional(phi, &x);
        if value > level + 1e-12 {
            return Err(ProbeError::FamilyLeftLevelSet { n, value, level });
        }
        let l1 = x.l1_norm();
        sup_l1 = sup_l1.max(l1);
        let mut min_gap = f64::INFINITY;
        for cand in &candidates {
            min_gap = min_gap.min(weak_gap(&x, cand, &config.dictionary)?);
        }
        rows.push(LevelSetRow {
            n,
            value,
            l1_norm: l1,
            min_candidate_gap: min_gap,
        });
    }
    let witnessed = rows.iter().all(|r| r.min_candidate_gap >= WITNESS_GAP);
    if witnessed {
        Ok(LevelSetProbe {
            result: ProbeResult::Failed,
            reason: alloc::format!(
                "the family stays in the level set with L1 norms at most {sup_l1} \
                 yet keeps a weak gap of at least {WITNESS_GAP} to every candidate"
            ),
            level,
            rows,
            sup_l1,
            candidates: candidates.len(),
        })
    } else {
        Ok(LevelSetProbe {
            result: ProbeResult::Passed,
            reason: "no escape witnessed: some candidate tracks the family weakly".to_string(),
            level,
            rows,
            sup_l1,
            candidates: candidates.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::catalog_get;
    use alloc::vec;

    #[test]
    fn strictly_convex_entries_pass_the_midpoint_probe() {
        for name in ["boltzmann_shannon", "cosh_sum", "inverse_gap", "log_det"] {
            let d = if name == "log_det" { 3 } else { 2 };
            let phi = catalog_get(name, d).unwrap();
            let probe = strict_convexity_transfer(&phi, 7, DEFAULT_TRIALS);
            assert!(probe.result.passed(), "{name}: {:?}", probe.reason);
            assert!(probe.trials >= DEFAULT_TRIALS / 2, "{name}: {}", probe.trials);
        }
    }

    #[test]
    fn affine_integrands_fail_with_a_zero_gap_witness() {
        let phi = Integrand::affine(vec![2.0, -1.0], 0.5);
        let probe = strict_convexity_transfer(&phi, 11, DEFAULT_TRIALS);
        assert_eq!(probe.result, ProbeResult::Failed);
        let w = probe.witness.expect("witness");
        assert!(fp::abs(w.gap) <= 1e-12);
    }

    #[test]
    fn product_root_fails_on_a_boundary_face() {
        let phi = Integrand::product_root();
        let probe = strict_convexity_transfer(&phi, 3, DEFAULT_TRIALS);
        assert_eq!(probe.result, ProbeResult::Failed);
        let w = probe.witness.expect("witness");
        // The affine segments live on the faces through zero: both points
        // of the witness pair share a vanishing coordinate.
        assert!(
            (w.x[0] == 0.0 && w.y[0] == 0.0) || (w.x[1] == 0.0 && w.y[1] == 0.0),
            "witness pair {:?} {:?}",
            w.x,
            w.y
        );
        assert!(w.gap <= 1e-12);
    }

    #[test]
    fn nonconvex_entries_are_out_of_scope_for_the_midpoint_probe() {
        let phi = catalog_get("clipped_norm", 2).unwrap();
        let probe = strict_convexity_transfer(&phi, 5, DEFAULT_TRIALS);
        assert_eq!(probe.result, ProbeResult::NotApplicable);
        assert!(probe.reason.contains("not convex"));
    }

    #[test]
    fn fenchel_young_holds_across_the_catalog() {
        for name in [
            "boltzmann_shannon",
            "fermi_dirac",
            "burg",
            "cosh_sum",
            "norm_power(1.5)",
            "inverse_gap",
        ] {
            let phi = catalog_get(name, 1).unwrap();
            let probe = conjugate_identity_check(&phi, 13, DEFAULT_TRIALS);
            assert!(probe.result.passed(), "{name}: {}", probe.reason);
            assert!(probe.max_equality_gap <= FY_EQUALITY_TOL, "{name}");
            assert!(probe.min_inequality_margin >= -1e-12, "{name}");
        }
    }

    #[test]
    fn fenchel_young_anchors_are_exact() {
        // At x = 1 the Boltzmann-Shannon gradient is 0: phi(1) = -1 and
        // phi*(0) = 1 cancel against a zero pairing.
        let bs = catalog_get("boltzmann_shannon", 1).unwrap();
        let g = bs.grad(&[1.0]).unwrap();
        assert_eq!(g, vec![0.0]);
        let gap = bs.value(&[1.0]) + bs.conj_value(&g) - 0.0;
        assert!(fp::abs(gap) <= 1e-15);

        // At x = 1/2 the Fermi-Dirac gradient is 0: -log 2 + log 2 = 0.
        let fd = catalog_get("fermi_dirac", 1).unwrap();
        let g = fd.grad(&[0.5]).unwrap();
        assert_eq!(g, vec![0.0]);
        let gap = fd.value(&[0.5]) + fd.conj_value(&g) - 0.0;
        assert!(fp::abs(gap) <= 1e-15);
    }

    #[test]
    fn conjugate_identity_handles_indicator_conjugates_and_refuses_none() {
        let phi = Integrand::affine(vec![2.0], -0.25);
        let probe = conjugate_identity_check(&phi, 17, DEFAULT_TRIALS);
        assert!(probe.result.passed(), "{}", probe.reason);
        assert!(probe.max_equality_gap <= 1e-12);

        let clipped = catalog_get("clipped_norm", 1).unwrap();
        let probe = conjugate_identity_check(&clipped, 17, DEFAULT_TRIALS);
        assert_eq!(probe.result, ProbeResult::NotApplicable);
    }

    #[test]
    fn kadec_route_passes_on_the_perturbed_constant_family() {
        let family = SequenceFamily::rademacher_perturbation();
        let bs = catalog_get("boltzmann_shannon", 1).unwrap();
        let config = RunConfig {
            schedule: vec![10, 100, 1000],
            ..RunConfig::default()
        };
        let probe = kadec_probe(&family, &bs, &config).unwrap();
        assert!(probe.result.passed(), "{}", probe.reason);
        for row in &probe.rows {
            assert!((row.l1 - 1.0 / row.n as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn kadec_premise_failures_are_not_vacuous_passes() {
        let family = SequenceFamily::named("burg_level_escape").unwrap();
        let burg = catalog_get("burg", 1).unwrap();
        let probe = kadec_probe(&family, &burg, &RunConfig::default()).unwrap();
        assert_eq!(probe.result, ProbeResult::NotApplicable);
        assert!(probe.reason.contains("premise"));
    }

    #[test]
    fn kadec_fails_for_affine_integrands_on_the_sign_pattern() {
        // The sign pattern pairs to zero and affine values follow the
        // pairing, so the premise holds; the L1 distance stays at 1.
        let family = SequenceFamily::named("rademacher").unwrap();
        let phi = Integrand::affine(vec![1.0], 0.0);
        let config = RunConfig {
            schedule: vec![6, 9, 12, 15],
            ..RunConfig::default()
        };
        let probe = kadec_probe(&family, &phi, &config).unwrap();
        assert_eq!(probe.result, ProbeResult::Failed);
        let w = probe.witness.expect("witness row");
        assert!((w.l1 - 1.0).abs() <= 1e-12);
        assert!(w.weak_gap <= 1e-3 && w.value_gap <= 1e-9);
    }

    #[test]
    fn burg_level_escape_is_witnessed() {
        let phi = catalog_get("burg", 1).unwrap();
        let family = SequenceFamily::named("burg_level_escape").unwrap();
        let config = RunConfig {
            schedule: vec![2, 10, 100, 10_000],
            ..RunConfig::default()
        };
        let probe = level_set_compactness_probe(&phi, &family, 0.0, &config).unwrap();
        assert_eq!(probe.result, ProbeResult::Failed);
        assert!(probe.sup_l1 <= 2.0);
        for row in &probe.rows {
            assert!(row.value <= 0.0);
            assert!(row.min_candidate_gap >= WITNESS_GAP);
        }
    }

    #[test]
    fn weakly_convergent_families_produce_no_level_set_witness() {
        let phi = catalog_get("boltzmann_shannon", 1).unwrap();
        let family = SequenceFamily::rademacher_perturbation();
        let config = RunConfig {
            schedule: vec![10, 100, 1000],
            ..RunConfig::default()
        };
        let probe = level_set_compactness_probe(&phi, &family, 0.0, &config).unwrap();
        assert!(probe.result.passed());
        assert!(probe.rows.last().unwrap().min_candidate_gap < WITNESS_GAP);
    }

    #[test]
    fn leaving_the_level_set_is_an_error() {
        let phi = catalog_get("burg", 1).unwrap();
        let family = SequenceFamily::constant(0.5);
        let config = RunConfig {
            schedule: vec![1, 2],
            ..RunConfig::default()
        };
        let err = level_set_compactness_probe(&phi, &family, 0.0, &config).unwrap_err();
        assert!(matches!(err, ProbeError::FamilyLeftLevelSet { .. }));
    }
}
