//! Bounded test functionals and the duality pairing `<x, g> = int x g dmu`.
//!
//! The dictionary kinds (constants, sub-box indicators, low-frequency trig
//! waves, piecewise constants) are enough to separate the sequences produced
//! by the convergence harness, and every one of them integrates exactly over
//! an axis-aligned cell, so pairings carry no quadrature error. The weak gap
//! over a dictionary is the crate's computable surrogate for weak
//! convergence.

use alloc::vec::Vec;

use crate::fp;
use crate::measure::{common_refinement, MeasureError, SimpleFunction};
use crate::sum::Neumaier;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Phase {
    Cos,
    Sin,
}

/// A bounded scalar test functional on the box (piecewise-constant entries
/// may be vector-valued and pair componentwise).
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TestFunctional {
    /// g(s) = c.
    Constant { c: f64 },
    /// g(s) = 1 on the sub-box, 0 elsewhere.
    Indicator { lo: Vec<f64>, hi: Vec<f64> },
    /// g(s) = cos(2 pi k s_axis) or sin(2 pi k s_axis).
    Trig {
        frequency: u32,
        phase: Phase,
        axis: usize,
    },
    /// An arbitrary simple function, paired on the common refinement.
    PiecewiseConstant { f: SimpleFunction },
}

impl TestFunctional {
    pub fn constant(c: f64) -> TestFunctional {
        TestFunctional::Constant { c }
    }

    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> TestFunctional {
        assert!(lo.len() == hi.len() && lo.iter().zip(&hi).all(|(a, b)| a < b));
        TestFunctional::Indicator { lo, hi }
    }

    pub fn trig(frequency: u32, phase: Phase, axis: usize) -> TestFunctional {
        TestFunctional::Trig {
            frequency,
            phase,
            axis,
        }
    }

    /// The sup norm, used to normalize weak gaps.
    pub fn bound(&self) -> f64 {
        match self {
            TestFunctional::Constant { c } => c.abs(),
            TestFunctional::Indicator { .. } => 1.0,
            TestFunctional::Trig { .. } => 1.0,
            TestFunctional::PiecewiseConstant { f } => {
                let mut worst = 0.0_f64;
                for i in 0..f.space().cell_count() {
                    worst = worst.max(fp::norm2(f.cell_value(i)));
                }
                worst
            }
        }
    }

    /// Pointwise value, for midpoint diagnostics. Scalar kinds only.
    pub fn value_at(&self, s: &[f64]) -> f64 {
        match self {
            TestFunctional::Constant { c } => *c,
            TestFunctional::Indicator { lo, hi } => {
                let inside = s
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&p, (&a, &b))| a <= p && p <= b);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunctional::Trig {
                frequency,
                phase,
                axis,
            } => {
                let t = 2.0 * core::f64::consts::PI * f64::from(*frequency) * s[*axis];
                match phase {
                    Phase::Cos => fp::cos(t),
                    Phase::Sin => fp::sin(t),
                }
            }
            TestFunctional::PiecewiseConstant { .. } => {
                panic!("pointwise values of piecewise-constant functionals are cell data")
            }
        }
    }

    /// Exact Lebesgue average over an axis-aligned cell. Scalar kinds only.
    pub fn cell_average(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            TestFunctional::Constant { c } => *c,
            TestFunctional::Indicator { lo: glo, hi: ghi } => {
                let mut ratio = 1.0;
                for ax in 0..lo.len() {
                    let a = lo[ax].max(glo[ax]);
                    let b = hi[ax].min(ghi[ax]);
                    if b <= a {
                        return 0.0;
                    }
                    ratio *= (b - a) / (hi[ax] - lo[ax]);
                }
                ratio
            }
            TestFunctional::Trig {
                frequency,
                phase,
                axis,
            } => {
                if *frequency == 0 {
                    return match phase {
                        Phase::Cos => 1.0,
                        Phase::Sin => 0.0,
                    };
                }
                let omega = 2.0 * core::f64::consts::PI * f64::from(*frequency);
                let (a, b) = (lo[*axis], hi[*axis]);
                // Antiderivatives: sin(wt)/w for cos, -cos(wt)/w for sin.
                let integral = match phase {
                    Phase::Cos => (fp::sin(omega * b) - fp::sin(omega * a)) / omega,
                    Phase::Sin => (fp::cos(omega * a) - fp::cos(omega * b)) / omega,
                };
                integral / (b - a)
            }
            TestFunctional::PiecewiseConstant { .. } => {
                panic!("piecewise-constant functionals pair through the common refinement")
            }
        }
    }
}

/// The pairing `<x, g> = int x g dmu`, exact for every dictionary kind.
/// Scalar kinds require a scalar-valued `x`; piecewise-constant functionals
/// pair componentwise on the common refinement.
pub fn pair(x: &SimpleFunction, g: &TestFunctional) -> Result<f64, MeasureError> {
    match g {
        TestFunctional::PiecewiseConstant { f } => {
            if x.codomain_dim() != f.codomain_dim() {
                return Err(MeasureError::DimensionMismatch);
            }
            let r = common_refinement(x.space(), f.space())?;
            let mut acc = Neumaier::new();
            for (i, c) in r.space.cells().iter().enumerate() {
                let vx = x.cell_value(r.parent_a[i]);
                let vg = f.cell_value(r.parent_b[i]);
                acc.add(c.weight * fp::dot(vx, vg));
            }
            Ok(acc.value())
        }
        _ => {
            if x.codomain_dim() != 1 {
                return Err(MeasureError::DimensionMismatch);
            }
            let mut acc = Neumaier::new();
            for (i, c) in x.space().cells().iter().enumerate() {
                acc.add(c.weight * x.cell_value(i)[0] * g.cell_average(&c.lo, &c.hi));
            }
            Ok(acc.value())
        }
    }
}

/// `max_g |<x - y, g>| / max(1, ||g||_inf)` over the dictionary: the weak
/// convergence surrogate. Zero on an empty dictionary.
pub fn weak_gap(
    x: &SimpleFunction,
    y: &SimpleFunction,
    dictionary: &[TestFunctional],
) -> Result<f64, MeasureError> {
    let diff = x.difference(y)?;
    let mut worst = 0.0_f64;
    for g in dictionary {
        let p = pair(&diff, g)?;
        worst = worst.max(p.abs() / g.bound().max(1.0));
    }
    Ok(worst)
}

/// The default dictionary on `[0, 1]`: the constant 1, dyadic sub-interval
/// indicators down to width 1/8, and trig waves up to the given frequency.
pub fn standard_dictionary(max_frequency: u32) -> Vec<TestFunctional> {
    let mut dict = Vec::new();
    dict.push(TestFunctional::constant(1.0));
    for level in 1..=3u32 {
        let n = 1usize << level;
        for i in 0..n {
            let a = i as f64 / n as f64;
            let b = (i + 1) as f64 / n as f64;
            dict.push(TestFunctional::indicator(
                alloc::vec![a],
                alloc::vec![b],
            ));
        }
    }
    for k in 1..=max_frequency {
        dict.push(TestFunctional::trig(k, Phase::Cos, 0));
        dict.push(TestFunctional::trig(k, Phase::Sin, 0));
    }
    dict
}
