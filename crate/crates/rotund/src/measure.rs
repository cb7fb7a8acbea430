//! Finite measure spaces as weighted cell partitions of a box, and
//! piecewise-constant vector-valued functions on them.
//!
//! Simple functions make every integral in the crate a finite weighted sum,
//! so `integral_functional`, `l1_distance`, `deviation_measure` and the
//! uniform-integrability profile are exact up to floating-point rounding.
//! Operations across two partitions go through the common refinement, which
//! exists for any pair of axis-aligned partitions of the same box; it fails
//! only when the two spaces carry genuinely different measures (mismatched
//! densities on an overlap).
//!
//! Summation is compensated and always runs in ascending cell order, so
//! results are deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::integrand::Integrand;
use crate::sum::Neumaier;

/// Relative disagreement in refined cell weights beyond which two spaces are
/// declared incompatible (they then represent different measures, not the
/// same measure partitioned differently).
const WEIGHT_AGREEMENT_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureError {
    /// The two spaces live on different boxes.
    BoxMismatch,
    /// Overlapping cells imply different densities for the same region.
    IncompatibleWeights,
    /// Codomain dimensions differ.
    DimensionMismatch,
}

impl core::fmt::Display for MeasureError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeasureError::BoxMismatch => write!(f, "measure spaces live on different boxes"),
            MeasureError::IncompatibleWeights => {
                write!(f, "cell weights imply different measures on an overlap")
            }
            MeasureError::DimensionMismatch => write!(f, "codomain dimensions differ"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MeasureError {}

/// One axis-aligned sub-box with its measure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub weight: f64,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// A finite measure on a box: an ordered partition into weighted cells.
/// Weights are the cell measures; a weight differing from the cell volume
/// encodes a (piecewise-constant) density against Lebesgue measure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<Cell>,
}

impl MeasureSpace {
    /// `n` equal Lebesgue cells on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> MeasureSpace {
        assert!(n >= 1 && b > a, "need n >= 1 and a nonempty interval");
        let h = (b - a) / n as f64;
        let breaks: Vec<f64> = (0..=n)
            .map(|i| if i == n { b } else { a + h * i as f64 })
            .collect();
        MeasureSpace::from_breakpoints(&breaks)
    }

    /// One-dimensional Lebesgue partition with the given strictly increasing
    /// breakpoints.
    pub fn from_breakpoints(breaks: &[f64]) -> MeasureSpace {
        let weights: Vec<f64> = breaks.windows(2).map(|w| w[1] - w[0]).collect();
        MeasureSpace::from_weighted_breakpoints(breaks, &weights)
    }

    /// One-dimensional partition with explicit cell measures.
    pub fn from_weighted_breakpoints(breaks: &[f64], weights: &[f64]) -> MeasureSpace {
        assert!(breaks.len() >= 2, "need at least one cell");
        assert_eq!(weights.len(), breaks.len() - 1);
        assert!(
            breaks.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must increase strictly"
        );
        assert!(
            weights.iter().all(|&w| w > 0.0 && w.is_finite()),
            "cell weights must be positive and finite"
        );
        let cells = breaks
            .windows(2)
            .zip(weights)
            .map(|(w, &m)| Cell {
                lo: vec![w[0]],
                hi: vec![w[1]],
                weight: m,
            })
            .collect();
        MeasureSpace {
            lo: vec![breaks[0]],
            hi: vec![*breaks.last().unwrap()],
            cells,
        }
    }

    /// Tensor-product Lebesgue partition from per-axis breakpoints; cells are
    /// ordered lexicographically with the first axis slowest.
    pub fn tensor(axes: &[Vec<f64>]) -> MeasureSpace {
        assert!(!axes.is_empty());
        for br in axes {
            assert!(br.len() >= 2 && br.windows(2).all(|w| w[0] < w[1]));
        }
        let k = axes.len();
        let counts: Vec<usize> = axes.iter().map(|br| br.len() - 1).collect();
        let total: usize = counts.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut idx = vec![0usize; k];
        for _ in 0..total {
            let mut lo = Vec::with_capacity(k);
            let mut hi = Vec::with_capacity(k);
            for ax in 0..k {
                lo.push(axes[ax][idx[ax]]);
                hi.push(axes[ax][idx[ax] + 1]);
            }
            let weight: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            cells.push(Cell { lo, hi, weight });
            for ax in (0..k).rev() {
                idx[ax] += 1;
                if idx[ax] < counts[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        MeasureSpace {
            lo: axes.iter().map(|br| br[0]).collect(),
            hi: axes.iter().map(|br| *br.last().unwrap()).collect(),
            cells,
        }
    }

    pub fn box_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn total_measure(&self) -> f64 {
        let mut acc = Neumaier::new();
        for c in &self.cells {
            acc.add(c.weight);
        }
        acc.value()
    }

    fn same_box(&self, other: &MeasureSpace) -> bool {
        self.lo == other.lo && self.hi == other.hi
    }

    /// Index of the cell containing `point`, with a running hint that makes
    /// sweeps in cell order O(1) per query.
    fn locate(&self, point: &[f64], hint: &mut usize) -> Option<usize> {
        let n = self.cells.len();
        for probe in 0..n {
            let i = (*hint + probe) % n;
            let c = &self.cells[i];
            let inside = point
                .iter()
                .zip(c.lo.iter().zip(&c.hi))
                .all(|(&p, (&a, &b))| a <= p && p < b)
                || point
                    .iter()
                    .zip(c.lo.iter().zip(&c.hi))
                    .all(|(&p, (&a, &b))| a <= p && (p < b || (b == self.hi[0] && p <= b)));
            if inside {
                *hint = i;
                return Some(i);
            }
        }
        None
    }
}

/// Common refinement of two partitions of the same box, with maps from the
/// refined cells back to their parents in each space.
pub(crate) struct Refined {
    pub space: MeasureSpace,
    pub parent_a: Vec<usize>,
    pub parent_b: Vec<usize>,
}

pub(crate) fn common_refinement(
    a: &MeasureSpace,
    b: &MeasureSpace,
) -> Result<Refined, MeasureError> {
    if !a.same_box(b) {
        return Err(MeasureError::BoxMismatch);
    }
    let k = a.box_dim();
    // Every cell boundary of both spaces becomes a breakpoint, so each
    // refined tensor cell lies inside exactly one parent cell of each space.
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(k);
    for ax in 0..k {
        let mut br: Vec<f64> = Vec::new();
        for space in [a, b] {
            for c in &space.cells {
                br.push(c.lo[ax]);
                br.push(c.hi[ax]);
            }
        }
        br.sort_by(|x, y| x.partial_cmp(y).unwrap());
        br.dedup();
        axes.push(br);
    }
    let grid = MeasureSpace::tensor(&axes);
    let mut parent_a = Vec::with_capacity(grid.cells.len());
    let mut parent_b = Vec::with_capacity(grid.cells.len());
    let mut cells = Vec::with_capacity(grid.cells.len());
    let (mut hint_a, mut hint_b) = (0usize, 0usize);
    for cell in &grid.cells {
        let mid = cell.midpoint();
        let ia = a
            .locate(&mid, &mut hint_a)
            .expect("cells cover the box");
        let ib = b
            .locate(&mid, &mut hint_b)
            .expect("cells cover the box");
        let vol = cell.volume();
        let wa = a.cells[ia].weight * (vol / a.cells[ia].volume());
        let wb = b.cells[ib].weight * (vol / b.cells[ib].volume());
        if (wa - wb).abs() > WEIGHT_AGREEMENT_RTOL * wa.abs().max(wb.abs()) {
            return Err(MeasureError::IncompatibleWeights);
        }
        parent_a.push(ia);
        parent_b.push(ib);
        cells.push(Cell {
            lo: cell.lo.clone(),
            hi: cell.hi.clone(),
            weight: wa,
        });
    }
    Ok(Refined {
        space: MeasureSpace {
            lo: a.lo.clone(),
            hi: a.hi.clone(),
            cells,
        },
        parent_a,
        parent_b,
    })
}

/// A piecewise-constant function with values in R^d, one vector per cell
/// (stored flattened, cell-major).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimpleFunction {
    space: MeasureSpace,
    d: usize,
    values: Vec<f64>,
}

impl SimpleFunction {
    pub fn new(space: MeasureSpace, d: usize, values: Vec<f64>) -> SimpleFunction {
        assert!(d >= 1);
        assert_eq!(values.len(), space.cell_count() * d, "one vector per cell");
        assert!(values.iter().all(|v| v.is_finite()), "values must be finite");
        SimpleFunction { space, d, values }
    }

    pub fn constant(space: MeasureSpace, v: &[f64]) -> SimpleFunction {
        let mut values = Vec::with_capacity(space.cell_count() * v.len());
        for _ in 0..space.cell_count() {
            values.extend_from_slice(v);
        }
        SimpleFunction::new(space, v.len(), values)
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn codomain_dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_value(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.d..(cell + 1) * self.d]
    }

    /// `int ||x|| dmu`, exact.
    pub fn l1_norm(&self) -> f64 {
        let mut acc = Neumaier::new();
        for (i, c) in self.space.cells.iter().enumerate() {
            acc.add(c.weight * fp::norm2(self.cell_value(i)));
        }
        acc.value()
    }

    /// `int_{||x|| > threshold} ||x|| dmu`, exact.
    pub fn tail_l1(&self, threshold: f64) -> f64 {
        let mut acc = Neumaier::new();
        for (i, c) in self.space.cells.iter().enumerate() {
            let norm = fp::norm2(self.cell_value(i));
            if norm > threshold {
                acc.add(c.weight * norm);
            }
        }
        acc.value()
    }

    /// `self - other` on the common refinement.
    pub fn difference(&self, other: &SimpleFunction) -> Result<SimpleFunction, MeasureError> {
        if self.d != other.d {
            return Err(MeasureError::DimensionMismatch);
        }
        let r = common_refinement(&self.space, &other.space)?;
        let d = self.d;
        let mut values = Vec::with_capacity(r.space.cell_count() * d);
        for i in 0..r.space.cell_count() {
            let va = self.cell_value(r.parent_a[i]);
            let vb = other.cell_value(r.parent_b[i]);
            for j in 0..d {
                values.push(va[j] - vb[j]);
            }
        }
        Ok(SimpleFunction::new(r.space, d, values))
    }
}

/// `I_phi(x) = sum_c mu_c phi(x_c)`: the exact integral of `phi` composed
/// with a simple function. Returns +inf as soon as any cell value leaves
/// dom phi.
pub fn integral_functional(phi: &Integrand, x: &SimpleFunction) -> f64 {
    assert_eq!(
        phi.dimension,
        x.codomain_dim(),
        "integrand dimension must match the codomain"
    );
    let mut acc = Neumaier::new();
    for (i, c) in x.space.cells.iter().enumerate() {
        let v = phi.value(x.cell_value(i));
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        acc.add(c.weight * v);
    }
    acc.value()
}

/// `int ||x - y|| dmu`, exact on the common refinement.
pub fn l1_distance(x: &SimpleFunction, y: &SimpleFunction) -> Result<f64, MeasureError> {
    Ok(x.difference(y)?.l1_norm())
}

/// `mu { ||x - y|| >= eta }`, exact on the common refinement.
pub fn deviation_measure(
    x: &SimpleFunction,
    y: &SimpleFunction,
    eta: f64,
) -> Result<f64, MeasureError> {
    assert!(eta > 0.0, "deviation threshold must be positive");
    let diff = x.difference(y)?;
    let mut acc = Neumaier::new();
    for (i, c) in diff.space.cells.iter().enumerate() {
        if fp::norm2(diff.cell_value(i)) >= eta {
            acc.add(c.weight);
        }
    }
    Ok(acc.value())
}

/// For each threshold `M`, the worst tail integral over the family:
/// `sup_n int_{||x_n|| > M} ||x_n|| dmu`. A vanishing profile as `M` grows
/// (uniformly over the family) is the uniform-integrability surrogate.
pub fn uniform_integrability_profile(xs: &[SimpleFunction], thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&m| {
            let mut worst = 0.0_f64;
            for x in xs {
                worst = worst.max(x.tail_l1(m));
            }
            worst
        })
        .collect()
}
