//! Effective domains of catalog integrands and their conjugates.
//!
//! A [`DomainSpec`] is a set in R^d with decidable membership and a cheap
//! interior sampler. Box endpoints may be infinite, which is how half-lines
//! such as the domain of the log-barrier conjugate (-inf, 0) are expressed.
//!
//! Symmetric-matrix arguments travel as packed vectors (lower triangle,
//! off-diagonal entries scaled by sqrt(2) so that the Euclidean dot product
//! of two packed vectors equals the trace inner product of the matrices);
//! see [`pack_sym`] / [`unpack_sym`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::fp;
use crate::linalg;

/// Half-width of the sampling window substituted for an infinite endpoint.
const UNBOUNDED_SAMPLE_WINDOW: f64 = 4.0;

/// Subset of R^d on which an integrand (or its conjugate) takes finite values.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DomainSpec {
    /// All of R^d.
    AllSpace { dim: usize },
    /// Product of open intervals; endpoints may be infinite.
    OpenBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Product of closed intervals; endpoints may be infinite (closedness is
    /// moot at an infinite end) or coincide (degenerate singleton boxes are
    /// how indicator-conjugate domains are expressed).
    ClosedBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Open Euclidean unit ball in R^d.
    OpenUnitBall { dim: usize },
    /// Symmetric positive definite `side x side` matrices in packed form
    /// (ambient dimension `side * (side + 1) / 2`).
    PositiveDefinite { side: usize },
    /// Symmetric negative definite matrices in packed form.
    NegativeDefinite { side: usize },
}

impl DomainSpec {
    /// Ambient dimension of points tested for membership.
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::AllSpace { dim } | DomainSpec::OpenUnitBall { dim } => *dim,
            DomainSpec::OpenBox { lo, .. } | DomainSpec::ClosedBox { lo, .. } => lo.len(),
            DomainSpec::PositiveDefinite { side } | DomainSpec::NegativeDefinite { side } => {
                packed_dim(*side)
            }
        }
    }

    /// Membership in the set itself (boundary included only for closed boxes).
    pub fn contains(&self, z: &[f64]) -> bool {
        if z.len() != self.dim() || z.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            DomainSpec::AllSpace { .. } => true,
            DomainSpec::OpenBox { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(&v, (&a, &b))| a < v && v < b),
            DomainSpec::ClosedBox { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(&v, (&a, &b))| a <= v && v <= b),
            DomainSpec::OpenUnitBall { .. } => fp::norm2(z) < 1.0,
            DomainSpec::PositiveDefinite { side } => {
                let m = unpack_sym(z, *side);
                linalg::cholesky(&m, *side).is_some()
            }
            DomainSpec::NegativeDefinite { side } => {
                let m: Vec<f64> = unpack_sym(z, *side).iter().map(|v| -v).collect();
                linalg::cholesky(&m, *side).is_some()
            }
        }
    }

    /// Membership in the topological interior (strict inequalities
    /// everywhere; identical to [`Self::contains`] for open sets).
    pub fn interior_contains(&self, z: &[f64]) -> bool {
        match self {
            DomainSpec::ClosedBox { lo, hi } => {
                z.len() == self.dim()
                    && z.iter().all(|v| v.is_finite())
                    && z.iter()
                        .zip(lo.iter().zip(hi.iter()))
                        .all(|(&v, (&a, &b))| a < v && v < b)
            }
            _ => self.contains(z),
        }
    }

    /// True when the set is all of R^d.
    pub fn is_all_space(&self) -> bool {
        matches!(self, DomainSpec::AllSpace { .. })
    }

    /// A box guaranteed to contain interior points, for samplers and numeric
    /// conjugation: the set's own bounds where finite, a fixed window where
    /// not. Cone domains get a window around a definite center.
    pub fn sampling_box(&self) -> (Vec<f64>, Vec<f64>) {
        let w = UNBOUNDED_SAMPLE_WINDOW;
        match self {
            DomainSpec::AllSpace { dim } => (vec![-w; *dim], vec![w; *dim]),
            DomainSpec::OpenBox { lo, hi } | DomainSpec::ClosedBox { lo, hi } => {
                let mut flo = Vec::with_capacity(lo.len());
                let mut fhi = Vec::with_capacity(hi.len());
                for (&a, &b) in lo.iter().zip(hi.iter()) {
                    let (fa, fb) = match (a.is_finite(), b.is_finite()) {
                        (true, true) => (a, b),
                        (false, true) => (b - w, b),
                        (true, false) => (a, a + w),
                        (false, false) => (-w, w),
                    };
                    flo.push(fa);
                    fhi.push(fb);
                }
                (flo, fhi)
            }
            DomainSpec::OpenUnitBall { dim } => (vec![-1.0; *dim], vec![1.0; *dim]),
            DomainSpec::PositiveDefinite { side } => {
                let d = packed_dim(*side);
                (vec![-w; d], vec![w; d])
            }
            DomainSpec::NegativeDefinite { side } => {
                let d = packed_dim(*side);
                (vec![-w; d], vec![w; d])
            }
        }
    }

    /// Draws a point from the interior, `margin` (a fraction of each finite
    /// width, or of the sampling window) away from any boundary. Cone domains
    /// sample a random factor `L` and return `L L^T + margin * I` (negated
    /// for the negative definite cone), which is definite by construction.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R, margin: f64) -> Vec<f64> {
        match self {
            DomainSpec::OpenUnitBall { dim } => {
                // Rejection from the enclosing cube; acceptance is ~0.52 in
                // dimension 3 and certain to terminate for the small dims here.
                loop {
                    let z: Vec<f64> = (0..*dim)
                        .map(|_| rng.gen_range(-(1.0 - margin)..(1.0 - margin)))
                        .collect();
                    if fp::norm2(&z) <= 1.0 - margin {
                        return z;
                    }
                }
            }
            DomainSpec::PositiveDefinite { side } | DomainSpec::NegativeDefinite { side } => {
                let s = *side;
                let mut l = vec![0.0; s * s];
                for i in 0..s {
                    for j in 0..=i {
                        l[i * s + j] = if i == j {
                            rng.gen_range(0.3..1.5)
                        } else {
                            rng.gen_range(-0.5..0.5)
                        };
                    }
                }
                let mut m = vec![0.0; s * s];
                for i in 0..s {
                    for j in 0..s {
                        let mut acc = 0.0;
                        for k in 0..s {
                            acc += l[i * s + k] * l[j * s + k];
                        }
                        m[i * s + j] = acc;
                    }
                }
                for i in 0..s {
                    m[i * s + i] += margin;
                }
                if matches!(self, DomainSpec::NegativeDefinite { .. }) {
                    for v in m.iter_mut() {
                        *v = -*v;
                    }
                }
                pack_sym(&m, s)
            }
            _ => {
                let (lo, hi) = self.sampling_box();
                lo.iter()
                    .zip(hi.iter())
                    .map(|(&a, &b)| {
                        let pad = margin * (b - a);
                        rng.gen_range((a + pad)..(b - pad))
                    })
                    .collect()
            }
        }
    }
}

/// Length of the packed representation of a symmetric `side x side` matrix.
pub fn packed_dim(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Inverse of [`packed_dim`]: the matrix side for a packed length, if any.
pub fn side_for_packed(len: usize) -> Option<usize> {
    let mut side = 0;
    while packed_dim(side) < len {
        side += 1;
    }
    (packed_dim(side) == len).then_some(side)
}

/// Packs a row-major symmetric matrix into its lower triangle, scaling
/// off-diagonal entries by sqrt(2) so packed dot products equal trace inner
/// products.
pub fn pack_sym(m: &[f64], side: usize) -> Vec<f64> {
    debug_assert_eq!(m.len(), side * side);
    let r2 = fp::sqrt(2.0);
    let mut out = Vec::with_capacity(packed_dim(side));
    for i in 0..side {
        for j in 0..=i {
            out.push(if i == j { m[i * side + i] } else { r2 * m[i * side + j] });
        }
    }
    out
}

/// Expands a packed vector back to a full row-major symmetric matrix.
pub fn unpack_sym(p: &[f64], side: usize) -> Vec<f64> {
    debug_assert_eq!(p.len(), packed_dim(side));
    let r2 = fp::sqrt(2.0);
    let mut m = vec![0.0; side * side];
    let mut idx = 0;
    for i in 0..side {
        for j in 0..=i {
            let v = if i == j { p[idx] } else { p[idx] / r2 };
            m[i * side + j] = v;
            m[j * side + i] = v;
            idx += 1;
        }
    }
    m
}
