//! Small dense linear algebra: Cholesky factorization, triangular solves,
//! and a row-rank estimate via modified Gram-Schmidt.
//!
//! Matrices are row-major `&[f64]` slices with explicit dimensions. Problem
//! sizes here are tiny (constraint counts <= a few dozen), so clarity wins
//! over blocking.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;

/// Lower-triangular Cholesky factor of a symmetric positive definite `n x n`
/// matrix (row-major). Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = fp::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower factor from [`cholesky`].
pub fn cho_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Solves the symmetric positive definite system `a x = b`, adding an
/// escalating diagonal ridge when the bare factorization fails. Returns the
/// solution and the ridge that was actually used.
pub fn solve_spd_ridged(a: &[f64], n: usize, b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut scale: f64 = 0.0;
    for i in 0..n {
        scale = if fp::abs(a[i * n + i]) > scale {
            fp::abs(a[i * n + i])
        } else {
            scale
        };
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let mut ridge = 0.0;
    let mut next_ridge = scale * 1e-14;
    for attempt in 0..12 {
        let mut m = a.to_vec();
        if attempt > 0 {
            ridge = next_ridge;
            next_ridge *= 10.0;
            for i in 0..n {
                m[i * n + i] += ridge;
            }
        }
        if let Some(l) = cholesky(&m, n) {
            return Some((cho_solve(&l, n, b), ridge));
        }
    }
    None
}

/// Rank of the `m x n` row-major matrix estimated by modified Gram-Schmidt on
/// its rows; a row counts when its residual keeps at least `rtol` of its
/// original norm (and is nonzero).
pub fn row_rank(a: &[f64], m: usize, n: usize, rtol: f64) -> usize {
    debug_assert_eq!(a.len(), m * n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let mut r = a[i * n..(i + 1) * n].to_vec();
        let orig = fp::norm2(&r);
        if orig == 0.0 {
            continue;
        }
        for q in &basis {
            let c = fp::dot(&r, q);
            for k in 0..n {
                r[k] -= c * q[k];
            }
        }
        // Second pass tightens orthogonality for near-dependent rows.
        for q in &basis {
            let c = fp::dot(&r, q);
            for k in 0..n {
                r[k] -= c * q[k];
            }
        }
        let res = fp::norm2(&r);
        if res > rtol * orig {
            for k in 0..n {
                r[k] /= res;
            }
            basis.push(r);
        }
    }
    basis.len()
}

/// `a b` for row-major `a` (`m x n`) and vector `b` (`n`).
pub fn matvec(a: &[f64], m: usize, n: usize, b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for i in 0..m {
        out[i] = fp::dot(&a[i * n..(i + 1) * n], b);
    }
    out
}

/// `a^T b` for row-major `a` (`m x n`) and vector `b` (`m`).
pub fn mat_t_vec(a: &[f64], m: usize, n: usize, b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in 0..m {
        let bi = b[i];
        for k in 0..n {
            out[k] += a[i * n + k] * bi;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd() {
        // 4x + 2y = 8, 2x + 3y = 7 has the unique solution (1.25, 1.5).
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let x = cho_solve(&l, 2, &[8.0, 7.0]);
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&a, 2).is_none());
    }

    #[test]
    fn rank_detects_duplicate_rows() {
        let a = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(row_rank(&a, 2, 3, 1e-10), 1);
        let b = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(row_rank(&b, 2, 3, 1e-10), 2);
    }
}
