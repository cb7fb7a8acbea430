//! One-dimensional kernels behind the separable catalog entries.
//!
//! Each kernel is a closed convex function on an interval with a hand-derived
//! conjugate, conjugate derivative and conjugate second derivative. Boundary
//! values use the lower-semicontinuous closure (0 log 0 = 0), and every
//! formula is written in its cancellation-free form so the conjugates stay
//! accurate for large arguments.

use crate::fp;

pub(crate) const LN_2: f64 = core::f64::consts::LN_2;
const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

/// `log(1 + exp(y))` without overflow for large positive `y`.
pub(crate) fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + fp::ln_1p(fp::exp(-y))
    } else {
        fp::ln_1p(fp::exp(y))
    }
}

/// Logistic function, evaluated on the side that avoids `exp` overflow.
pub(crate) fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + fp::exp(-y))
    } else {
        let e = fp::exp(y);
        e / (1.0 + e)
    }
}

/// `log(cosh(y))`, switching to the asymptote `|y| - log 2` before `cosh`
/// can overflow.
pub(crate) fn ln_cosh(y: f64) -> f64 {
    let a = fp::abs(y);
    if a > 30.0 {
        a - LN_2 + fp::ln_1p(fp::exp(-2.0 * a))
    } else {
        fp::ln(fp::cosh(a))
    }
}

/// `t log t` with the convention that the value at `t = 0` is 0.
fn t_ln_t(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * fp::ln(t)
    }
}

/// A one-dimensional closed convex function with full conjugate data. All
/// seven kernels are strictly convex on their domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Kernel1d {
    /// `x log x - x` on [0, inf).
    BoltzmannShannon,
    /// `x log x + (1-x) log(1-x)` on [0, 1].
    FermiDirac,
    /// `-log x` on (0, inf).
    Burg,
    /// `-log cos x` on (-pi/2, pi/2).
    NegLogCos,
    /// `cosh x` on all of R.
    CoshSum,
    /// `((1+x) log(1+x) + (1-x) log(1-x)) / 2` on [-1, 1].
    AtanhEntropy,
    /// `-log x + x` on (0, inf).
    BurgPlusLinear,
}

impl Kernel1d {
    pub fn name(self) -> &'static str {
        match self {
            Kernel1d::BoltzmannShannon => "boltzmann_shannon",
            Kernel1d::FermiDirac => "fermi_dirac",
            Kernel1d::Burg => "burg",
            Kernel1d::NegLogCos => "neg_log_cos",
            Kernel1d::CoshSum => "cosh_sum",
            Kernel1d::AtanhEntropy => "atanh_entropy",
            Kernel1d::BurgPlusLinear => "burg_plus_linear",
        }
    }

    /// Domain as `(lo, hi, closed)`; `closed` refers to the finite endpoints.
    pub fn domain(self) -> (f64, f64, bool) {
        match self {
            Kernel1d::BoltzmannShannon => (0.0, f64::INFINITY, true),
            Kernel1d::FermiDirac => (0.0, 1.0, true),
            Kernel1d::Burg | Kernel1d::BurgPlusLinear => (0.0, f64::INFINITY, false),
            Kernel1d::NegLogCos => (-HALF_PI, HALF_PI, false),
            Kernel1d::CoshSum => (f64::NEG_INFINITY, f64::INFINITY, false),
            Kernel1d::AtanhEntropy => (-1.0, 1.0, true),
        }
    }

    /// Conjugate domain as `(lo, hi, closed)`.
    pub fn conj_domain(self) -> (f64, f64, bool) {
        match self {
            Kernel1d::Burg => (f64::NEG_INFINITY, 0.0, false),
            Kernel1d::BurgPlusLinear => (f64::NEG_INFINITY, 1.0, false),
            _ => (f64::NEG_INFINITY, f64::INFINITY, false),
        }
    }

    /// True when the conjugate is finite and differentiable on all of R.
    pub fn conj_everywhere_differentiable(self) -> bool {
        !matches!(self, Kernel1d::Burg | Kernel1d::BurgPlusLinear)
    }

    /// `sup |phi|` over the domain, when finite.
    pub fn value_bound(self) -> Option<f64> {
        match self {
            // Both entropies range over [-log 2, log 2] on their domains.
            Kernel1d::FermiDirac | Kernel1d::AtanhEntropy => Some(LN_2),
            _ => None,
        }
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            Kernel1d::BoltzmannShannon => {
                if x < 0.0 {
                    f64::INFINITY
                } else {
                    t_ln_t(x) - x
                }
            }
            Kernel1d::FermiDirac => {
                if !(0.0..=1.0).contains(&x) {
                    f64::INFINITY
                } else {
                    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * fp::ln_1p(-x) };
                    t_ln_t(x) + b
                }
            }
            Kernel1d::Burg => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    -fp::ln(x)
                }
            }
            Kernel1d::NegLogCos => {
                if fp::abs(x) >= HALF_PI {
                    f64::INFINITY
                } else {
                    -fp::ln(fp::cos(x))
                }
            }
            Kernel1d::CoshSum => fp::cosh(x),
            Kernel1d::AtanhEntropy => {
                if fp::abs(x) > 1.0 {
                    f64::INFINITY
                } else {
                    let a = if x == -1.0 { 0.0 } else { (1.0 + x) * fp::ln_1p(x) };
                    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * fp::ln_1p(-x) };
                    0.5 * (a + b)
                }
            }
            Kernel1d::BurgPlusLinear => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    x - fp::ln(x)
                }
            }
        }
    }

    /// Derivative on the interior of the domain; `None` elsewhere (including
    /// closed boundary points, where the slope is infinite).
    pub fn deriv(self, x: f64) -> Option<f64> {
        match self {
            Kernel1d::BoltzmannShannon => (x > 0.0).then(|| fp::ln(x)),
            Kernel1d::FermiDirac => {
                (x > 0.0 && x < 1.0).then(|| fp::ln(x) - fp::ln_1p(-x))
            }
            Kernel1d::Burg => (x > 0.0).then(|| -1.0 / x),
            Kernel1d::NegLogCos => (fp::abs(x) < HALF_PI).then(|| fp::tan(x)),
            Kernel1d::CoshSum => Some(fp::sinh(x)),
            Kernel1d::AtanhEntropy => (fp::abs(x) < 1.0).then(|| fp::atanh(x)),
            Kernel1d::BurgPlusLinear => (x > 0.0).then(|| 1.0 - 1.0 / x),
        }
    }

    pub fn conj_value(self, y: f64) -> f64 {
        match self {
            Kernel1d::BoltzmannShannon => fp::exp(y),
            Kernel1d::FermiDirac => softplus(y),
            Kernel1d::Burg => {
                if y < 0.0 {
                    -1.0 - fp::ln(-y)
                } else {
                    f64::INFINITY
                }
            }
            Kernel1d::NegLogCos => y * fp::atan(y) - 0.5 * fp::ln_1p(y * y),
            Kernel1d::CoshSum => y * fp::asinh(y) - fp::sqrt(1.0 + y * y),
            Kernel1d::AtanhEntropy => ln_cosh(y),
            Kernel1d::BurgPlusLinear => {
                if y < 1.0 {
                    -1.0 - fp::ln_1p(-y)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn conj_deriv(self, y: f64) -> Option<f64> {
        match self {
            Kernel1d::BoltzmannShannon => Some(fp::exp(y)),
            Kernel1d::FermiDirac => Some(sigmoid(y)),
            Kernel1d::Burg => (y < 0.0).then(|| -1.0 / y),
            Kernel1d::NegLogCos => Some(fp::atan(y)),
            Kernel1d::CoshSum => Some(fp::asinh(y)),
            Kernel1d::AtanhEntropy => Some(fp::tanh(y)),
            Kernel1d::BurgPlusLinear => (y < 1.0).then(|| 1.0 / (1.0 - y)),
        }
    }

    pub fn conj_second(self, y: f64) -> Option<f64> {
        match self {
            Kernel1d::BoltzmannShannon => Some(fp::exp(y)),
            Kernel1d::FermiDirac => {
                let s = sigmoid(y);
                Some(s * (1.0 - s))
            }
            Kernel1d::Burg => (y < 0.0).then(|| 1.0 / (y * y)),
            Kernel1d::NegLogCos => Some(1.0 / (1.0 + y * y)),
            Kernel1d::CoshSum => Some(1.0 / fp::sqrt(1.0 + y * y)),
            Kernel1d::AtanhEntropy => {
                let t = fp::tanh(y);
                Some(1.0 - t * t)
            }
            Kernel1d::BurgPlusLinear => {
                (y < 1.0).then(|| 1.0 / ((1.0 - y) * (1.0 - y)))
            }
        }
    }
}
