//! Convex integrands and the integral functionals they induce on spaces of
//! simple (piecewise-constant) functions over finite measure spaces.
//!
//! The crate has three layers:
//!
//! * a catalog of classical convex integrands (entropies, log barriers, norm
//!   powers, a log-determinant barrier) with closed-form conjugates, gradients
//!   and a rotundity classifier ([`integrand`]);
//! * exact arithmetic on weighted cell partitions: integral functionals,
//!   L1 distances, pairings against test functionals, convergence-in-measure
//!   and uniform-integrability diagnostics ([`measure`], [`functional`]);
//! * consumers of the two: a dual maximum-entropy moment solver ([`maxent`]),
//!   a lattice-average computation with its attainment threshold ([`watson`]),
//!   a counterexample laboratory for the interplay of value, measure, L1 and
//!   weak convergence ([`lab`]), and randomized rotundity probes ([`probe`]).
//!
//! Everything is deterministic: quadrature orders are fixed constants carried
//! in result metadata, probe sampling is seeded, and accumulation uses
//! compensated summation in fixed cell order.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable default
//! features and enable `libm` for builds without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("rotund requires either the `std` feature or the `libm` feature");

pub(crate) mod fp;
pub mod linalg;
pub mod quad;
pub mod sum;

pub mod domain;
pub mod functional;
pub mod integrand;
pub mod lab;
pub mod maxent;
pub mod measure;
pub mod probe;
pub mod watson;

pub use domain::DomainSpec;
pub use functional::TestFunctional;
pub use integrand::{catalog_get, classify, numeric_conjugate, Integrand, RotundityClass};
pub use measure::{MeasureSpace, SimpleFunction};
