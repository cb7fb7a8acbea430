//! File formats and document types for the `rotund` binary.
//!
//! Every document the binary emits starts with the same header (tool,
//! version) and echoes the fully resolved configuration that produced it,
//! including quadrature orders and solver tolerances, so a result file is
//! reproducible from its own contents. Serialization order is struct order
//! and all numeric formatting is shortest-roundtrip, which makes reruns
//! byte-identical for equal inputs and seeds.

pub mod formats;

pub use formats::{
    load_problem, resolve_integrand, write_density_csv, write_lab_csv, write_primal_csv,
    ConstraintSpec, FunctionalSpec, Header, LabDoc, PhaseSpec, ProblemSpec, SolutionDoc,
    StabilityDoc, SuiteDoc, Tolerances, WatsonDoc,
};
