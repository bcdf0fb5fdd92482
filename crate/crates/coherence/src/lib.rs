//! Coherence of quantum states relative to projective and generalized
//! measurements.
//!
//! The crate measures how far a state is from being "classical" for a given
//! measurement: six measures for block (projective) coherence, their POVM
//! counterparts through a canonical unitary extension of the measurement,
//! convex solvers that certify the optimization-based measures, and seeded
//! property suites that exercise the resource-theory axioms.

#![forbid(unsafe_code)]

pub mod block;
pub mod error;
pub mod io;
pub mod linalg;
pub mod naimark;
pub mod optim;
pub mod povm;
pub mod quantum;
pub mod verify;

pub use block::{Certificate, Diagnostics, Measure, MeasureResult};
pub use error::{CoherenceError, Result};
pub use io::{ExtensionFile, MeasurementFile, ParsedMeasurement, StateFile};
pub use naimark::{build_extension, build_extension_with, verify_extension, Completion, ExtensionReport, NaimarkExtension};
pub use linalg::{CMatrix, Complex64, EigenSystem};
pub use optim::{FwStep, Residuals, SolverConfig, SolverOutcome};
pub use povm::{embed_operator, embed_state, register_blocks, Route};
pub use quantum::{
    BranchOutcome, DensityMatrix, KrausChannel, Povm, ProjectiveMeasurement,
};
pub use verify::{
    block_axiom_suite, block_suites, matcore_suite, naimark_suite, povm_suite, reduction_suite,
    rel_limit_suite, run_suites, tsallis_identity_suite, CheckStat, PropertyOutcome, SuiteConfig,
    TrialFailure,
};
