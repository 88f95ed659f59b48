//! Delayed neural-network solvers for absolute value equations.
//!
//! The absolute value equation `A x - |x| - b = 0` is solved here by
//! following two delayed dynamical systems whose equilibria are exactly
//! its solutions: one with a discrete and a distributed delay (the
//! *mixed* model) and one with a single discrete delay. The crate
//! provides
//!
//! * a fixed-step method-of-steps integrator with dense cubic-Hermite
//!   output for both models ([`dde`]),
//! * certificates of exponential convergence based on block matrix
//!   inequalities, including assembly, verification, an envelope
//!   factor, and a projected subgradient feasibility search ([`lmi`]),
//! * brute-force sign enumeration of the solution set for
//!   cross-checking on small problems ([`ave`]),
//! * an experiment harness with eight built-in examples, bundled
//!   feasible certificates, and plain-text artifacts ([`harness`]).
//!
//! The `examples/` directory demonstrates each capability end to end;
//! the `avenn` binary exposes the same pipeline on the command line.
//!
//! ```
//! use avenn::harness;
//!
//! let example = harness::load_builtin("ex4-discrete")?;
//! let report = example.certificate.verify(example.problem.matrix(), 0.0)?;
//! assert!(report.feasible && report.lambda_max < 0.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod ave;
pub mod dde;
pub mod harness;
pub mod linalg;
pub mod lmi;
pub mod models;

pub use ave::{enumerate_solutions, AveProblem, SolutionReport};
pub use dde::{integrate_discrete, integrate_mixed, DenseTrajectory, IntegratorConfig};
pub use harness::{
    builtin_names, fit_decay_rate, load_builtin, run_experiment, write_artifacts, BuiltinExample,
    CertificateSource, ExperimentSpec, ModelKind, RunOutcome, RunReport,
};
pub use linalg::{Matrix, Vector};
pub use lmi::{
    assemble_pi, assemble_r, exponential_bound_check, search_discrete_certificate,
    search_mixed_certificate, Certificate, CertificateReport, DiscreteCertificate,
    FeasibilitySearchOptions, MixedCertificate, SearchOutcome,
};
pub use models::{DiscreteDelayModel, HistoryFunction, MixedDelayModel};
