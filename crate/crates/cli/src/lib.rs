//! Convergence-study driver: configuration, level sweeps, reference
//! pairings, CSV tables and boundary profiles.

pub mod error;
pub mod profile;
pub mod spec;
pub mod study;

pub use error::CliError;
pub use spec::{Method, Overrides, ReferenceMode, StudySpec};
pub use study::{run_study, write_csv, StudyReport, StudyRow};
