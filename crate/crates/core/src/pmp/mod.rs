//! Hamiltonians, their minimization over the control grid, the necessary
//! condition verifier and the sufficient condition certifier.

mod certify;
mod competitors;
mod hamiltonian;
mod verify;

pub use certify::{certify_sufficient, ConvexityEvidence, ConvexityMethod, ConvexityOptions, SufficiencyCertificate};
pub use competitors::{compare_with_competitors, random_competitors, CompetitorOutcome};
pub use hamiltonian::{hamiltonian_relaxed, hamiltonian_strict, minimize_hamiltonian, HamiltonianInputs};
pub use verify::{
    verify_necessary, ConditionId, ConditionRecord, DirectionRecord, ReportConfig, Tolerances, VerificationReport,
};

pub(crate) use hamiltonian::HamiltonianEval;
