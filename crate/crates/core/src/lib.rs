//! Exact linear algebra over small finite fields, symplectic and quadratic
//! spaces with characteristic-2 care, weighted gradings and filtrations, and
//! an exhaustive census machinery that classifies every nilpotent element of
//! a classical Lie algebra (and every unipotent group element) over F_q into
//! pieces and subpieces, verifying the counting identities as it goes.
//!
//! All arithmetic is exact; there is no floating point anywhere in the crate.

pub mod census;
pub mod error;
pub mod field;
pub mod formspace;
pub mod gradings;
pub mod matrix;
pub mod pieces;
pub mod recovery;
pub mod subspace;

pub use error::{Error, Result};
pub use field::{Field, FieldRef};
pub use formspace::{FormedSpace, GroupMembership, SpaceKind};
pub use gradings::{Filtration, GradedEndo, GradedSpace, PieceLabel};
pub use matrix::Matrix;
pub use pieces::{SubpieceLabel, Witness};
pub use recovery::ClassifiedElement;
pub use subspace::Subspace;

/// Default cap on the number of elements any single exhaustive enumeration
/// may visit. Overridable through the `NILPIECE_BUDGET` environment variable.
pub const DEFAULT_ELEMENT_BUDGET: u64 = 1 << 24;

/// Default cap for centralizer and group-orbit enumerations.
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// Enumeration cap, honoring `NILPIECE_BUDGET` when set.
pub fn element_budget() -> u64 {
    std::env::var("NILPIECE_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ELEMENT_BUDGET)
}
