//! Restriction varieties in orthogonal Grassmannians `OG(k, n)`.
//!
//! A restriction variety is cut out inside `OG(k, n)` by a nested sequence of
//! isotropic linear spaces `L_{n_j}` and sub-quadrics `Q^{r_i}_{d_i}`.  This
//! crate models those sequences and implements the combinatorial geometry
//! attached to them:
//!
//! * [`seqmodel`] — the sequence data model, text and JSON grammars, and the
//!   compressed partition form.
//! * [`admissible`] — the admissibility conditions (1)–(9), special indices,
//!   and marking consistency.
//! * [`dims`] — exact dimension counts and tangent-space excess.
//! * [`typea`] — the type-A (ordinary Grassmannian) Schubert baseline.
//! * [`degen`] — the degeneration rules and the Σ-locus case analysis.
//! * [`singloc`] — assembly of the exceptional image and the singular locus.
//! * [`tower`] — the resolution tower of Grassmannian bundles and its
//!   dimension bookkeeping.
//! * [`fforacle`] — a finite-field brute-force oracle that realizes sequences
//!   over `F_q` and counts points of the associated cells.
//! * [`corpus`] — reproducible random generation of admissible sequences.
//! * [`cli`] — the `ogres` command-line interface.
//!
//! Everything is exact integer combinatorics; there is no floating point
//! anywhere in the core computations.

pub mod admissible;
pub mod cli;
pub mod corpus;
pub mod degen;
pub mod dims;
pub mod fforacle;
pub mod seqmodel;
pub mod singloc;
pub mod tower;
pub mod typea;

use thiserror::Error;

// ====================================================================
// Shared error type
// ====================================================================

/// Unified error type for the whole crate.
///
/// Each variant corresponds to one failure mode named in the module
/// contracts; the payload is a human-readable detail string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed sequence text or JSON (bad token, bad number, bad prime).
    #[error("parse error: {0}")]
    ParseError(String),
    /// Steps out of order: linears after quadrics, non-increasing dimensions.
    #[error("order error: {0}")]
    OrderError(String),
    /// Dimensions incompatible with the ambient space (`2k > n` or a step
    /// dimension exceeding `n`).
    #[error("ambient error: {0}")]
    AmbientError(String),
    /// An index outside the valid range (paper index `i`, group index `g`/`h`).
    #[error("index error: {0}")]
    IndexError(String),
    /// Partition data that does not reassemble into a sequence.
    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),
    /// An operation that requires a structurally sound sequence received a
    /// broken one.
    #[error("not validated: {0}")]
    NotValidated(String),
    /// A locus was paired with a sequence it was not derived from.
    #[error("origin mismatch: {0}")]
    OriginMismatch(String),
    /// A degeneration rule was requested where its trigger is absent.
    #[error("rule not applicable: {0}")]
    RuleNotApplicable(String),
    /// A cascade insertion ran off the bottom of the flag.
    #[error("degenerate collision: {0}")]
    DegenerateCollision(String),
    /// Two sequences of different lengths or ambients were compared.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    /// The oracle could not realize a sequence over the requested field.
    #[error("realization failed: {0}")]
    RealizationFailed(String),
    /// The oracle enumeration exceeded its candidate budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// A point count needed for a dimension estimate was zero.
    #[error("empty cell: {0}")]
    EmptyCell(String),
    /// A containment check failed at a concrete finite-field point.
    #[error("realization mismatch: {0}")]
    RealizationMismatch(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use admissible::{special_indices, validate, validate_marking, ConditionId, Violation};
pub use corpus::{golden_sequences, random_admissible, standard_corpus};
pub use degen::{
    apply_rule, normalize, sigma_d, sigma_n_inner, sigma_ns, sigma_r, Classification, GateMode,
    Origin, SigmaLocus,
};
pub use dims::{dim_restriction, tangent_excess, DimReport, TangentExcess};
pub use fforacle::{
    check_sigma_containment, count_cell_points, enumerate_isotropic, estimate_dim, realize_flag,
    CountMode, FlagRealization, Subspace,
};
pub use seqmodel::{
    format_sequence, from_partitions, parse_sequence, to_partitions, PartitionTriple, Sequence,
    Step,
};
pub use singloc::{
    classify_locus, exceptional_image, sequence_contains, singular_locus, SingularComponent,
    SingularLocusReport,
};
pub use tower::{build_tower, generic_fiber_dim, tower_dim, TowerDiagram};
pub use typea::{schubert_dim, schubert_partition, schubert_singular_locus, SchubertComponent};
