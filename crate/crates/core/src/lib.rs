//! Exact-arithmetic verification toolkit for Hecke operators on compact
//! inductions for GL(2) of a local field.
//!
//! Everything here is computed over small finite fields or exact local-field
//! scalars; there is no floating point and no tolerance anywhere. Positive
//! verdicts produced by the span/membership machinery come with explicit
//! linear-combination witnesses and are exact certificates; negative verdicts
//! from depth-truncated searches are reported as inconclusive, never as
//! refutations.

pub mod cli;
pub mod combinat;
pub mod cosets;
pub mod gf;
pub mod hecke;
pub mod linalg;
pub mod localfield;
pub mod par;
pub mod report;
pub mod selfext;
pub mod weights;

/// Errors surfaced by the library. Anything not listed here (e.g. mixing
/// scalars from different field modes) is a programming error and panics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("inversion of zero")]
    ZeroInversion,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("negative valuation: no residue")]
    NegativeValuation,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
