//! Random two-generator subgroups of `U_n(Z)`, the group of unit upper
//! triangular integer matrices.
//!
//! Pick two independent uniform random words `V`, `W` of length `len` in the
//! generators `A_i = I + E_{i,i+1}` and their inverses. This crate answers,
//! exactly or by simulation, how likely `<V, W>` is to be abelian, to have
//! full nilpotency step `n - 1`, and related questions about the walk of the
//! superdiagonal.

pub mod analysis;
pub mod brackets;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod unipotent;
pub mod words;

pub use analysis::{FullStep, GroupSample, Pattern, StepReport};
pub use brackets::{bracket, iterated_bracket, BracketOperand};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ExperimentKind, LengthRule, SummaryRow, TrialRecord};
pub use oracle::{enumerate_all, ExhaustiveResult};
pub use unipotent::{Layout, Sign, SuperdiagonalVector, UnipotentMatrix};
pub use words::{Letter, WalkSampler, Word};
