//! Exact linear algebra over `Q`, `F_p` and `Z/p^N`.

pub mod integral;
pub mod matrix;
pub mod rational;
pub mod residue;
pub mod subspace;

pub use integral::{integral_degeneracy_primes, smith_form, SmithForm};
pub use matrix::QMatrix;
pub use rational::Rational;
pub use residue::{Modulus, ZpMatrix};
pub use subspace::{Subspace, SubspaceOps};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("determinant is not a unit")]
    NonUnitDeterminant,
    #[error("matrices carry different residue rings")]
    RingMismatch,
    #[error("entries are not integral (p = {p})")]
    NotIntegral { p: u64 },
    #[error("rank {rank} is below the generic rank {generic}")]
    RankBelowGeneric { rank: usize, generic: usize },
}
