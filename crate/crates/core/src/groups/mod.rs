//! Descriptors of split reductive matrix groups over `Z_p`, their Lie
//! algebras, characters, parabolics and embeddings.

pub mod character;
pub mod cocharacter;
pub mod descriptor;
pub mod embedding;
pub mod points;
pub mod roots;

pub use character::{CharKind, CharTerm, Character};
pub use cocharacter::{parabolic_split, Cocharacter, LeviSub, MirabolicDescriptor, ParabolicSplit};
pub use descriptor::{Block, BlockForm, BlockKind, Group, GroupDescriptor};
pub use embedding::{EmbeddingMap, Placement};
pub use points::{enumerate_with, group_points_mod, parabolic_points};
pub use roots::{ResidueRoots, Root, RootDatum};

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("orthogonal groups are only modelled for odd p")]
    OrthogonalAtTwo,
    #[error("form is not integral at p = {0}")]
    FormNotIntegral(u64),
    #[error("not a cocharacter: {0}")]
    NotACocharacter(String),
    #[error("form not in split standard position: {0}")]
    NotSplitStandard(String),
    #[error("embedding check failed: {0}")]
    EmbeddingCheck(String),
    #[error("enumeration estimate {estimate} exceeds budget {budget}")]
    BudgetExceeded { estimate: u128, budget: u64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
