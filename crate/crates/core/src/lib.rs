pub mod groups;
pub mod linalg;
pub mod spherical;
pub mod catalogue;
pub mod levels;
pub mod mackey;
