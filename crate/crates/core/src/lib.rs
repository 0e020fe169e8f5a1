//! Energy and depth accounting for tree algorithms on a grid of processors
//! laid out along a space-filling curve.

pub mod collectives;
pub mod curves;
pub mod error;
pub mod layout;
pub mod lca;
pub mod listrank;
pub mod rng;
pub mod sim;
pub mod tree;
pub mod treefix;
pub mod virtual_tree;

pub use error::{Error, Result};
