//! Standard-invariant lattices built from finite-dimensional
//! corepresentations, their character moments and amenability estimates.

pub mod amenability;
pub mod backends;
pub mod cli;
pub mod duality;
pub mod error;
pub mod group;
pub mod lattice;
pub mod moments;
pub mod reconstruct;
pub mod tensorops;
pub mod words;

pub use error::{Error, Result};
pub use words::{interval, Letter, Word};
