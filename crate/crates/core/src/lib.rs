//! Exact, finite models of exchangeable random structures indexed by label sets.

pub mod dsl;
pub mod error;
pub mod ids;
pub mod indexing;
pub mod laws;
pub mod nat;
pub mod sample;
pub mod sep;
pub mod stats;
pub mod structures;
pub mod term;

pub use error::{Error, Result};
pub use ids::{IdSet, Injection, Label};
pub use indexing::IndexingSystem;
pub use term::Index;
pub use structures::{Alphabet, DataStructure, Element, StructureRule, Symbol};
