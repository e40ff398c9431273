//! Learning word-order preferences from information-structure-marked
//! sentences with weighted (Harmonic Grammar, MaxEnt) and ranked
//! (Constraint Demotion, Stochastic OT) constraint grammars.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod grammar;
pub mod inference;
pub mod learners;

pub use error::{Error, Result};
