//! Harmonic-grammar structures and classical optimizers.
//!
//! - [`fock`]: occupation-basis states with binding and unbinding operators.
//! - [`grammar`]: Harmony functions over tree topologies and an exact maximizer.
//! - [`anneal`]: Potts-model simulated annealing over symbol assignments.
//! - [`trees`]: enumeration and morphing of feasible binary parse trees.

pub mod anneal;
pub mod fock;
pub mod grammar;
pub mod trees;
