//! Simulation lab for two-way finite automata: deterministic, probabilistic
//! and quantum-classical machines with exact acceptance probabilities,
//! a quantum-query-program compiler, and time, space and communication
//! accounting.

pub mod bench;
pub mod check;
pub mod comm;
pub mod compile;
pub mod langs;
pub mod machines;
pub mod qcore;
pub mod querymodel;
