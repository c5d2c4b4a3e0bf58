//! Dense simulator and mechanical verifier for quantum game constructions.
//!
//! The crate is organized bottom-up:
//!
//! - [`qcore`]: complex states, operators, tensor products and Hermitian
//!   matrix functions on at most [`qcore::max_qubits`] qubits.
//! - [`circuits`]: the fixed gate set, ±1 observables, projective
//!   measurement with branch enumeration, and the generalized yes/no
//!   measurement of a universal quantum interface.
//! - [`mbqc`]: measurement-only implementations of σH, σT, Pauli and CNOT
//!   with Pauli byproduct tracking, plus the universality ledger.
//! - [`games`]: Newcomb circuits, the GVW gambling protocol and quantum
//!   finite automata.
//! - [`market`]: strategy wavefunctions, demand/supply distributions,
//!   Wigner pseudo-probabilities and transaction projections.
//!
//! Qubit 0 is always the most significant bit of a basis index.

pub mod circuits;
pub mod error;
pub mod exec;
pub mod games;
pub mod market;
pub mod mbqc;
pub mod qcore;

pub use error::{Error, Result};
pub use exec::Exec;
