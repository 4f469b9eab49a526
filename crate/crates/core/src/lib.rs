//! Learning unitaries whose Pauli support spans a low-dimensional subspace.
//!
//! The crate is organised bottom-up:
//!
//! * [`f2`]: binary symplectic vectors, subspaces and the nested symplectic
//!   Gram-Schmidt procedure.
//! * [`pauli`]: Pauli operators with phases, Pauli expansions, projections
//!   and twirls.
//! * [`clifford`]: Clifford circuits tracked as conjugation tableaux and the
//!   synthesis of canonicalising Cliffords.
//! * [`sim`]: dense simulation, query-counted oracles, Bell sampling and the
//!   LCU projection primitive.
//! * [`tomography`]: pure-state tomography backends.
//! * [`blockdiag`]: the learner for unitaries that are block-diagonal in the
//!   canonical frame.
//! * [`dimension`]: support learning, the base learner, the Heisenberg-limited
//!   bootstrap and the junta learner.
//! * [`composed`]: the learner for compositions of a shallow circuit with a
//!   Clifford-plus-few-T circuit, plus instance generation.
//! * [`metrics`]: distances between unitaries and channels.

pub mod blockdiag;
pub mod circuit;
pub mod clifford;
pub mod composed;
pub mod dimension;
pub mod error;
pub mod f2;
pub mod instances;
pub mod linalg;
pub mod metrics;
pub mod params;
pub mod pauli;
pub mod report;
pub mod sim;
pub mod tomography;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
