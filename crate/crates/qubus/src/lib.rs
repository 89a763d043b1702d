//! Exact simulation of hybrid qubit / continuous-variable gates under probe
//! loss.
//!
//! A register of up to eight qubits is coupled dispersively to a single
//! coherent "bus" mode. Because displacements, conditional rotations, loss,
//! and the lossy dispersive interaction all keep the joint state inside the
//! family of coherent-state dyads, the whole evolution is tracked exactly —
//! per basis-label pair — with closed-form update rules. On top of that
//! engine sit the analytic coherence parameter, two-qubit entanglement
//! measures, the conditional-displacement and controlled-phase gate
//! constructions with their operator-sum decompositions, and an independent
//! Fock-space Lindblad integrator used as a cross-check oracle.

pub mod channels;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gates;
mod linalg;
pub mod measures;
pub mod seqfile;
pub mod state;

pub use error::{QubusError, Result};
