//! Vertex-model gates, boundary MPS and contraction engine.

pub mod contract;
pub mod entropy;
pub mod gate;
pub mod mps;
pub mod rbim;

pub use contract::{contract, gates_for_outcome, replica_gates, BoundaryOverlaps, Contraction};
pub use gate::{gate_from_couplings, replica_gate, summed_gate, GateOutcome, VertexGate};
pub use mps::{BoundaryState, Truncation};
