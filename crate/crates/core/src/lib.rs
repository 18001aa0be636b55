//! Simulation core for teleporting a planar surface code through weak Bell
//! measurements.
//!
//! Each outcome configuration maps to a random six-vertex (Ashkin-Teller)
//! model whose partition functions give the logical post-measurement state.
//! The crate contracts those models with a truncated boundary MPS, samples
//! outcomes from the Born distribution and turns them into coherent
//! information, decoder fidelities and finite-size-scaling estimates.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
mod prelude;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod scaling;
pub mod tn;

pub use channel::{Couplings, PiUnits, ProtocolParams, Replica, Strength};
pub use error::{Result, TelecodeError};
pub use lattice::{PlanarCodeLattice, RoughSides};
