//! Row-by-row boundary-MPS contraction of a vertex-model network.
//!
//! The chain starts and ends in the singlet-like pair state
//! `(|01⟩ + |10⟩)/√2` on every pair `(2j, 2j + 1)`; the dangling sites 0
//! and `2d + 1` are never touched by gates and carry the boundary
//! correlators `⟨Z₀Z_{2d+1}⟩` and `⟨X₀X_{2d+1}⟩`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, LN_2};

use serde::{Deserialize, Serialize};

use super::gate::{gate_from_couplings, replica_gate, VertexGate};
use super::mps::{BoundaryState, Truncation};
use crate::channel::{Couplings, Replica};
use crate::lattice::PlanarCodeLattice;
#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Result, TelecodeError};

/// Single-site operators used for boundary observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Z,
}

impl Pauli {
    fn apply(self, a: usize) -> (usize, f64) {
        match self {
            Pauli::I => (a, 1.0),
            Pauli::X => (1 - a, 1.0),
            Pauli::Z => (a, if a == 0 { 1.0 } else { -1.0 }),
        }
    }
}

/// Pair amplitude of `(|01⟩ + |10⟩)/√2`, doubled for the two-replica chain.
pub fn boundary_pair(dim: usize) -> Vec<f64> {
    let single = [0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];
    match dim {
        2 => single.to_vec(),
        4 => {
            let mut v = vec![0.0; 16];
            for a1 in 0..2 {
                for a2 in 0..2 {
                    for b1 in 0..2 {
                        for b2 in 0..2 {
                            v[(a1 * 2 + a2) * 4 + b1 * 2 + b2] = single[a1 * 2 + b1] * single[a2 * 2 + b2];
                        }
                    }
                }
            }
            v
        }
        _ => panic!("unsupported local dimension {dim}"),
    }
}

/// Boundary pair with per-copy operators on its left (`on_left`) or right
/// site.
fn decorated_pair(dim: usize, ops: &[Pauli], on_left: bool) -> Vec<f64> {
    let base = boundary_pair(dim);
    let mut out = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let v = base[a * dim + b];
            if v == 0.0 {
                continue;
            }
            let target = if on_left { a } else { b };
            let (mut t, mut w) = (0usize, 1.0);
            let copies = ops.len();
            for (c, op) in ops.iter().enumerate() {
                let shift = copies - 1 - c;
                let bit = (target >> shift) & 1;
                let (nb, f) = op.apply(bit);
                t |= nb << shift;
                w *= f;
            }
            let (na, nb) = if on_left { (t, b) } else { (a, t) };
            out[na * dim + nb] += w * v;
        }
    }
    out
}

/// `⟨B| O_first ⊗ O_last |state⟩` for per-copy operators on the two
/// dangling sites, where `state` is stored normalized.
pub fn dangling_overlap(state: &BoundaryState, first: &[Pauli], last: &[Pauli]) -> Result<f64> {
    let dim = state.dim;
    let n_pairs = state.len() / 2;
    let plain = boundary_pair(dim);
    let head = decorated_pair(dim, first, true);
    let tail = decorated_pair(dim, last, false);
    let mut pairs: Vec<&[f64]> = vec![plain.as_slice(); n_pairs];
    pairs[0] = &head;
    pairs[n_pairs - 1] = &tail;
    let bra = BoundaryState::from_pairs(dim, &pairs)?;
    Ok(bra.overlap_with(state) * bra.log_norm.exp())
}

/// Raw boundary overlaps of a finished contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryOverlaps {
    /// `a = ⟨B|ψ⟩`, `bz = ⟨B|Z₀Z_{2d+1}|ψ⟩`, `bx = ⟨B|X₀X_{2d+1}|ψ⟩`.
    Single { a: f64, bz: f64, bx: f64 },
    /// Two-replica overlaps, labelled by the copy carrying `Z₀Z_{2d+1}`.
    Doubled {
        ii: f64,
        zi: f64,
        iz: f64,
        zz: f64,
        xx: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub overlaps: BoundaryOverlaps,
    pub state: BoundaryState,
    /// Number of qubits of the contracted lattice.
    pub n_qubits: usize,
    /// Bonds per transfer slice, `d` for a square code.
    pub slice_bonds: usize,
}

impl Contraction {
    pub fn log_norm(&self) -> f64 {
        self.state.log_norm
    }

    pub fn discarded_weight(&self) -> f64 {
        self.state.cum_discarded_weight
    }

    pub fn chi_used(&self) -> usize {
        self.state.max_bond()
    }

    /// `(⟨Z₀Z_{2d+1}⟩, ⟨X₀X_{2d+1}⟩)` of the single-replica chain.
    pub fn correlators(&self) -> Option<(f64, f64)> {
        match self.overlaps {
            BoundaryOverlaps::Single { a, bz, bx } => Some((bz / a, bx / a)),
            BoundaryOverlaps::Doubled { .. } => None,
        }
    }

    /// Polarization `(κ_x, κ_z)` from the raw overlaps.
    pub fn kappa(&self) -> Option<(f64, f64)> {
        match self.overlaps {
            BoundaryOverlaps::Single { a, bz, bx } => {
                let den = a - bz;
                Some(((a + bz) / den, 2.0 * bx / den))
            }
            BoundaryOverlaps::Doubled { .. } => None,
        }
    }

    /// Born probability `ln P(s)` of the contracted outcome.
    pub fn log_prob(&self) -> Option<f64> {
        match self.overlaps {
            BoundaryOverlaps::Single { a, bz, .. } => Some(
                self.state.log_norm + (0.5 * (a - bz)).ln()
                    - (self.n_qubits as f64 - self.slice_bonds as f64) * LN_2,
            ),
            BoundaryOverlaps::Doubled { .. } => None,
        }
    }

    /// Replica average `[κ²]₂` of the two-replica chain.
    pub fn kappa_sq_2(&self) -> Option<f64> {
        match self.overlaps {
            BoundaryOverlaps::Doubled { ii, zi, iz, zz, xx } => {
                Some((ii + zi + iz + zz + 4.0 * xx) / (ii - zi - iz + zz))
            }
            BoundaryOverlaps::Single { .. } => None,
        }
    }
}

/// Initial boundary state of the lattice's transfer chain.
pub fn initial_state(lat: &PlanarCodeLattice, dim: usize) -> Result<BoundaryState> {
    BoundaryState::paired(dim, lat.slice_width / 2, &boundary_pair(dim))
}

/// Outcome-resolved single-replica gates, one per qubit site.
pub fn gates_for_outcome(
    lat: &PlanarCodeLattice,
    c: &Couplings,
    outcome: &[i8],
) -> Result<Vec<VertexGate>> {
    if outcome.len() != lat.n_qubits() {
        return Err(TelecodeError::OutcomeLength {
            expected: lat.n_qubits(),
            got: outcome.len(),
        });
    }
    lat.qubit_sites
        .iter()
        .zip(outcome)
        .map(|(q, &s)| gate_from_couplings(c, s, q.orientation))
        .collect()
}

/// Uniform replica gates (`n = 2` or `∞`), one per qubit site.
pub fn replica_gates(lat: &PlanarCodeLattice, c: &Couplings, n: Replica) -> Result<Vec<VertexGate>> {
    let h = replica_gate(c, n, crate::lattice::Orientation::Horizontal)?;
    let v = replica_gate(c, n, crate::lattice::Orientation::Vertical)?;
    Ok(lat
        .qubit_sites
        .iter()
        .map(|q| match q.orientation {
            crate::lattice::Orientation::Horizontal => h.clone(),
            crate::lattice::Orientation::Vertical => v.clone(),
        })
        .collect())
}

/// Contract the network and evaluate the boundary observables.
pub fn contract(lat: &PlanarCodeLattice, gates: &[VertexGate], trunc: &Truncation) -> Result<Contraction> {
    contract_with(lat, gates, trunc, |_, _| {})
}

/// As [`contract`], calling `observer(layer, state)` after every layer.
pub fn contract_with(
    lat: &PlanarCodeLattice,
    gates: &[VertexGate],
    trunc: &Truncation,
    mut observer: impl FnMut(usize, &BoundaryState),
) -> Result<Contraction> {
    let state = sweep(lat, gates, trunc, &mut observer)?;
    finish(lat, state)
}

/// Run every layer of the schedule and return the final boundary state.
pub fn sweep(
    lat: &PlanarCodeLattice,
    gates: &[VertexGate],
    trunc: &Truncation,
    observer: &mut dyn FnMut(usize, &BoundaryState),
) -> Result<BoundaryState> {
    if gates.len() != lat.n_qubits() {
        return Err(TelecodeError::OutcomeLength {
            expected: lat.n_qubits(),
            got: gates.len(),
        });
    }
    let dim = gates[0].dim;
    if let Some(g) = gates.iter().find(|g| g.dim != dim) {
        return Err(TelecodeError::GateDimension {
            expected: dim,
            got: g.dim,
        });
    }
    let ops: Vec<Vec<f64>> = gates.iter().map(VertexGate::operator).collect();
    let mut state = initial_state(lat, dim)?;
    let flat: Vec<_> = lat.schedule().copied().collect();
    let mut pos = 0;
    for (layer_idx, layer) in lat.contraction_rows.iter().enumerate() {
        for g in layer {
            let next_right = flat
                .get(pos + 1)
                .is_none_or(|n| n.chain_left > g.chain_left);
            state.apply_two_site(g.chain_left, &ops[g.site], trunc, next_right, layer_idx)?;
            pos += 1;
        }
        observer(layer_idx, &state);
    }
    Ok(state)
}

/// Evaluate boundary overlaps of a fully swept state.
pub fn finish(lat: &PlanarCodeLattice, state: BoundaryState) -> Result<Contraction> {
    use Pauli::{I, X, Z};
    let overlaps = match state.dim {
        2 => BoundaryOverlaps::Single {
            a: dangling_overlap(&state, &[I], &[I])?,
            bz: dangling_overlap(&state, &[Z], &[Z])?,
            bx: dangling_overlap(&state, &[X], &[X])?,
        },
        4 => BoundaryOverlaps::Doubled {
            ii: dangling_overlap(&state, &[I, I], &[I, I])?,
            zi: dangling_overlap(&state, &[Z, I], &[Z, I])?,
            iz: dangling_overlap(&state, &[I, Z], &[I, Z])?,
            zz: dangling_overlap(&state, &[Z, Z], &[Z, Z])?,
            xx: dangling_overlap(&state, &[X, X], &[X, X])?,
        },
        d => {
            return Err(TelecodeError::GateDimension { expected: 2, got: d });
        }
    };
    for v in match overlaps {
        BoundaryOverlaps::Single { a, bz, bx } => vec![a, bz, bx],
        BoundaryOverlaps::Doubled { ii, zi, iz, zz, xx } => vec![ii, zi, iz, zz, xx],
    } {
        if !v.is_finite() {
            return Err(TelecodeError::NonFinite {
                row: lat.contraction_rows.len(),
                context: "boundary overlap",
            });
        }
    }
    Ok(Contraction {
        overlaps,
        state,
        n_qubits: lat.n_qubits(),
        slice_bonds: lat.slice_width / 2 - 1,
    })
}
