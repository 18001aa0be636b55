//! Born-rule sampling of measurement outcomes.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{disorder_prob, Couplings, DisorderMode};
use crate::lattice::PlanarCodeLattice;
#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng::uniform;
use crate::tn::contract::{finish, initial_state};
use crate::tn::gate::gate_from_couplings;
use crate::tn::mps::{BoundaryState, SiteTensor};
use crate::tn::{Contraction, Truncation};
use crate::{Result, TelecodeError};

/// Tolerance on marginals before they are treated as a numerical failure.
pub const MARGINAL_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NishimoriIid,
    Ancestral,
    ForcedPlus,
}

/// Global seed and sample index that reproduce a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedPath {
    pub seed: u64,
    pub sample: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeConfig {
    pub d: usize,
    pub values: Vec<i8>,
    pub provenance: Provenance,
    pub seed_path: SeedPath,
}

impl OutcomeConfig {
    /// Number of `−1` outcomes.
    pub fn flips(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0).count()
    }
}

/// Independent signs, each `−1` with probability `p`.
pub fn sample_iid(lat: &PlanarCodeLattice, p: f64, seed_path: SeedPath) -> OutcomeConfig {
    let values = (0..lat.n_qubits())
        .map(|q| if uniform(seed_path.seed, seed_path.sample, q) < p { -1 } else { 1 })
        .collect();
    OutcomeConfig {
        d: lat.d,
        values,
        provenance: Provenance::NishimoriIid,
        seed_path,
    }
}

fn is_axis(theta: f64) -> bool {
    theta.abs() < 1e-12 || (theta - core::f64::consts::FRAC_PI_2).abs() < 1e-12
}

/// Gauge-fixed Born sample at `θ ∈ {0, π/2}`, bond signs iid with
/// `p = sin²(π/4 − t)`.
pub fn sample_nishimori(lat: &PlanarCodeLattice, t: f64, theta: f64, seed_path: SeedPath) -> Result<OutcomeConfig> {
    if !is_axis(theta) {
        return Err(TelecodeError::Unsupported("iid sampling requires theta = 0 or pi/2"));
    }
    Ok(sample_iid(lat, disorder_prob(t, DisorderMode::Active)?, seed_path))
}

/// Error configuration of the passive protocol, signs iid with `p = sin² t`.
pub fn sample_passive(lat: &PlanarCodeLattice, t: f64, seed_path: SeedPath) -> Result<OutcomeConfig> {
    Ok(sample_iid(lat, disorder_prob(t, DisorderMode::Passive)?, seed_path))
}

/// The all-plus configuration used by the `n = ∞` replica.
pub fn forced_plus(lat: &PlanarCodeLattice) -> OutcomeConfig {
    OutcomeConfig {
        d: lat.d,
        values: vec![1; lat.n_qubits()],
        provenance: Provenance::ForcedPlus,
        seed_path: SeedPath { seed: 0, sample: 0 },
    }
}

/// An ancestral draw together with the contraction of the drawn outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestralSample {
    pub config: OutcomeConfig,
    pub contraction: Contraction,
    /// `ln P(s)` accumulated from the sampled conditionals.
    pub log_prob: f64,
}

/// Bra `⟨chain|` with amplitude 1 on configurations whose constrained
/// neighbours differ, times `Z₀Z_{L−1}` when `z_ends`.
fn constraint_bra(len: usize, constrained: &[bool], z_ends: bool) -> BoundaryState {
    let sign = |x: usize| if x == 0 { 1.0 } else { -1.0 };
    let mut tensors = Vec::with_capacity(len);
    let mut t0 = vec![0.0; 4];
    for x in 0..2 {
        t0[x * 2 + x] = if z_ends { sign(x) } else { 1.0 };
    }
    tensors.push(SiteTensor { l: 1, r: 2, data: t0 });
    for i in 1..len {
        let last = i + 1 == len;
        let r = if last { 1 } else { 2 };
        let mut data = vec![0.0; 2 * 2 * r];
        for prev in 0..2 {
            for x in 0..2 {
                if constrained[i - 1] && prev == x {
                    continue;
                }
                let w = if last && z_ends { sign(x) } else { 1.0 };
                let next = if last { 0 } else { x };
                data[(prev * 2 + x) * r + next] = w;
            }
        }
        tensors.push(SiteTensor { l: 2, r, data });
    }
    BoundaryState::from_tensors(2, tensors)
}

/// Exact sequential sampling of `P(s)` along the contraction order.
///
/// Every unfixed gate is summed over its outcome, which turns it into an
/// antiparallel projector, so the environment of the current gate is a
/// bond-dimension-2 constraint chain contracted against the boundary
/// projector `(1 − Z₀Z_{L−1})/2`.
pub fn sample_ancestral(
    lat: &PlanarCodeLattice,
    c: &Couplings,
    trunc: &Truncation,
    seed_path: SeedPath,
) -> Result<AncestralSample> {
    let n = lat.n_qubits();
    let len = lat.slice_width;
    let mut ops_plus = Vec::with_capacity(n);
    let mut ops_minus = Vec::with_capacity(n);
    for q in &lat.qubit_sites {
        ops_plus.push(gate_from_couplings(c, 1, q.orientation)?.operator());
        ops_minus.push(gate_from_couplings(c, -1, q.orientation)?.operator());
    }
    let flat: Vec<(usize, usize, usize)> = lat
        .contraction_rows
        .iter()
        .enumerate()
        .flat_map(|(li, layer)| layer.iter().map(move |g| (li, g.site, g.chain_left)))
        .collect();
    // future[k] counts scheduled gates still to come on pair (k, k + 1).
    let mut future = vec![0usize; len - 1];
    for &(_, _, k) in &flat {
        future[k] += 1;
    }
    let mut state = initial_state(lat, 2)?;
    let mut values = vec![0i8; n];
    let mut log_prob = 0.0;
    for (pos, &(layer, site, k)) in flat.iter().enumerate() {
        future[k] -= 1;
        let constrained: Vec<bool> = (0..len - 1).map(|i| i % 2 == 0 || future[i] > 0).collect();
        let pa: Vec<f64> = ops_plus[site].iter().zip(&ops_minus[site]).map(|(a, b)| 0.5 * (a + b)).collect();
        let qd: Vec<f64> = ops_plus[site].iter().zip(&ops_minus[site]).map(|(a, b)| 0.5 * (a - b)).collect();
        let ei = state.windowed_overlaps(&constraint_bra(len, &constrained, false), k, &[&pa, &qd]);
        let ez = state.windowed_overlaps(&constraint_bra(len, &constrained, true), k, &[&pa, &qd]);
        let (e0, e1) = (ei[0] - ez[0], ei[1] - ez[1]);
        if !(e0.is_finite() && e1.is_finite()) {
            return Err(TelecodeError::NonFinite {
                row: layer,
                context: "ancestral marginal",
            });
        }
        if e0 <= 0.0 {
            return Err(TelecodeError::ZeroWeight { row: layer });
        }
        let p_plus = 0.5 * (1.0 + e1 / e0);
        if !(-MARGINAL_EPS..=1.0 + MARGINAL_EPS).contains(&p_plus) {
            return Err(TelecodeError::Domain {
                name: "ancestral marginal",
                value: p_plus,
                domain: "[0, 1]",
            });
        }
        let p_plus = p_plus.clamp(0.0, 1.0);
        let s: i8 = if uniform(seed_path.seed, seed_path.sample, site) < p_plus { 1 } else { -1 };
        log_prob += if s == 1 { p_plus } else { 1.0 - p_plus }.ln();
        values[site] = s;
        let op = if s == 1 { &ops_plus[site] } else { &ops_minus[site] };
        let next_right = flat.get(pos + 1).is_none_or(|nx| nx.2 > k);
        state.apply_two_site(k, op, trunc, next_right, layer)?;
    }
    let contraction = finish(lat, state)?;
    Ok(AncestralSample {
        config: OutcomeConfig {
            d: lat.d,
            values,
            provenance: Provenance::Ancestral,
            seed_path,
        },
        contraction,
        log_prob,
    })
}
