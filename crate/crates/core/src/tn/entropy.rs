//! Entanglement of the boundary state and its steady-state profile.

use alloc::vec;
use alloc::vec::Vec;

use super::contract::{replica_gates, sweep};
use super::gate::gate_from_couplings;
use super::mps::{BoundaryState, Truncation};
use crate::channel::{Couplings, Replica};
use crate::lattice::build_planar_strip;
#[allow(unused_imports)]
use crate::prelude::*;
use crate::Result;

/// Entropy drift between the last two rows above which a profile is
/// reported as unconverged.
pub const DRIFT_TOL: f64 = 1e-4;

/// `(l, S_l)` at even cuts, `l` sites to the left of the cut.
///
/// With `drop_dangling` the two end sites are projected out first, leaving
/// the `2d`-site chain between them.
pub fn boundary_entropy_profile(bs: &BoundaryState, drop_dangling: bool) -> Result<Vec<(usize, f64)>> {
    let mut st = bs.clone();
    if drop_dangling {
        let p = st.dim;
        let mut first = vec![0.0; p];
        first[p - 1] = 1.0;
        let mut last = vec![0.0; p];
        last[0] = 1.0;
        st.project_end(false, &first)?;
        st.project_end(true, &last)?;
    }
    let s = st.entanglement_entropies()?;
    Ok(s.iter()
        .enumerate()
        .map(|(b, &e)| (b + 1, e))
        .filter(|(l, _)| l % 2 == 0)
        .collect())
}

/// Boundary profile after a deep network of identical gates.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProfile {
    pub profile: Vec<(usize, f64)>,
    /// Largest change of any cut entropy over the last transfer row.
    pub drift: f64,
    pub converged: bool,
    pub chi_used: usize,
    pub discarded_weight: f64,
}

/// Contract `rows` transfer rows of the uniform `n`-replica network on a
/// `d`-column strip and profile the boundary state after the last vertical
/// layer.
pub fn steady_state_profile(d: usize, rows: usize, c: &Couplings, n: Replica, trunc: &Truncation) -> Result<SteadyProfile> {
    let lat = build_planar_strip(d, rows)?;
    let gates = match n {
        Replica::One | Replica::Infinite => lat
            .qubit_sites
            .iter()
            .map(|q| gate_from_couplings(c, 1, q.orientation))
            .collect::<Result<Vec<_>>>()?,
        Replica::Two => replica_gates(&lat, c, n)?,
    };
    let n_layers = lat.contraction_rows.len();
    let mut snapshots: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut failure = None;
    let mut observer = |layer: usize, st: &BoundaryState| {
        // Even cuts pass through the gates of the last two vertical layers.
        if failure.is_none() && (layer + 4 == n_layers || layer + 2 == n_layers) {
            match boundary_entropy_profile(st, true) {
                Ok(p) => snapshots.push(p),
                Err(e) => failure = Some(e),
            }
        }
    };
    let state = sweep(&lat, &gates, trunc, &mut observer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let profile = snapshots.pop().unwrap_or_default();
    let drift = snapshots
        .pop()
        .map(|prev| prev.iter().zip(&profile).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    Ok(SteadyProfile {
        profile,
        drift,
        converged: drift <= DRIFT_TOL,
        chi_used: state.max_bond(),
        discarded_weight: state.cum_discarded_weight,
    })
}
