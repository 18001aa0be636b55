//! Exact transfer-matrix evaluation of the random-bond Ising limit.
//!
//! When the parallel gate weights vanish the network is a random-bond Ising
//! model on the classical spins with bond weights `(1 + s·q·σₐσ_b)/2`,
//! `q = sin 2t`. Summing spins group by group costs `O(2^m · N)` with `m`
//! spins per group, which beats the boundary MPS for the distances used in
//! threshold scans.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::lattice::{PlanarCodeLattice, RoughSides, Spin};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Result, TelecodeError};

/// Largest group size handled, `2^m` transfer states.
pub const MAX_GROUP: usize = 24;

/// Partition functions with the far boundary spin fixed to `±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbimOutcome {
    pub log_z_plus: f64,
    pub log_z_minus: f64,
    pub log_prob: f64,
}

impl RbimOutcome {
    /// Polarization `(κ_x, κ_z)` in the frame of [`crate::tn::Contraction::kappa`].
    pub fn kappa(&self) -> (f64, f64) {
        let m = self.log_z_plus.max(self.log_z_minus);
        let (a, b) = ((self.log_z_plus - m).exp(), (self.log_z_minus - m).exp());
        (0.0, (a - b) / (a + b))
    }
}

#[derive(Debug, Clone, Copy)]
enum End {
    Spin(usize),
    First,
    Last,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    a: End,
    b: End,
    s: f64,
}

/// Spin layout grouped for the transfer sweep.
#[derive(Debug, Clone)]
pub struct RbimLayout {
    groups: usize,
    width: usize,
    n_interior: usize,
    /// Bonds inside group `g` or touching a boundary spin.
    diag: Vec<Vec<(usize, End, End)>>,
    /// Bonds between groups `g − 1` and `g`, by position.
    links: Vec<Vec<(usize, usize)>>,
}

impl RbimLayout {
    pub fn new(lat: &PlanarCodeLattice) -> Result<Self> {
        let pos_of = |sp: &Spin| -> Option<(usize, usize)> {
            match *sp {
                Spin::Interior { row, col } => Some(match lat.rough {
                    RoughSides::LeftRight => (row, col),
                    RoughSides::TopBottom => (col, row),
                }),
                _ => None,
            }
        };
        let coords: Vec<Option<(usize, usize)>> = lat.classical_spins.iter().map(pos_of).collect();
        let groups = coords.iter().flatten().map(|c| c.0 + 1).max().unwrap_or(0);
        let width = coords.iter().flatten().map(|c| c.1 + 1).max().unwrap_or(0);
        if groups == 0 || width > MAX_GROUP {
            return Err(TelecodeError::Unsupported("lattice too wide for the exact transfer sweep"));
        }
        let end = |i: usize| match lat.classical_spins[i] {
            Spin::First => End::First,
            Spin::Last => End::Last,
            Spin::Interior { .. } => End::Spin(coords[i].unwrap().1),
        };
        let mut diag = vec![Vec::new(); groups];
        let mut links = vec![Vec::new(); groups];
        for (q, bond) in lat.bonds.iter().enumerate() {
            match (coords[bond.a], coords[bond.b]) {
                (Some(ca), Some(cb)) if ca.0 == cb.0 => diag[ca.0].push((q, end(bond.a), end(bond.b))),
                (Some(ca), Some(cb)) if ca.1 == cb.1 && ca.0.abs_diff(cb.0) == 1 => {
                    links[ca.0.max(cb.0)].push((q, ca.1));
                }
                (Some(c), None) | (None, Some(c)) => diag[c.0].push((q, end(bond.a), end(bond.b))),
                _ => return Err(TelecodeError::Unsupported("bond outside the grouped transfer structure")),
            }
        }
        Ok(RbimLayout {
            groups,
            width,
            n_interior: coords.iter().flatten().count(),
            diag,
            links,
        })
    }
}

/// Exact `P(s)` and boundary partition functions for outcome `s` at
/// strength `t`, valid when the lattice's parallel weights vanish.
pub fn rbim_exact(lat: &PlanarCodeLattice, t: f64, outcome: &[i8]) -> Result<RbimOutcome> {
    rbim_exact_with(&RbimLayout::new(lat)?, lat, t, outcome)
}

/// As [`rbim_exact`] with a precomputed layout.
pub fn rbim_exact_with(layout: &RbimLayout, lat: &PlanarCodeLattice, t: f64, outcome: &[i8]) -> Result<RbimOutcome> {
    if outcome.len() != lat.n_qubits() {
        return Err(TelecodeError::OutcomeLength {
            expected: lat.n_qubits(),
            got: outcome.len(),
        });
    }
    if let Some(&v) = outcome.iter().find(|&&v| v != 1 && v != -1) {
        return Err(TelecodeError::OutcomeValue(v));
    }
    let q = (2.0 * t).sin();
    let lz_plus = sweep(layout, q, outcome, 1.0);
    let lz_minus = sweep(layout, q, outcome, -1.0);
    let m = lz_plus.max(lz_minus);
    if m == f64::NEG_INFINITY {
        return Err(TelecodeError::ZeroWeight { row: layout.groups });
    }
    let log_sum = m + ((lz_plus - m).exp() + (lz_minus - m).exp()).ln();
    Ok(RbimOutcome {
        log_z_plus: lz_plus,
        log_z_minus: lz_minus,
        log_prob: log_sum - (layout.n_interior as f64 + 1.0) * LN_2,
    })
}

fn sweep(layout: &RbimLayout, q: f64, outcome: &[i8], last: f64) -> f64 {
    let n = 1usize << layout.width;
    let mut v = vec![1.0f64; n];
    let mut log_scale = 0.0;
    let spin = |x: usize, e: End| match e {
        End::Spin(i) => {
            if x >> i & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        End::First => 1.0,
        End::Last => last,
    };
    for g in 0..layout.groups {
        for &(qb, pos) in &layout.links[g] {
            let s = outcome[qb] as f64;
            let (wa, wn) = (0.5 * (1.0 + s * q), 0.5 * (1.0 - s * q));
            let bit = 1usize << pos;
            for x in 0..n {
                if x & bit == 0 {
                    let (v0, v1) = (v[x], v[x | bit]);
                    v[x] = wa * v0 + wn * v1;
                    v[x | bit] = wn * v0 + wa * v1;
                }
            }
        }
        let terms: Vec<Term> = layout.diag[g]
            .iter()
            .map(|&(qb, a, b)| Term {
                a,
                b,
                s: outcome[qb] as f64 * q,
            })
            .collect();
        for (x, val) in v.iter_mut().enumerate() {
            let mut w = 1.0;
            for tm in &terms {
                w *= 0.5 * (1.0 + tm.s * spin(x, tm.a) * spin(x, tm.b));
            }
            *val *= w;
        }
        let mx = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if mx == 0.0 {
            return f64::NEG_INFINITY;
        }
        for x in &mut v {
            *x /= mx;
        }
        log_scale += mx.ln();
    }
    log_scale + v.iter().sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_planar_code, dual_lattice};
    use crate::oracle::{enumerate_outcomes, prepare_logical_bell};
    use core::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn matches_oracle_at_z_and_x_measurements() {
        for d in [2, 3] {
            let lat = build_planar_code(d).unwrap();
            let dual = dual_lattice(&lat);
            let st = prepare_logical_bell(d).unwrap();
            for t in [0.07 * PI, 0.143 * PI, 0.23 * PI] {
                for (theta, l, axis) in [(0.0, &lat, 2), (FRAC_PI_2, &dual, 0)] {
                    let out = enumerate_outcomes(&st, t, theta, 0.0).unwrap();
                    for o in out.iter().step_by(if d == 2 { 1 } else { 3 }) {
                        let r = rbim_exact(l, t, &o.values).unwrap();
                        assert!((r.log_prob.exp() - o.prob).abs() < 1e-12);
                        let (kx, kz) = r.kappa();
                        assert_eq!(kx, 0.0);
                        assert!((kz - o.kappa()[axis]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn collapsed_outcome_is_pure() {
        let lat = build_planar_code(4).unwrap();
        let r = rbim_exact(&lat, PI / 4.0, &vec![1; lat.n_qubits()]).unwrap();
        assert_eq!(r.kappa().1, 1.0);
        assert_eq!(r.log_z_minus, f64::NEG_INFINITY);
    }

    #[test]
    fn impossible_outcome_is_rejected() {
        let lat = build_planar_code(2).unwrap();
        let mut s = vec![1i8; 5];
        s[0] = -1;
        assert!(matches!(rbim_exact(&lat, PI / 4.0, &s), Err(TelecodeError::ZeroWeight { .. })));
    }
}
