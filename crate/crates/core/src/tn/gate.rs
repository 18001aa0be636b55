//! Vertex-gate tensors of the random six-vertex model.
//!
//! Chain sites carry Z-basis values 0 (up) and 1 (down). A doubled site for
//! the two-replica network packs `(copy1, copy2)` as `2·a1 + a2`.
//!
//! Weights are normalized by cosh J so the antiparallel-diagonal entry is 1;
//! the factor is outcome independent and never needed.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{Couplings, Replica};
use crate::lattice::Orientation;
use crate::{Result, TelecodeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOutcome {
    Plus,
    Minus,
    Summed,
}

impl GateOutcome {
    pub fn from_sign(s: i8) -> Result<Self> {
        match s {
            1 => Ok(GateOutcome::Plus),
            -1 => Ok(GateOutcome::Minus),
            _ => Err(TelecodeError::OutcomeValue(s)),
        }
    }
}

/// Four-index weight tensor `w[in1, in2, out1, out2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexGate {
    /// Local dimension of each leg.
    pub dim: usize,
    pub weights: Vec<f64>,
    pub orientation: Orientation,
    pub outcome: GateOutcome,
    pub replica: Replica,
}

impl VertexGate {
    fn zeros(dim: usize, orientation: Orientation, outcome: GateOutcome, replica: Replica) -> Self {
        VertexGate {
            dim,
            weights: vec![0.0; dim.pow(4)],
            orientation,
            outcome,
            replica,
        }
    }

    fn idx(&self, i1: usize, i2: usize, o1: usize, o2: usize) -> usize {
        let p = self.dim;
        ((i1 * p + i2) * p + o1) * p + o2
    }

    pub fn get(&self, i1: usize, i2: usize, o1: usize, o2: usize) -> f64 {
        self.weights[self.idx(i1, i2, o1, o2)]
    }

    fn set(&mut self, i1: usize, i2: usize, o1: usize, o2: usize, w: f64) {
        let k = self.idx(i1, i2, o1, o2);
        self.weights[k] = w;
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    /// Operator matrix `m[out, in]` on the pair space, row major, with pair
    /// index `a·dim + b`.
    pub fn operator(&self) -> Vec<f64> {
        let p = self.dim;
        let p2 = p * p;
        let mut m = vec![0.0; p2 * p2];
        for i1 in 0..p {
            for i2 in 0..p {
                for o1 in 0..p {
                    for o2 in 0..p {
                        m[(o1 * p + o2) * p2 + i1 * p + i2] = self.get(i1, i2, o1, o2);
                    }
                }
            }
        }
        m
    }

    /// Rotate the single-replica tensor by 90° in the drawing plane,
    /// `w'[i1, i2, o1, o2] = w[¬i2, o2, i1, ¬o1]`.
    pub fn rotate90(&self) -> Result<VertexGate> {
        if self.dim != 2 {
            return Err(TelecodeError::GateDimension {
                expected: 2,
                got: self.dim,
            });
        }
        let mut out = VertexGate::zeros(2, self.orientation.swapped(), self.outcome, self.replica);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for o1 in 0..2 {
                    for o2 in 0..2 {
                        out.set(i1, i2, o1, o2, self.get(1 - i2, o2, i1, 1 - o1));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &VertexGate) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Single-replica gate of one outcome.
pub fn gate_from_couplings(c: &Couplings, s: i8, orientation: Orientation) -> Result<VertexGate> {
    let outcome = GateOutcome::from_sign(s)?;
    let s = f64::from(s);
    let (flip, parallel) = match orientation {
        Orientation::Horizontal => (c.tanh_j, c.parallel),
        Orientation::Vertical => (c.parallel, c.tanh_j),
    };
    let mut g = VertexGate::zeros(2, orientation, outcome, Replica::One);
    for a in 0..2 {
        g.set(a, 1 - a, a, 1 - a, 1.0);
        g.set(a, 1 - a, 1 - a, a, s * flip);
        g.set(a, a, a, a, s * parallel);
    }
    Ok(g)
}

/// Outcome-summed single-replica gate, the marginal over one site.
pub fn summed_gate(c: &Couplings, orientation: Orientation) -> VertexGate {
    let plus = gate_from_couplings(c, 1, orientation).expect("valid sign");
    let minus = gate_from_couplings(c, -1, orientation).expect("valid sign");
    let mut g = plus.clone();
    g.outcome = GateOutcome::Summed;
    for (w, m) in g.weights.iter_mut().zip(&minus.weights) {
        *w += m;
    }
    g
}

/// Gate of the `n`-replica outcome average.
pub fn replica_gate(c: &Couplings, n: Replica, orientation: Orientation) -> Result<VertexGate> {
    match n {
        Replica::One => Err(TelecodeError::Unsupported(
            "single-replica gates come from gate_from_couplings",
        )),
        Replica::Infinite => {
            let mut g = gate_from_couplings(c, 1, orientation)?;
            g.replica = Replica::Infinite;
            Ok(g)
        }
        Replica::Two => {
            let mut out = VertexGate::zeros(4, orientation, GateOutcome::Summed, Replica::Two);
            for s in [1i8, -1] {
                let g = gate_from_couplings(c, s, orientation)?;
                for (i1, i2, o1, o2) in quad(4) {
                    let w = g.get(i1 >> 1, i2 >> 1, o1 >> 1, o2 >> 1)
                        * g.get(i1 & 1, i2 & 1, o1 & 1, o2 & 1);
                    let k = out.idx(i1, i2, o1, o2);
                    out.weights[k] += w;
                }
            }
            Ok(out)
        }
    }
}

fn quad(p: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..p.pow(4)).map(move |k| (k / (p * p * p), (k / (p * p)) % p, (k / p) % p, k % p))
}
