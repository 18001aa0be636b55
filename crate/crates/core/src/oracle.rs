//! Dense state-vector reference for small codes.
//!
//! Amplitude index bit `i < N` is code qubit `i` (0 = Z eigenvalue +1) and
//! bit `N` is the reference qubit. Outcomes are enumerated depth first so
//! that every prefix of Kraus factors is applied once.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use faer::{c64, Mat, Side};
use num_complex::Complex64;

use crate::channel::{kraus_matrix, Mat2, Replica};
use crate::lattice::{build_planar_code, PlanarCodeLattice};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Result, TelecodeError};

pub const MAX_ORACLE_D: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalBellState {
    pub d: usize,
    pub n_code: usize,
    pub amplitudes: Vec<Complex64>,
    pub logical_x: Vec<usize>,
    pub logical_z: Vec<usize>,
    pub stars: Vec<Vec<usize>>,
    pub plaquettes: Vec<Vec<usize>>,
}

fn mask(support: &[usize]) -> usize {
    support.iter().fold(0, |m, &q| m | (1 << q))
}

/// Surface-code state maximally entangled with a reference qubit,
/// `(|0_L⟩|0⟩ + |1_L⟩|1⟩)/√2`.
pub fn prepare_logical_bell(d: usize) -> Result<LogicalBellState> {
    if d < 2 {
        return Err(TelecodeError::InvalidDistance(d));
    }
    if d > MAX_ORACLE_D {
        return Err(TelecodeError::OracleTooLarge {
            d,
            max: MAX_ORACLE_D,
        });
    }
    let lat = build_planar_code(d)?;
    prepare_on(&lat)
}

fn prepare_on(lat: &PlanarCodeLattice) -> Result<LogicalBellState> {
    let n = lat.n_qubits();
    let dim = 1usize << n;
    let stars = lat.vertex_stars();
    let plaquettes = lat.plaquettes();
    // |0...0> already satisfies every plaquette and Z_L; project the stars.
    let mut code = vec![0.0f64; dim];
    code[0] = 1.0;
    for s in &stars {
        let m = mask(s);
        let prev = code.clone();
        for (x, c) in code.iter_mut().enumerate() {
            *c = 0.5 * (prev[x] + prev[x ^ m]);
        }
    }
    let norm = code.iter().map(|c| c * c).sum::<f64>().sqrt();
    let xl = mask(&lat.logical_x_support());
    let mut amplitudes = vec![ZERO; 2 * dim];
    for x in 0..dim {
        let c = code[x] / norm * FRAC_1_SQRT_2;
        amplitudes[x] += Complex64::new(c, 0.0);
        amplitudes[dim + (x ^ xl)] += Complex64::new(c, 0.0);
    }
    Ok(LogicalBellState {
        d: lat.d,
        n_code: n,
        amplitudes,
        logical_x: lat.logical_x_support(),
        logical_z: lat.logical_z_support(),
        stars,
        plaquettes,
    })
}

impl LogicalBellState {
    /// `⟨Ψ| X(x_support) Z(z_support) |Ψ⟩` on code qubits.
    pub fn pauli_expectation(&self, x_support: &[usize], z_support: &[usize]) -> Complex64 {
        let (xm, zm) = (mask(x_support), mask(z_support));
        let mut acc = ZERO;
        for (idx, a) in self.amplitudes.iter().enumerate() {
            // Z acts first on |idx>, then X flips bits.
            let sign = if (idx & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.amplitudes[idx ^ xm].conj() * a * sign;
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn reference_density(&self) -> Mat2 {
        reference_density(&self.amplitudes, self.n_code, 1.0)
    }

    /// The same state with a Hadamard on every code qubit.
    pub fn hadamard_all(&self) -> LogicalBellState {
        let mut v = self.amplitudes.clone();
        for q in 0..self.n_code {
            apply_single(&mut v, q, &hadamard());
        }
        LogicalBellState {
            amplitudes: v,
            ..self.clone()
        }
    }
}

fn hadamard() -> Mat2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn apply_single(v: &mut [Complex64], q: usize, m: &Mat2) {
    let bit = 1usize << q;
    for x in 0..v.len() {
        if x & bit == 0 {
            let (a, b) = (v[x], v[x | bit]);
            v[x] = m[0][0] * a + m[0][1] * b;
            v[x | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn reference_density(v: &[Complex64], n_code: usize, prob: f64) -> Mat2 {
    let dim = 1usize << n_code;
    let mut rho = [[ZERO; 2]; 2];
    for x in 0..dim {
        let (a0, a1) = (v[x], v[dim + x]);
        rho[0][0] += a0 * a0.conj();
        rho[0][1] += a0 * a1.conj();
        rho[1][0] += a1 * a0.conj();
        rho[1][1] += a1 * a1.conj();
    }
    for r in &mut rho {
        for x in r.iter_mut() {
            *x /= prob;
        }
    }
    rho
}

/// One outcome of the enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub values: Vec<i8>,
    pub prob: f64,
    /// Reference density matrix, `I/2` for zero-probability outcomes.
    pub rho_r: Mat2,
}

impl OutcomeRecord {
    /// Bloch vector `(κ_x, κ_y, κ_z)` of the reference qubit.
    pub fn kappa(&self) -> [f64; 3] {
        let r = &self.rho_r;
        [2.0 * r[0][1].re, -2.0 * r[0][1].im, (r[0][0] - r[1][1]).re]
    }

    /// Eigenvalues of `ρ_R`, descending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        herm2_eigenvalues(&self.rho_r)
    }

    pub fn von_neumann(&self) -> f64 {
        self.eigenvalues().iter().map(|&l| xlnx(l)).sum::<f64>() * -1.0
    }

    pub fn purity(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l * l).sum()
    }
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn herm2_eigenvalues(m: &Mat2) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let off = m[0][1].norm_sqr();
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + off).sqrt();
    [mean + rad, mean - rad]
}

/// Visit every outcome with its unnormalized post-measurement vector.
pub fn for_each_outcome(
    state: &LogicalBellState,
    t: f64,
    theta: f64,
    phi: f64,
    mut visit: impl FnMut(&[i8], &[Complex64]),
) -> Result<()> {
    let n = state.n_code;
    let kraus = [kraus_matrix(t, theta, phi, 1)?, kraus_matrix(t, theta, phi, -1)?];
    let mut stack: Vec<Vec<Complex64>> = vec![state.amplitudes.clone(); n + 1];
    let mut values = vec![1i8; n];
    fn rec(
        q: usize,
        n: usize,
        kraus: &[Mat2; 2],
        stack: &mut Vec<Vec<Complex64>>,
        values: &mut Vec<i8>,
        visit: &mut dyn FnMut(&[i8], &[Complex64]),
    ) {
        if q == n {
            visit(values, &stack[n]);
            return;
        }
        for (k, s) in [1i8, -1].into_iter().enumerate() {
            let (head, tail) = stack.split_at_mut(q + 1);
            tail[0].copy_from_slice(&head[q]);
            apply_single(&mut tail[0], q, &kraus[k]);
            values[q] = s;
            rec(q + 1, n, kraus, stack, values, visit);
        }
    }
    rec(0, n, &kraus, &mut stack, &mut values, &mut visit);
    Ok(())
}

/// All `2^N` outcomes with Born probabilities and reference states.
pub fn enumerate_outcomes(
    state: &LogicalBellState,
    t: f64,
    theta: f64,
    phi: f64,
) -> Result<Vec<OutcomeRecord>> {
    let mut out = Vec::with_capacity(1 << state.n_code);
    let n = state.n_code;
    for_each_outcome(state, t, theta, phi, |values, v| {
        let prob: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let rho_r = if prob > 0.0 {
            reference_density(v, n, prob)
        } else {
            let h = Complex64::new(0.5, 0.0);
            [[h, ZERO], [ZERO, h]]
        };
        out.push(OutcomeRecord {
            values: values.to_vec(),
            prob,
            rho_r,
        });
    })?;
    Ok(out)
}

/// Exact coherent information in nats.
///
/// `n = 1` averages the reference entropy over Born outcomes, `n = 2` is the
/// replica-averaged purity and `n = ∞` is the Rényi-∞ entropy of the
/// all-plus outcome.
pub fn coherent_info_exact(outcomes: &[OutcomeRecord], n: Replica) -> f64 {
    match n {
        Replica::One => outcomes.iter().map(|o| o.prob * o.von_neumann()).sum(),
        Replica::Two => {
            let num: f64 = outcomes.iter().map(|o| o.prob * o.prob * o.purity()).sum();
            let den: f64 = outcomes.iter().map(|o| o.prob * o.prob).sum();
            -(num / den).ln()
        }
        Replica::Infinite => {
            let o = all_plus(outcomes);
            -o.eigenvalues()[0].ln()
        }
    }
}

fn all_plus(outcomes: &[OutcomeRecord]) -> &OutcomeRecord {
    outcomes
        .iter()
        .find(|o| o.values.iter().all(|&s| s == 1))
        .expect("enumeration contains the all-plus outcome")
}

/// Von Neumann entropy of the all-plus outcome.
pub fn postselected_von_neumann(outcomes: &[OutcomeRecord]) -> f64 {
    all_plus(outcomes).von_neumann()
}

/// Shannon information Alice's record carries about a Z-basis reference
/// measurement, `Σ_{s,k} P(s,k) ln(P(s)/P(s,k))`.
pub fn alice_shannon_exact(outcomes: &[OutcomeRecord]) -> f64 {
    outcomes
        .iter()
        .filter(|o| o.prob > 0.0)
        .map(|o| {
            let p0 = o.rho_r[0][0].re.clamp(0.0, 1.0);
            let p1 = 1.0 - p0;
            o.prob * -(xlnx(p0) + xlnx(p1))
        })
        .sum()
}

/// Best Bell-state fidelity reachable by a unitary on the reference side,
/// from the Schmidt coefficients of the outcome state.
pub fn optimal_bell_fidelity(o: &OutcomeRecord) -> f64 {
    let [l1, l2] = o.eigenvalues();
    let s = l1.max(0.0).sqrt() + l2.max(0.0).sqrt();
    0.5 * s * s
}

/// Coherent information of the outcome-averaged channel, `S(B) − S(RB)`.
///
/// Builds the full `2^{N+1}` density matrix, so only `d = 2` is allowed.
pub fn passive_coherent_info_exact(state: &LogicalBellState, t: f64, theta: f64, phi: f64) -> Result<f64> {
    if state.d > 2 {
        return Err(TelecodeError::OracleTooLarge { d: state.d, max: 2 });
    }
    let n = state.n_code;
    let dim = 2usize << n;
    let mut rho = Mat::<c64>::zeros(dim, dim);
    for_each_outcome(state, t, theta, phi, |_, v| {
        for i in 0..dim {
            if v[i] == ZERO {
                continue;
            }
            for j in 0..dim {
                rho[(i, j)] += to_c64(v[i] * v[j].conj());
            }
        }
    })?;
    let half = dim / 2;
    let mut rho_b = Mat::<c64>::zeros(half, half);
    for i in 0..half {
        for j in 0..half {
            rho_b[(i, j)] = rho[(i, j)] + rho[(half + i, half + j)];
        }
    }
    Ok(entropy_of(&rho_b)? - entropy_of(&rho)?)
}

fn to_c64(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

fn entropy_of(m: &Mat<c64>) -> Result<f64> {
    let ev = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| TelecodeError::LinearAlgebra("eigendecomposition did not converge"))?;
    Ok(-ev.iter().map(|&l| xlnx(l.max(0.0))).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, LN_2, PI};

    #[test]
    fn refuses_large_codes() {
        assert_eq!(
            prepare_logical_bell(4),
            Err(TelecodeError::OracleTooLarge { d: 4, max: 3 })
        );
    }

    #[test]
    fn state_invariants() {
        for d in [2, 3] {
            let s = prepare_logical_bell(d).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            for st in &s.stars {
                assert!((s.pauli_expectation(st, &[]) - 1.0).norm() < 1e-12);
            }
            for p in &s.plaquettes {
                assert!((s.pauli_expectation(&[], p) - 1.0).norm() < 1e-12);
            }
            let rho = s.reference_density();
            assert!((rho[0][0].re - 0.5).abs() < 1e-12);
            assert!(rho[0][1].norm() < 1e-12);
        }
        let s = prepare_logical_bell(2).unwrap();
        assert_eq!(s.stars.len() + s.plaquettes.len(), 4);
    }

    #[test]
    fn t_zero_is_uniform_and_maximally_mixed() {
        let s = prepare_logical_bell(2).unwrap();
        let out = enumerate_outcomes(&s, 0.0, 0.3, 0.0).unwrap();
        assert_eq!(out.len(), 32);
        for o in &out {
            assert!((o.prob - 1.0 / 32.0).abs() < 1e-14);
            assert!(o.kappa().iter().all(|k| k.abs() < 1e-12));
        }
        for n in [Replica::One, Replica::Two, Replica::Infinite] {
            assert!((coherent_info_exact(&out, n) - LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn full_collapse_purifies_reference() {
        let s = prepare_logical_bell(2).unwrap();
        let out = enumerate_outcomes(&s, FRAC_PI_4, 0.0, 0.0).unwrap();
        let total: f64 = out.iter().map(|o| o.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in out.iter().filter(|o| o.prob > 1e-12) {
            assert!(o.eigenvalues()[1].abs() < 1e-12);
        }
        assert!(coherent_info_exact(&out, Replica::One).abs() < 1e-12);
    }

    #[test]
    fn density_matrices_are_valid() {
        let s = prepare_logical_bell(2).unwrap();
        let out = enumerate_outcomes(&s, 0.13 * PI, 0.37, 0.8).unwrap();
        for o in &out {
            let r = &o.rho_r;
            assert!(((r[0][0] + r[1][1]).re - 1.0).abs() < 1e-12);
            assert!((r[0][1] - r[1][0].conj()).norm() < 1e-14);
            assert!(o.eigenvalues()[1] > -1e-12);
            let k = o.kappa();
            let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            assert!((o.eigenvalues()[0] - 0.5 * (1.0 + norm)).abs() < 1e-10);
        }
    }

    #[test]
    fn passive_oracle_endpoints() {
        let s = prepare_logical_bell(2).unwrap();
        let ic = passive_coherent_info_exact(&s, 0.0, 0.0, 0.0).unwrap();
        assert!((ic - LN_2).abs() < 1e-10);
        assert!(passive_coherent_info_exact(&prepare_logical_bell(3).unwrap(), 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn golden_values_d2() {
        let s = prepare_logical_bell(2).unwrap();
        let out = enumerate_outcomes(&s, 0.1 * PI, 0.0, 0.0).unwrap();
        assert!((coherent_info_exact(&out, Replica::One) - 5.688_971_905_079_047e-1).abs() < 1e-12);
        assert!((coherent_info_exact(&out, Replica::Two) - 4.362_761_450_468_531e-1).abs() < 1e-12);
    }

    #[test]
    fn self_dual_angle_protects_information() {
        let s = prepare_logical_bell(2).unwrap();
        let at = |theta| coherent_info_exact(&enumerate_outcomes(&s, 0.15 * PI, theta, 0.0).unwrap(), Replica::One);
        assert!(at(FRAC_PI_4) > at(0.0));
    }

    #[test]
    fn hadamard_duality() {
        for d in [2, 3] {
            let s = prepare_logical_bell(d).unwrap();
            let h = s.hadamard_all();
            for (t, theta) in [(0.08 * PI, 0.2), (0.19 * PI, 1.0)] {
                let a = coherent_info_exact(&enumerate_outcomes(&s, t, theta, 0.0).unwrap(), Replica::One);
                let b = coherent_info_exact(&enumerate_outcomes(&h, t, core::f64::consts::FRAC_PI_2 - theta, 0.0).unwrap(), Replica::One);
                assert!((a - b).abs() < 1e-10);
                let c = coherent_info_exact(&enumerate_outcomes(&s, t, core::f64::consts::FRAC_PI_2 - theta, 0.0).unwrap(), Replica::One);
                assert!((a - c).abs() < 1e-10, "d={d}: {a} vs {c}");
            }
        }
    }

    #[test]
    fn monotone_in_t_at_theta_zero() {
        let s = prepare_logical_bell(2).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let ic = coherent_info_exact(&enumerate_outcomes(&s, i as f64 * PI / 40.0, 0.0, 0.0).unwrap(), Replica::One);
            assert!(ic <= prev + 1e-9);
            prev = ic;
        }
    }

    #[test]
    fn born_normalization_on_random_points() {
        let s = prepare_logical_bell(2).unwrap();
        let mut x = 0.123_f64;
        for _ in 0..20 {
            x = (x * 7.3 + 0.41).fract();
            let (t, theta, phi) = (x * FRAC_PI_4, (x * 3.1).fract() * core::f64::consts::FRAC_PI_2, (x * 5.7).fract() * 2.0 * PI);
            let total: f64 = enumerate_outcomes(&s, t, theta, phi).unwrap().iter().map(|o| o.prob).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
