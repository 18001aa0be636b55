//! Real matrix-product states for the transfer-slice boundary.
//!
//! Site tensors are stored row major with index order `(left, phys, right)`,
//! so the left-grouped `(l·p) × r` and right-grouped `l × (p·r)` matrices
//! are both plain views of the same buffer.

use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Result, TelecodeError};

/// Truncation controls for two-site updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub chi_max: usize,
    /// Discarded fraction of the squared singular values allowed per cut.
    pub cutoff: f64,
    /// Fail instead of capping when the cutoff needs more than `chi_max`.
    pub strict: bool,
}

impl Truncation {
    pub fn new(chi_max: usize, cutoff: f64) -> Self {
        Truncation {
            chi_max,
            cutoff,
            strict: false,
        }
    }

    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        Truncation {
            chi_max: usize::MAX,
            cutoff: 0.0,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTensor {
    pub l: usize,
    pub r: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    fn left_grouped(&self, p: usize) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.l * p, self.r)
    }

    fn right_grouped(&self, p: usize) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.l, p * self.r)
    }
}

/// Boundary state of a partially contracted network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub dim: usize,
    pub tensors: Vec<SiteTensor>,
    pub center: usize,
    /// Log of the norm removed by renormalization, so that the unnormalized
    /// state is `exp(log_norm)` times the stored one.
    pub log_norm: f64,
    pub cum_discarded_weight: f64,
    /// Largest single-cut discarded fraction seen so far.
    pub max_discarded_weight: f64,
    pub canonical: bool,
}

struct Svd {
    u: Mat<f64>,
    s: Vec<f64>,
    v: Mat<f64>,
}

fn all_finite(m: &Mat<f64>) -> bool {
    (0..m.ncols()).all(|j| m.col(j).iter().all(|x| x.is_finite()))
}

/// Thin SVD from the eigenvectors of the smaller Gram matrix. Singular
/// values below `√ε · s_max` get zero partner vectors.
fn gram_svd(m: MatRef<'_, f64>) -> Option<Svd> {
    let wide = m.nrows() <= m.ncols();
    let a = if wide { m.transpose() } else { m };
    let mut g = Mat::<f64>::zeros(a.ncols(), a.ncols());
    matmul(g.as_mut(), Accum::Replace, a.transpose(), a, 1.0, Par::Seq);
    let eig = g.self_adjoint_eigen(faer::Side::Lower).ok()?;
    let k = a.ncols();
    let s: Vec<f64> = (0..k).rev().map(|i| eig.S().column_vector()[i].max(0.0).sqrt()).collect();
    let floor = s.first().copied().unwrap_or(0.0) * f64::EPSILON.sqrt();
    let right = Mat::from_fn(k, k, |i, j| eig.U()[(i, k - 1 - j)]);
    let mut left = Mat::<f64>::zeros(a.nrows(), k);
    matmul(left.as_mut(), Accum::Replace, a, right.as_ref(), 1.0, Par::Seq);
    for (j, &sj) in s.iter().enumerate() {
        let scale = if sj > floor { 1.0 / sj } else { 0.0 };
        left.col_mut(j).iter_mut().for_each(|x| *x *= scale);
    }
    let (u, v) = if wide { (right, left) } else { (left, right) };
    Some(Svd { u, s, v })
}

/// Thin SVD `m = U diag(s) Vᵀ`. The backend occasionally returns NaN without
/// an error on strongly degenerate spectra; the transposed problem and then
/// the Gram eigenproblem are tried before giving up.
fn svd(m: MatRef<'_, f64>) -> Result<Svd> {
    let unpack = |d: faer::linalg::solvers::Svd<f64>, transposed: bool| {
        let sv = d.S().column_vector();
        let s: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
        let (u, v) = if transposed { (d.V().to_owned(), d.U().to_owned()) } else { (d.U().to_owned(), d.V().to_owned()) };
        Svd { u, s, v }
    };
    let ok = |d: &Svd| d.s.iter().all(|x| x.is_finite()) && all_finite(&d.u) && all_finite(&d.v);
    if let Ok(d) = m.thin_svd() {
        let d = unpack(d, false);
        if ok(&d) {
            return Ok(d);
        }
    }
    if let Ok(d) = m.transpose().thin_svd() {
        let d = unpack(d, true);
        if ok(&d) {
            return Ok(d);
        }
    }
    gram_svd(m).filter(ok).ok_or(TelecodeError::LinearAlgebra("svd did not converge"))
}

fn to_row_major(m: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn mat_mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows() * b.ncols()];
    matmul(
        MatMut::from_row_major_slice_mut(&mut out, a.nrows(), b.ncols()),
        Accum::Replace,
        a,
        b,
        1.0,
        Par::Seq,
    );
    out
}

impl BoundaryState {
    /// Product of identical two-site states on pairs `(2j, 2j + 1)`.
    ///
    /// `pair[a·dim + b]` is the amplitude of the pair in state `(a, b)`.
    pub fn paired(dim: usize, n_pairs: usize, pair: &[f64]) -> Result<Self> {
        let pairs: Vec<&[f64]> = (0..n_pairs).map(|_| pair).collect();
        Self::from_pairs(dim, &pairs)
    }

    /// State with the given site tensors, not canonicalized or normalized.
    pub fn from_tensors(dim: usize, tensors: Vec<SiteTensor>) -> Self {
        BoundaryState {
            dim,
            tensors,
            center: 0,
            log_norm: 0.0,
            cum_discarded_weight: 0.0,
            max_discarded_weight: 0.0,
            canonical: false,
        }
    }

    /// Product of arbitrary two-site states on consecutive pairs.
    pub fn from_pairs(dim: usize, pairs: &[&[f64]]) -> Result<Self> {
        let p = dim;
        let mut tensors = Vec::with_capacity(2 * pairs.len());
        for pair in pairs {
            if pair.len() != p * p {
                return Err(TelecodeError::GateDimension {
                    expected: p * p,
                    got: pair.len(),
                });
            }
            let mut id = vec![0.0; p * p];
            for a in 0..p {
                id[a * p + a] = 1.0;
            }
            tensors.push(SiteTensor { l: 1, r: p, data: id });
            tensors.push(SiteTensor {
                l: p,
                r: 1,
                data: pair.to_vec(),
            });
        }
        let mut s = BoundaryState {
            dim,
            tensors,
            center: 0,
            log_norm: 0.0,
            cum_discarded_weight: 0.0,
            max_discarded_weight: 0.0,
            canonical: false,
        };
        s.canonicalize(0, 0)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.tensors.iter().map(|t| t.r.max(t.l)).max().unwrap_or(1)
    }

    /// Bring the state into mixed canonical form around `center` and
    /// normalize it.
    pub fn canonicalize(&mut self, center: usize, row: usize) -> Result<()> {
        for k in 0..center {
            self.qr_right(k);
        }
        for k in (center + 1..self.len()).rev() {
            self.lq_left(k);
        }
        self.center = center;
        self.canonical = true;
        self.normalize_center(row)
    }

    fn normalize_center(&mut self, row: usize) -> Result<()> {
        let t = &mut self.tensors[self.center];
        let norm = t.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(TelecodeError::NonFinite {
                row,
                context: "normalization",
            });
        }
        if norm == 0.0 {
            return Err(TelecodeError::ZeroWeight { row });
        }
        for x in &mut t.data {
            *x /= norm;
        }
        self.log_norm += norm.ln();
        Ok(())
    }

    /// Squared norm of the stored state; 1 in canonical form.
    pub fn norm_sqr(&self) -> f64 {
        self.overlap_with(self)
    }

    fn qr_right(&mut self, k: usize) {
        let p = self.dim;
        let a = &self.tensors[k];
        let qr = a.left_grouped(p).qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R();
        let m = q.ncols();
        let new_a = SiteTensor {
            l: a.l,
            r: m,
            data: to_row_major(q.as_ref()),
        };
        let b = &self.tensors[k + 1];
        let new_b = SiteTensor {
            l: m,
            r: b.r,
            data: mat_mul(r, b.right_grouped(p)),
        };
        self.tensors[k] = new_a;
        self.tensors[k + 1] = new_b;
    }

    fn lq_left(&mut self, k: usize) {
        let p = self.dim;
        let a = &self.tensors[k];
        let qr = a.right_grouped(p).transpose().qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R();
        let m = q.ncols();
        let new_a = SiteTensor {
            l: m,
            r: a.r,
            data: to_row_major(q.transpose()),
        };
        let b = &self.tensors[k - 1];
        let new_b = SiteTensor {
            l: b.l,
            r: m,
            data: mat_mul(b.left_grouped(p), r.transpose()),
        };
        self.tensors[k] = new_a;
        self.tensors[k - 1] = new_b;
    }

    /// Move the orthogonality center without changing the state.
    pub fn move_center(&mut self, to: usize) {
        while self.center < to {
            self.qr_right(self.center);
            self.center += 1;
        }
        while self.center > to {
            self.lq_left(self.center);
            self.center -= 1;
        }
    }

    /// Apply the pair operator `op[out·p² + in]` to sites `(k, k + 1)` and
    /// split with truncation. The center ends on `k + 1` when `center_right`.
    ///
    /// Returns the discarded weight of this cut.
    pub fn apply_two_site(
        &mut self,
        k: usize,
        op: &[f64],
        trunc: &Truncation,
        center_right: bool,
        row: usize,
    ) -> Result<f64> {
        let p = self.dim;
        let p2 = p * p;
        if op.len() != p2 * p2 {
            return Err(TelecodeError::GateDimension {
                expected: p2 * p2,
                got: op.len(),
            });
        }
        if self.center < k {
            self.move_center(k);
        } else if self.center > k + 1 {
            self.move_center(k + 1);
        }
        let (chi_l, chi_r) = (self.tensors[k].l, self.tensors[k + 1].r);
        let theta = mat_mul(
            self.tensors[k].left_grouped(p),
            self.tensors[k + 1].right_grouped(p),
        );
        // theta is laid out as [l][i1][i2][r].
        let mut out = vec![0.0; theta.len()];
        let block = |l: usize, a: usize, b: usize| ((l * p + a) * p + b) * chi_r;
        for (o, row_op) in op.chunks_exact(p2).enumerate() {
            let (o1, o2) = (o / p, o % p);
            for (i, &w) in row_op.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (i1, i2) = (i / p, i % p);
                for l in 0..chi_l {
                    let src = &theta[block(l, i1, i2)..block(l, i1, i2) + chi_r];
                    let dst = &mut out[block(l, o1, o2)..block(l, o1, o2) + chi_r];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        let m = MatRef::from_row_major_slice(&out, chi_l * p, p * chi_r);
        let svd = svd(m)?;
        let s = &svd.s;
        let n_sv = s.len();
        let sq: Vec<f64> = (0..n_sv).map(|i| s[i] * s[i]).collect();
        let total: f64 = sq.iter().sum();
        if !total.is_finite() {
            return Err(TelecodeError::NonFinite {
                row,
                context: "two-site update",
            });
        }
        if total == 0.0 {
            return Err(TelecodeError::ZeroWeight { row });
        }
        // Smallest rank whose discarded tail stays within the cutoff.
        let mut keep = n_sv;
        let mut tail = 0.0;
        while keep > 1 && tail + sq[keep - 1] <= trunc.cutoff * total {
            tail += sq[keep - 1];
            keep -= 1;
        }
        if keep > trunc.chi_max {
            let forced: f64 = sq[trunc.chi_max..].iter().sum();
            if trunc.strict {
                return Err(TelecodeError::BondOverflow {
                    row,
                    bond: k,
                    needed: keep,
                    chi_max: trunc.chi_max,
                    discarded: forced / total,
                });
            }
            keep = trunc.chi_max;
            tail = forced;
        }
        let discarded = tail / total;
        let kept_norm = (total - tail).max(0.0).sqrt();
        if kept_norm == 0.0 {
            return Err(TelecodeError::ZeroWeight { row });
        }
        self.log_norm += kept_norm.ln();
        self.cum_discarded_weight += discarded;
        self.max_discarded_weight = self.max_discarded_weight.max(discarded);

        let (u, v) = (&svd.u, &svd.v);
        let mut a = vec![0.0; chi_l * p * keep];
        let mut b = vec![0.0; keep * p * chi_r];
        for row_u in 0..chi_l * p {
            for j in 0..keep {
                let sj = if center_right { 1.0 } else { s[j] / kept_norm };
                a[row_u * keep + j] = u[(row_u, j)] * sj;
            }
        }
        for j in 0..keep {
            let sj = if center_right { s[j] / kept_norm } else { 1.0 };
            for col in 0..p * chi_r {
                b[j * p * chi_r + col] = v[(col, j)] * sj;
            }
        }
        self.tensors[k] = SiteTensor {
            l: chi_l,
            r: keep,
            data: a,
        };
        self.tensors[k + 1] = SiteTensor {
            l: keep,
            r: chi_r,
            data: b,
        };
        self.center = if center_right { k + 1 } else { k };
        Ok(discarded)
    }

    /// `⟨bra|self⟩` for a bra given as another MPS of the same length and
    /// local dimension (normalization of neither is changed).
    pub fn overlap_with(&self, bra: &BoundaryState) -> f64 {
        let p = self.dim;
        let mut env = vec![1.0];
        let (mut dl, mut cl) = (1usize, 1usize);
        for (b, a) in bra.tensors.iter().zip(&self.tensors) {
            // t[d][σ][c'] = Σ_c env[d][c] a[c][σ][c']
            let t = mat_mul(
                MatRef::from_row_major_slice(&env, dl, cl),
                a.right_grouped(p),
            );
            // env'[d'][c'] = Σ_{d,σ} b[d][σ][d'] t[d][σ][c']
            let next = mat_mul(
                b.left_grouped(p).transpose(),
                MatRef::from_row_major_slice(&t, dl * p, a.r),
            );
            env = next;
            dl = b.r;
            cl = a.r;
        }
        env[0]
    }

    /// Overlaps `⟨bra| op_j |self⟩` for pair operators acting on `(k, k + 1)`.
    pub fn windowed_overlaps(&self, bra: &BoundaryState, k: usize, ops: &[&[f64]]) -> Vec<f64> {
        let p = self.dim;
        let p2 = p * p;
        let n = self.len();
        // Left environment over sites < k.
        let mut left = vec![1.0];
        let (mut dl, mut cl) = (1usize, 1usize);
        for s in 0..k {
            let (b, a) = (&bra.tensors[s], &self.tensors[s]);
            let t = mat_mul(MatRef::from_row_major_slice(&left, dl, cl), a.right_grouped(p));
            left = mat_mul(
                b.left_grouped(p).transpose(),
                MatRef::from_row_major_slice(&t, dl * p, a.r),
            );
            dl = b.r;
            cl = a.r;
        }
        // Right environment over sites > k + 1, stored as [c][d].
        let mut right = vec![1.0];
        let (mut dr, mut cr) = (1usize, 1usize);
        for s in (k + 2..n).rev() {
            let (b, a) = (&bra.tensors[s], &self.tensors[s]);
            // t[c][σ][d] = Σ_{c'} a[c][σ][c'] right[c'][d]
            let t = mat_mul(a.left_grouped(p), MatRef::from_row_major_slice(&right, cr, dr));
            // right'[c][d'] = Σ_{σ,d} t[c][σ][d] b[d'][σ][d]
            right = mat_mul(
                MatRef::from_row_major_slice(&t, a.l, p * dr),
                b.right_grouped(p).transpose(),
            );
            dr = b.l;
            cr = a.l;
        }
        // Ket block X[d][i1][i2][d'] with both environments attached.
        let (a1, a2) = (&self.tensors[k], &self.tensors[k + 1]);
        let la = mat_mul(MatRef::from_row_major_slice(&left, dl, cl), a1.right_grouped(p));
        let laa = mat_mul(
            MatRef::from_row_major_slice(&la, dl * p, a1.r),
            a2.right_grouped(p),
        );
        let x = mat_mul(
            MatRef::from_row_major_slice(&laa, dl * p2, a2.r),
            MatRef::from_row_major_slice(&right, cr, dr),
        );
        // Bra block Y[d][o1][o2][d'].
        let (b1, b2) = (&bra.tensors[k], &bra.tensors[k + 1]);
        let y = mat_mul(b1.left_grouped(p), b2.right_grouped(p));
        let (dy0, dy1) = (b1.l, b2.r);
        debug_assert_eq!((dy0, dy1), (dl, dr));
        // Reduced pair matrix g[o][i] = Σ_{d,d'} Y[d][o][d'] X[d][i][d'].
        let mut g = vec![0.0; p2 * p2];
        for d in 0..dl {
            for o in 0..p2 {
                for e in 0..dr {
                    let yv = y[(d * p2 + o) * dr + e];
                    if yv == 0.0 {
                        continue;
                    }
                    for i in 0..p2 {
                        g[o * p2 + i] += yv * x[(d * p2 + i) * dr + e];
                    }
                }
            }
        }
        ops.iter()
            .map(|op| op.iter().zip(&g).map(|(w, gv)| w * gv).sum())
            .collect()
    }

    /// Schmidt spectra (normalized squares) at every internal bond.
    pub fn schmidt_spectra(&self) -> Result<Vec<Vec<f64>>> {
        let p = self.dim;
        let mut st = self.clone();
        st.move_center(0);
        let mut out = Vec::with_capacity(st.len() - 1);
        for k in 0..st.len() - 1 {
            let a = &st.tensors[k];
            let svd = svd(a.left_grouped(p))?;
            let s = &svd.s;
            let sq: Vec<f64> = s.iter().map(|x| x * x).collect();
            let total: f64 = sq.iter().sum();
            out.push(sq.iter().map(|x| x / total).collect());
            let m = s.len();
            let (u, v) = (svd.u.as_ref(), &svd.v);
            let mut sv = vec![0.0; m * a.r];
            for i in 0..m {
                for j in 0..a.r {
                    sv[i * a.r + j] = s[i] * v[(j, i)];
                }
            }
            let new_a = SiteTensor {
                l: a.l,
                r: m,
                data: to_row_major(u),
            };
            let b = &st.tensors[k + 1];
            let new_b = SiteTensor {
                l: m,
                r: b.r,
                data: mat_mul(MatRef::from_row_major_slice(&sv, m, a.r), b.right_grouped(p)),
            };
            st.tensors[k] = new_a;
            st.tensors[k + 1] = new_b;
            st.center = k + 1;
        }
        Ok(out)
    }

    /// Von Neumann entropy at every internal bond.
    pub fn entanglement_entropies(&self) -> Result<Vec<f64>> {
        Ok(self
            .schmidt_spectra()?
            .iter()
            .map(|sp| sp.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum())
            .collect())
    }

    /// Contract an end site with a bra vector and drop it from the chain.
    pub fn project_end(&mut self, last: bool, v: &[f64]) -> Result<()> {
        let p = self.dim;
        if v.len() != p || self.len() < 2 {
            return Err(TelecodeError::GateDimension {
                expected: p,
                got: v.len(),
            });
        }
        let k = if last { self.len() - 1 } else { 0 };
        let a = self.tensors.remove(k);
        // m[l][r] = Σ_σ v[σ] a[l][σ][r]
        let mut m = vec![0.0; a.l * a.r];
        for l in 0..a.l {
            for (s, vs) in v.iter().enumerate() {
                for r in 0..a.r {
                    m[l * a.r + r] += vs * a.data[(l * p + s) * a.r + r];
                }
            }
        }
        if last {
            let b = self.tensors.last_mut().expect("non-empty");
            b.data = mat_mul(b.left_grouped(p), MatRef::from_row_major_slice(&m, a.l, a.r));
            b.r = a.r;
        } else {
            let b = &mut self.tensors[0];
            b.data = mat_mul(MatRef::from_row_major_slice(&m, a.l, a.r), b.right_grouped(p));
            b.l = a.l;
        }
        let c = self.center.min(self.len() - 1);
        self.canonicalize(c, 0)
    }
}

/// Dense amplitude vector of a short state, for tests and oracles.
pub fn to_dense(state: &BoundaryState) -> Vec<f64> {
    let p = state.dim;
    let mut v = vec![1.0];
    let mut rdim = 1;
    for t in &state.tensors {
        let rows = v.len() / rdim;
        let next = mat_mul(
            MatRef::from_row_major_slice(&v, rows, rdim),
            t.right_grouped(p),
        );
        v = next;
        rdim = t.r;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(dim: usize, n_pairs: usize, seed: u64) -> BoundaryState {
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let pairs: Vec<Vec<f64>> = (0..n_pairs).map(|_| (0..dim * dim).map(|_| next()).collect()).collect();
        let refs: Vec<&[f64]> = pairs.iter().map(|v| v.as_slice()).collect();
        let mut s = BoundaryState::from_pairs(dim, &refs).unwrap();
        // Entangle with a few random gates.
        for g in 0..3 * n_pairs {
            let op: Vec<f64> = (0..dim.pow(4)).map(|_| next()).collect();
            let k = (g * 7) % (s.len() - 1);
            s.apply_two_site(k, &op, &Truncation::exact(), g % 2 == 0, 0).unwrap();
        }
        s
    }

    fn apply_dense(v: &[f64], p: usize, n: usize, k: usize, op: &[f64]) -> Vec<f64> {
        let left = p.pow(k as u32);
        let right = p.pow((n - k - 2) as u32);
        let p2 = p * p;
        let mut out = vec![0.0; v.len()];
        for a in 0..left {
            for b in 0..right {
                for o in 0..p2 {
                    let mut acc = 0.0;
                    for i in 0..p2 {
                        acc += op[o * p2 + i] * v[(a * p2 + i) * right + b];
                    }
                    out[(a * p2 + o) * right + b] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn gram_svd_reconstructs() {
        for (r, c) in [(7, 4), (4, 7), (5, 5)] {
            let m = Mat::from_fn(r, c, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7 + 0.1 * (i * j) as f64);
            let d = gram_svd(m.as_ref()).unwrap();
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..r {
                for j in 0..c {
                    let x: f64 = (0..d.s.len()).map(|k| d.u[(i, k)] * d.s[k] * d.v[(j, k)]).sum();
                    assert!((x - m[(i, j)]).abs() < 1e-9);
                }
            }
            let exact = svd(m.as_ref()).unwrap();
            for (a, b) in d.s.iter().zip(&exact.s) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn paired_state_is_normalized_product() {
        let pair = [0.0, 1.0, 1.0, 0.0];
        let s = BoundaryState::paired(2, 3, &pair).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((s.log_norm - 3.0 * 2f64.sqrt().ln()).abs() < 1e-14);
        let ent = s.entanglement_entropies().unwrap();
        for (k, e) in ent.iter().enumerate() {
            let want = if k % 2 == 0 { 2f64.ln() } else { 0.0 };
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_has_zero_entropy() {
        let pair = [1.0, 0.0, 0.0, 0.0];
        let s = BoundaryState::paired(2, 4, &pair).unwrap();
        assert!(s.entanglement_entropies().unwrap().iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn exact_updates_match_dense() {
        for dim in [2usize, 4] {
            let mut s = random_state(dim, 3, 7 + dim as u64);
            let n = s.len();
            let mut dense = to_dense(&s);
            let scale0 = s.log_norm;
            let mut x = 99u64;
            for g in 0..8 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                let op: Vec<f64> = (0..dim.pow(4))
                    .map(|i| ((x ^ (i as u64 * 2654435761)) % 1000) as f64 / 500.0 - 1.0)
                    .collect();
                let k = (g * 3 + 1) % (n - 1);
                dense = apply_dense(&dense, dim, n, k, &op);
                s.apply_two_site(k, &op, &Truncation::exact(), g % 2 == 1, 0).unwrap();
            }
            let got = to_dense(&s);
            let scale = (s.log_norm - scale0).exp();
            for (a, b) in got.iter().zip(&dense) {
                assert!((a * scale - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_center_preserves_state() {
        let s = random_state(2, 4, 3);
        let before = to_dense(&s);
        let mut t = s.clone();
        t.move_center(t.len() - 1);
        t.move_center(2);
        for (a, b) in before.iter().zip(to_dense(&t)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn windowed_overlap_matches_full() {
        let s = random_state(2, 4, 11);
        let bra = random_state(2, 4, 12);
        let op: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut applied = s.clone();
        let k = 3;
        let pre = applied.log_norm;
        applied.apply_two_site(k, &op, &Truncation::exact(), true, 0).unwrap();
        let full = bra.overlap_with(&applied) * (applied.log_norm - pre).exp();
        let w = s.windowed_overlaps(&bra, k, &[&op]);
        assert!((w[0] - full).abs() < 1e-10);
    }

    #[test]
    fn truncation_caps_bond_and_reports_weight() {
        let mut s = random_state(2, 6, 5);
        let strict = Truncation {
            chi_max: 2,
            cutoff: 0.0,
            strict: true,
        };
        let op: Vec<f64> = (0..16).map(|i| 1.0 + (i as f64).cos()).collect();
        let err = s.clone().apply_two_site(5, &op, &strict, true, 4);
        assert!(matches!(err, Err(TelecodeError::BondOverflow { row: 4, .. })));
        let w = s.apply_two_site(5, &op, &Truncation::new(2, 0.0), true, 0).unwrap();
        assert!(w > 0.0);
        assert!(s.bond_dims()[5] <= 2);
        assert!(s.cum_discarded_weight >= w);
    }

    #[test]
    fn zero_gate_is_reported() {
        let mut s = random_state(2, 2, 1);
        let op = vec![0.0; 16];
        assert_eq!(
            s.apply_two_site(1, &op, &Truncation::exact(), true, 9),
            Err(TelecodeError::ZeroWeight { row: 9 })
        );
    }

    #[test]
    fn projecting_ends_matches_dense() {
        let s = random_state(2, 3, 21);
        let dense = to_dense(&s);
        let mut t = s.clone();
        let pre = t.log_norm;
        t.project_end(false, &[0.0, 1.0]).unwrap();
        t.project_end(true, &[1.0, 0.0]).unwrap();
        let scale = (t.log_norm - pre).exp();
        let got = to_dense(&t);
        let n_mid = 1 << 4;
        for m in 0..n_mid {
            let want = dense[(1 << 5) + m * 2];
            assert!((got[m] * scale - want).abs() < 1e-10);
        }
    }
}
