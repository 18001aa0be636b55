//! Per-outcome observables and their ensemble averages.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::channel::{couplings_from, Couplings, ProtocolParams, Replica};
use crate::lattice::{build_planar_code, dual_lattice, PlanarCodeLattice};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng::uniform;
use crate::sampler::{forced_plus, sample_ancestral, sample_nishimori, sample_passive, Provenance, SeedPath};
use crate::tn::rbim::{rbim_exact_with, RbimLayout, MAX_GROUP};
use crate::tn::{contract, gates_for_outcome, replica_gates, Contraction, Truncation};
use crate::{Result, TelecodeError};

/// Major version of the record schema.
pub const SCHEMA_MAJOR: u32 = 1;

/// Binary entropy of the eigenvalues `(1 ± x)/2`, in nats.
pub fn binary_entropy(x: f64) -> f64 {
    let f = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    let p = (0.5 * (1.0 + x.abs())).min(1.0);
    f(p) + f(1.0 - p)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Boundary-MPS contraction of the vertex model.
    Mps,
    /// Exact spin sum of the random-bond Ising limit.
    Rbim,
}

/// One persisted result line.
///
/// For `n = 2` the record carries the deterministic replica value in
/// `entropy` and `[κ²]₂` in `kappa_sq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub schema: u32,
    pub t_over_pi: f64,
    pub theta_over_pi: f64,
    pub d: usize,
    pub n_replica: Replica,
    #[serde(default)]
    pub protocol: Protocol,
    pub seed_path: SeedPath,
    pub provenance: Provenance,
    pub kappa_x: f64,
    pub kappa_z: f64,
    pub entropy: f64,
    #[serde(rename = "log_P")]
    pub log_p: f64,
    pub chi_used: usize,
    pub discarded_weight: f64,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_sq: Option<f64>,
}

impl SampleRecord {
    pub fn kappa_norm(&self) -> f64 {
        self.kappa_x.hypot(self.kappa_z)
    }

    /// Checks the schema version and the entropy-polarization identity.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_MAJOR {
            return Err(TelecodeError::Unsupported("record schema major version"));
        }
        if self.n_replica == Replica::Two {
            return Ok(());
        }
        let k = self.kappa_norm();
        if k > 1.0 + 1e-8 {
            return Err(TelecodeError::Domain {
                name: "|kappa|",
                value: k,
                domain: "[0, 1]",
            });
        }
        if !(0.0..=LN_2 + 1e-12).contains(&self.entropy) || (self.entropy - binary_entropy(k)).abs() > 1e-10 {
            return Err(TelecodeError::Domain {
                name: "entropy",
                value: self.entropy,
                domain: "H2((1+|kappa|)/2)",
            });
        }
        Ok(())
    }

    fn point(&self) -> PointKey {
        PointKey {
            protocol: self.protocol,
            n_replica: replica_rank(self.n_replica),
            theta_bits: self.theta_over_pi.to_bits(),
            d: self.d,
            t_bits: self.t_over_pi.to_bits(),
        }
    }
}

fn replica_rank(n: Replica) -> u8 {
    match n {
        Replica::One => 1,
        Replica::Two => 2,
        Replica::Infinite => u8::MAX,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PointKey {
    protocol: Protocol,
    n_replica: u8,
    theta_bits: u64,
    d: usize,
    t_bits: u64,
}

/// Saturating polarization from the two boundary correlators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub kappa_x: f64,
    pub kappa_z: f64,
    /// The `⟨Z₀Z_{2d+1}⟩ → 1` divergence was hit and κ_x was set to 1.
    pub saturated: bool,
}

/// Polarization from `czz = ⟨Z₀Z_{2d+1}⟩` and `cxx = ⟨X₀X_{2d+1}⟩`.
pub fn kappa_from_correlators(czz: f64, cxx: f64) -> KappaEstimate {
    let den = 1.0 - czz;
    if den <= 1e-14 {
        return KappaEstimate {
            kappa_x: 1.0,
            kappa_z: 0.0,
            saturated: true,
        };
    }
    KappaEstimate {
        kappa_x: (1.0 + czz) / den,
        kappa_z: 2.0 * cxx / den,
        saturated: false,
    }
}

/// Observables of one contracted outcome, κ in the reference-qubit frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeEvaluation {
    pub kappa_x: f64,
    pub kappa_z: f64,
    pub log_prob: f64,
    pub chi_used: usize,
    pub discarded_weight: f64,
}

impl OutcomeEvaluation {
    pub fn kappa_norm(&self) -> f64 {
        self.kappa_x.hypot(self.kappa_z)
    }

    pub fn entropy(&self) -> f64 {
        binary_entropy(self.kappa_norm())
    }

    fn from_contraction(r: &Contraction) -> Result<Self> {
        let (czz, cxx) = r.correlators().ok_or(TelecodeError::Unsupported("replica contraction has no single-copy correlators"))?;
        let k = kappa_from_correlators(czz, cxx);
        Ok(OutcomeEvaluation {
            kappa_x: k.kappa_x,
            kappa_z: k.kappa_z,
            log_prob: r.log_prob().unwrap_or(f64::NEG_INFINITY),
            chi_used: r.chi_used(),
            discarded_weight: r.discarded_weight(),
        })
    }
}

fn on_axis(theta: f64) -> Option<bool> {
    if theta.abs() < 1e-12 {
        Some(false)
    } else if (theta - FRAC_PI_2).abs() < 1e-12 {
        Some(true)
    } else {
        None
    }
}

/// Everything needed to sample and evaluate outcomes at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub params: ProtocolParams,
    pub lattice: PlanarCodeLattice,
    pub couplings: Couplings,
    pub truncation: Truncation,
    rbim: Option<(PlanarCodeLattice, RbimLayout)>,
}

impl Evaluator {
    pub fn new(params: &ProtocolParams) -> Result<Self> {
        params.validate()?;
        if params.phi().abs() > 1e-15 {
            return Err(TelecodeError::Unsupported("phi != 0 is only available in the dense oracle"));
        }
        let lattice = build_planar_code(params.d)?;
        let couplings = params.couplings()?;
        let rbim = match on_axis(params.theta()) {
            Some(dual) if params.d - 1 <= MAX_GROUP => {
                let lat = if dual { dual_lattice(&lattice) } else { lattice.clone() };
                let layout = RbimLayout::new(&lat)?;
                Some((lat, layout))
            }
            _ => None,
        };
        Ok(Evaluator {
            params: params.clone(),
            lattice,
            couplings,
            truncation: Truncation::new(params.chi_max, params.svd_cutoff),
            rbim,
        })
    }

    /// Force the boundary-MPS backend even where the exact sum applies.
    pub fn with_mps(mut self) -> Self {
        self.rbim = None;
        self
    }

    pub fn backend(&self) -> Backend {
        if self.rbim.is_some() {
            Backend::Rbim
        } else {
            Backend::Mps
        }
    }

    /// Observables of the active protocol for outcome `values`.
    pub fn evaluate(&self, values: &[i8]) -> Result<OutcomeEvaluation> {
        self.evaluate_at(self.params.t(), values)
    }

    fn evaluate_at(&self, t: f64, values: &[i8]) -> Result<OutcomeEvaluation> {
        if let Some((lat, layout)) = &self.rbim {
            let r = rbim_exact_with(layout, lat, t, values)?;
            let (_, k) = r.kappa();
            let dual = on_axis(self.params.theta()) == Some(true);
            return Ok(OutcomeEvaluation {
                kappa_x: if dual { k } else { 0.0 },
                kappa_z: if dual { 0.0 } else { k },
                log_prob: r.log_prob,
                chi_used: 0,
                discarded_weight: 0.0,
            });
        }
        let c = if t == self.params.t() { self.couplings } else { couplings_from(t, self.params.theta())? };
        let r = contract(&self.lattice, &gates_for_outcome(&self.lattice, &c, values)?, &self.truncation)?;
        OutcomeEvaluation::from_contraction(&r)
    }

    fn record(&self, protocol: Protocol, seed_path: SeedPath, provenance: Provenance, e: &OutcomeEvaluation) -> SampleRecord {
        SampleRecord {
            schema: SCHEMA_MAJOR,
            t_over_pi: self.params.t_over_pi,
            theta_over_pi: self.params.theta_over_pi,
            d: self.params.d,
            n_replica: self.params.n_replica,
            protocol,
            seed_path,
            provenance,
            kappa_x: e.kappa_x,
            kappa_z: e.kappa_z,
            entropy: e.entropy(),
            log_p: e.log_prob,
            chi_used: e.chi_used,
            discarded_weight: e.discarded_weight,
            wall_time: 0.0,
            kappa_sq: None,
        }
    }

    /// Draw one Born outcome and evaluate it.
    pub fn sample(&self, seed_path: SeedPath) -> Result<SampleRecord> {
        if self.params.n_replica != Replica::One {
            return self.replica_record();
        }
        if let Some(_) = &self.rbim {
            let cfg = sample_nishimori(&self.lattice, self.params.t(), self.params.theta(), seed_path)?;
            let e = self.evaluate(&cfg.values)?;
            return Ok(self.record(Protocol::Active, seed_path, cfg.provenance, &e));
        }
        let a = sample_ancestral(&self.lattice, &self.couplings, &self.truncation, seed_path)?;
        let e = OutcomeEvaluation::from_contraction(&a.contraction)?;
        Ok(self.record(Protocol::Active, seed_path, a.config.provenance, &e))
    }

    /// Draw one passive-protocol error configuration.
    ///
    /// The stored entropy is that of the syndrome-conditioned state, which
    /// equals the active entropy at strength `π/4 − t`; the passive coherent
    /// information is `ln 2` minus its average.
    pub fn sample_passive(&self, seed_path: SeedPath) -> Result<SampleRecord> {
        if on_axis(self.params.theta()) != Some(false) || self.params.n_replica != Replica::One {
            return Err(TelecodeError::Unsupported("passive protocol requires theta = 0 and n = 1"));
        }
        let cfg = sample_passive(&self.lattice, self.params.t(), seed_path)?;
        let e = self.evaluate_at(FRAC_PI_4 - self.params.t(), &cfg.values)?;
        Ok(self.record(Protocol::Passive, seed_path, cfg.provenance, &e))
    }

    /// Deterministic record of the `n = 2` or `n = ∞` replica.
    pub fn replica_record(&self) -> Result<SampleRecord> {
        let seed_path = SeedPath { seed: 0, sample: 0 };
        match self.params.n_replica {
            Replica::Two => {
                let r = renyi2_contraction(&self.lattice, &self.couplings, &self.truncation)?;
                let mut rec = self.record(Protocol::Active, seed_path, Provenance::ForcedPlus, &OutcomeEvaluation {
                    kappa_x: 0.0,
                    kappa_z: 0.0,
                    log_prob: 0.0,
                    chi_used: r.chi_used,
                    discarded_weight: r.discarded_weight,
                });
                rec.entropy = r.ic2;
                rec.kappa_sq = Some(r.kappa_sq);
                Ok(rec)
            }
            Replica::Infinite => {
                let plus = forced_plus(&self.lattice);
                let e = self.evaluate(&plus.values)?;
                Ok(self.record(Protocol::Active, seed_path, plus.provenance, &e))
            }
            Replica::One => Err(TelecodeError::Unsupported("n = 1 is sampled, not contracted")),
        }
    }
}

/// Mean with jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn bits(&self) -> (f64, f64) {
        (self.mean / LN_2, self.se / LN_2)
    }
}

/// Leave-one-out jackknife of the sample mean.
pub fn jackknife_mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let total: f64 = xs.iter().sum();
    let mean = total / n as f64;
    if n < 2 {
        return Estimate { mean, se: 0.0, n };
    }
    let nf = n as f64;
    let var: f64 = xs
        .iter()
        .map(|x| {
            let loo = (total - x) / (nf - 1.0);
            (loo - mean) * (loo - mean)
        })
        .sum::<f64>()
        * (nf - 1.0)
        / nf;
    Estimate { mean, se: var.sqrt(), n }
}

fn check_same_point(records: &[SampleRecord]) -> Result<()> {
    let first = records.first().ok_or_else(|| TelecodeError::MixedParams(format!("no records")))?;
    if let Some(r) = records.iter().find(|r| r.point() != first.point()) {
        return Err(TelecodeError::MixedParams(format!(
            "(d={}, t/pi={}, theta/pi={}, n={}) vs (d={}, t/pi={}, theta/pi={}, n={})",
            first.d, first.t_over_pi, first.theta_over_pi, first.n_replica, r.d, r.t_over_pi, r.theta_over_pi, r.n_replica
        )));
    }
    Ok(())
}

/// Born-averaged coherent information of one parameter point.
///
/// Passive records are converted to `ln 2 − S`.
pub fn coherent_info_born(records: &[SampleRecord]) -> Result<Estimate> {
    check_same_point(records)?;
    if records.len() < 2 && records[0].n_replica == Replica::One {
        return Err(TelecodeError::MixedParams(format!("need at least 2 records, got {}", records.len())));
    }
    let xs: Vec<f64> = records
        .iter()
        .map(|r| match r.protocol {
            Protocol::Active => r.entropy,
            Protocol::Passive => LN_2 - r.entropy,
        })
        .collect();
    Ok(jackknife_mean(&xs))
}

/// Result of the doubled-network contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renyi2 {
    pub kappa_sq: f64,
    pub ic2: f64,
    pub chi_used: usize,
    pub discarded_weight: f64,
}

fn renyi2_contraction(lat: &PlanarCodeLattice, c: &Couplings, trunc: &Truncation) -> Result<Renyi2> {
    let r = contract(lat, &replica_gates(lat, c, Replica::Two)?, trunc)?;
    let kappa_sq = r.kappa_sq_2().ok_or(TelecodeError::Unsupported("single-copy contraction"))?;
    Ok(Renyi2 {
        kappa_sq,
        ic2: LN_2 - (1.0 + kappa_sq).ln(),
        chi_used: r.chi_used(),
        discarded_weight: r.discarded_weight(),
    })
}

/// `I_c^(2) = ln 2 − ln(1 + [κ²]₂)` from one deterministic contraction.
pub fn renyi2_from_replica(lat: &PlanarCodeLattice, params: &ProtocolParams) -> Result<Renyi2> {
    params.validate()?;
    renyi2_contraction(lat, &params.couplings()?, &Truncation::new(params.chi_max, params.svd_cutoff))
}

/// The all-plus outcome behind the `n = ∞` replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteReplica {
    pub kappa_x: f64,
    pub kappa_z: f64,
    /// Von Neumann entropy of the reference qubit.
    pub von_neumann: f64,
    /// Rényi-∞ entropy `−ln λ_max`.
    pub renyi_inf: f64,
}

pub fn infinite_replica(lat: &PlanarCodeLattice, params: &ProtocolParams) -> Result<InfiniteReplica> {
    params.validate()?;
    let trunc = Truncation::new(params.chi_max, params.svd_cutoff);
    let r = contract(lat, &replica_gates(lat, &params.couplings()?, Replica::Infinite)?, &trunc)?;
    let e = OutcomeEvaluation::from_contraction(&r)?;
    let k = e.kappa_norm().min(1.0);
    Ok(InfiniteReplica {
        kappa_x: e.kappa_x,
        kappa_z: e.kappa_z,
        von_neumann: binary_entropy(k),
        renyi_inf: -(0.5 * (1.0 + k)).ln(),
    })
}

/// Pauli-frame correction on the logical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalCorrection {
    Identity,
    /// Logical bit flip, reversing the sign of κ_z.
    FlipX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Ok,
    /// `|κ| = 1`: the logical qubit has collapsed to a classical bit.
    LogicalCollapse,
}

/// Output of the active decoder for one outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveDecode {
    /// Reference density matrix `(1 + κ_x X + κ_z Z)/2`.
    pub rho_r: [[f64; 2]; 2],
    /// Kraus operator `√ρ_R` of the logical channel `ρ ↦ √ρ_R ρ √ρ_R / tr`.
    pub kraus: [[f64; 2]; 2],
    pub correction: LogicalCorrection,
    /// Polarization after the correction.
    pub corrected_kappa: (f64, f64),
    /// Bell-state fidelity of the channel output.
    pub fidelity: f64,
    pub status: DecodeStatus,
}

fn sqrt_psd2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    // √M = (M + √det I)/√(tr + 2√det) for 2×2 PSD matrices.
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).max(0.0);
    let s = det.sqrt();
    let tau = (m[0][0] + m[1][1] + 2.0 * s).sqrt();
    [[(m[0][0] + s) / tau, m[0][1] / tau], [m[1][0] / tau, (m[1][1] + s) / tau]]
}

/// Logical channel and Pauli-frame correction implied by outcome `values`.
pub fn decode_active(ev: &Evaluator, values: &[i8]) -> Result<ActiveDecode> {
    let e = ev.evaluate(values)?;
    Ok(decode_from_kappa(e.kappa_x, e.kappa_z))
}

/// As [`decode_active`] for a known polarization.
pub fn decode_from_kappa(kappa_x: f64, kappa_z: f64) -> ActiveDecode {
    let rho_r = [[0.5 * (1.0 + kappa_z), 0.5 * kappa_x], [0.5 * kappa_x, 0.5 * (1.0 - kappa_z)]];
    let k = kappa_x.hypot(kappa_z).min(1.0);
    let correction = if kappa_z < 0.0 { LogicalCorrection::FlipX } else { LogicalCorrection::Identity };
    ActiveDecode {
        rho_r,
        kraus: sqrt_psd2(rho_r),
        correction,
        corrected_kappa: (kappa_x, kappa_z.abs()),
        fidelity: 0.5 * (1.0 + (1.0 - k * k).max(0.0).sqrt()),
        status: if k >= 1.0 - 1e-12 { DecodeStatus::LogicalCollapse } else { DecodeStatus::Ok },
    }
}

/// Shannon diagnostic built from Z-basis reference readouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliceEstimate {
    /// `[⟨ln P(s)/P_k(s)⟩]` with simulated reference bits `k`.
    pub ic_z: Estimate,
    /// Same quantity averaged over `k` analytically.
    pub ic_z_exact: Estimate,
    /// Coherent information rebuilt from the diagonal entries.
    pub reconstructed: Estimate,
}

/// Alice's Shannon information at `θ ∈ {0, π/4}`.
///
/// At `θ = 0` the reconstruction equals `I_c^z`; at `θ = π/4` each outcome's
/// `|κ|` is rebuilt as `√2 |κ_z|`.
pub fn alice_shannon(records: &[SampleRecord], seed: u64) -> Result<AliceEstimate> {
    check_same_point(records)?;
    let theta = records[0].theta_over_pi;
    let self_dual = if theta == 0.0 {
        false
    } else if (theta - 0.25).abs() < 1e-12 {
        true
    } else {
        return Err(TelecodeError::Unsupported("Alice reconstruction is defined at theta = 0 and pi/4 only"));
    };
    let mut sim = Vec::with_capacity(records.len());
    let mut exact = Vec::with_capacity(records.len());
    let mut rec = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let kz = r.kappa_z.clamp(-1.0, 1.0);
        let p0 = 0.5 * (1.0 + kz);
        let k0 = uniform(seed, r.seed_path.sample, i) < p0;
        let pk = if k0 { p0 } else { 1.0 - p0 };
        sim.push(-pk.ln());
        exact.push(binary_entropy(kz));
        rec.push(if self_dual { binary_entropy((SQRT_2 * kz).clamp(-1.0, 1.0)) } else { binary_entropy(kz) });
    }
    Ok(AliceEstimate {
        ic_z: jackknife_mean(&sim),
        ic_z_exact: jackknife_mean(&exact),
        reconstructed: jackknife_mean(&rec),
    })
}

/// One aggregated parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub d: usize,
    pub t_over_pi: f64,
    pub theta_over_pi: f64,
    pub n_replica: Replica,
    #[serde(default)]
    pub protocol: Protocol,
    pub mean: f64,
    pub se: f64,
    pub n_samples: usize,
}

/// Group records by parameter point, sorted by protocol, replica, angle,
/// distance and strength.
pub fn aggregate(records: &[SampleRecord]) -> Result<Vec<AggregateRow>> {
    let mut groups: BTreeMap<PointKey, Vec<SampleRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.point()).or_default().push(r.clone());
    }
    groups
        .into_values()
        .map(|mut g| {
            g.sort_by_key(|r| r.seed_path);
            g.dedup_by_key(|r| r.seed_path);
            let est = if g.len() == 1 {
                let x = if g[0].protocol == Protocol::Passive { LN_2 - g[0].entropy } else { g[0].entropy };
                Estimate { mean: x, se: 0.0, n: 1 }
            } else {
                coherent_info_born(&g)?
            };
            Ok(AggregateRow {
                d: g[0].d,
                t_over_pi: g[0].t_over_pi,
                theta_over_pi: g[0].theta_over_pi,
                n_replica: g[0].n_replica,
                protocol: g[0].protocol,
                mean: est.mean,
                se: est.se,
                n_samples: est.n,
            })
        })
        .collect()
}

/// Passive-protocol coherent information on a grid, one row per `(d, t)`.
pub fn passive_threshold_curve(d_list: &[usize], t_over_pi: &[f64], samples: u64, seed: u64) -> Result<Vec<AggregateRow>> {
    let mut records = Vec::new();
    for &d in d_list {
        for (ti, &t) in t_over_pi.iter().enumerate() {
            let ev = Evaluator::new(&ProtocolParams::new(t, 0.0, d, Replica::One))?;
            for sample in 0..samples {
                let s = crate::rng::task_seed(seed, d, ti, 0, sample);
                records.push(ev.sample_passive(SeedPath { seed: s, sample })?);
            }
        }
    }
    aggregate(&records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{coherent_info_exact, enumerate_outcomes, optimal_bell_fidelity, passive_coherent_info_exact, prepare_logical_bell};
    use core::f64::consts::PI;

    #[test]
    fn correlator_map() {
        let k = kappa_from_correlators(-1.0, 0.0);
        assert_eq!((k.kappa_x, k.kappa_z, k.saturated), (0.0, 0.0, false));
        assert!(kappa_from_correlators(1.0, 0.3).saturated);
    }

    #[test]
    fn jackknife_of_constant() {
        let e = jackknife_mean(&[LN_2; 10]);
        assert!((e.mean - LN_2).abs() < 1e-15);
        assert!(e.se < 1e-15);
        let e = jackknife_mean(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decoder_reproduces_oracle_fidelity() {
        let params = ProtocolParams::new(0.1, 0.3 / PI, 2, Replica::One);
        let ev = Evaluator::new(&params).unwrap();
        let outs = enumerate_outcomes(&prepare_logical_bell(2).unwrap(), params.t(), params.theta(), 0.0).unwrap();
        for o in outs.iter().filter(|o| o.prob > 1e-12) {
            let dec = decode_active(&ev, &o.values).unwrap();
            assert!((dec.fidelity - optimal_bell_fidelity(o)).abs() < 1e-8);
            let k = o.kappa();
            assert!((dec.corrected_kappa.0.hypot(dec.corrected_kappa.1) - k[0].hypot(k[2])).abs() < 1e-8);
            assert!(dec.corrected_kappa.1 >= 0.0);
            let kr = dec.kraus;
            let sq = [
                [kr[0][0] * kr[0][0] + kr[0][1] * kr[1][0], kr[0][0] * kr[0][1] + kr[0][1] * kr[1][1]],
                [kr[1][0] * kr[0][0] + kr[1][1] * kr[1][0], kr[1][0] * kr[0][1] + kr[1][1] * kr[1][1]],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((sq[i][j] - dec.rho_r[i][j]).abs() < 1e-10);
                }
            }
        }
        assert_eq!(decode_from_kappa(0.0, 0.0).fidelity, 1.0);
        assert_eq!(decode_from_kappa(0.0, -1.0).status, DecodeStatus::LogicalCollapse);
    }

    #[test]
    fn rbim_and_mps_backends_agree() {
        for theta in [0.0, 0.5] {
            let params = ProtocolParams::new(0.13, theta, 4, Replica::One);
            let ev = Evaluator::new(&params).unwrap();
            assert_eq!(ev.backend(), Backend::Rbim);
            let mut mps = ev.clone().with_mps();
            mps.truncation = Truncation::exact();
            for sample in 0..20 {
                let cfg = crate::sampler::sample_nishimori(&ev.lattice, params.t(), params.theta(), SeedPath { seed: 1, sample }).unwrap();
                let (a, b) = (ev.evaluate(&cfg.values).unwrap(), mps.evaluate(&cfg.values).unwrap());
                assert!((a.log_prob - b.log_prob).abs() < 1e-8, "theta {theta}: {a:?} {b:?}");
                assert!((a.kappa_x - b.kappa_x).abs() < 1e-8 && (a.kappa_z - b.kappa_z).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn passive_identity_matches_oracle() {
        let st = prepare_logical_bell(2).unwrap();
        for t in [0.03 * PI, 0.107 * PI, 0.2 * PI] {
            let passive = passive_coherent_info_exact(&st, t, 0.0, 0.0).unwrap();
            let active = coherent_info_exact(&enumerate_outcomes(&st, FRAC_PI_4 - t, 0.0, 0.0).unwrap(), Replica::One);
            assert!((passive - (LN_2 - active)).abs() < 1e-10, "t={t}: {passive} vs {}", LN_2 - active);
        }
    }

    #[test]
    fn record_round_trip_and_validation() {
        let ev = Evaluator::new(&ProtocolParams::new(0.12, 0.0, 3, Replica::One)).unwrap();
        let r = ev.sample(SeedPath { seed: 3, sample: 1 }).unwrap();
        r.validate().unwrap();
        let mut bad = r.clone();
        bad.schema = 2;
        assert!(bad.validate().is_err());
        let mut bad = r.clone();
        bad.entropy += 0.01;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mixed_points_are_rejected() {
        let a = Evaluator::new(&ProtocolParams::new(0.12, 0.0, 3, Replica::One)).unwrap();
        let b = Evaluator::new(&ProtocolParams::new(0.13, 0.0, 3, Replica::One)).unwrap();
        let rs = [a.sample(SeedPath { seed: 1, sample: 0 }).unwrap(), b.sample(SeedPath { seed: 1, sample: 1 }).unwrap()];
        assert!(matches!(coherent_info_born(&rs), Err(TelecodeError::MixedParams(_))));
    }
}
