//! Closed-form channel, coupling and disorder math.
//!
//! Angles travel in units of π ([`PiUnits`]) so that grid points such as
//! `t = 0.143π` are exact in configuration files.

use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Result, TelecodeError};

/// An angle expressed as a multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiUnits(pub f64);

impl PiUnits {
    pub fn radians(self) -> f64 {
        self.0 * PI
    }

    pub fn from_radians(x: f64) -> Self {
        PiUnits(x / PI)
    }
}

/// A non-negative coupling that may sit at its infinite limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strength {
    Finite(f64),
    Saturated,
}

impl Strength {
    pub fn is_saturated(self) -> bool {
        matches!(self, Strength::Saturated)
    }

    /// Finite value, or `None` when saturated.
    pub fn finite(self) -> Option<f64> {
        match self {
            Strength::Finite(x) => Some(x),
            Strength::Saturated => None,
        }
    }

    /// Floating-point view for reporting only; never feed this into tensors.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Replica index of the outcome average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Replica {
    One,
    Two,
    Infinite,
}

impl fmt::Display for Replica {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Replica::One => "1",
            Replica::Two => "2",
            Replica::Infinite => "inf",
        })
    }
}

impl FromStr for Replica {
    type Err = TelecodeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Replica::One),
            "2" => Ok(Replica::Two),
            "inf" | "infinity" | "∞" => Ok(Replica::Infinite),
            _ => Err(TelecodeError::Unsupported("replica index must be 1, 2 or inf")),
        }
    }
}

impl Serialize for Replica {
    fn serialize<S: Serializer>(&self, ser: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Replica::One => ser.serialize_u8(1),
            Replica::Two => ser.serialize_u8(2),
            Replica::Infinite => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Replica {
    fn deserialize<D: Deserializer<'de>>(de: D) -> core::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Replica;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("1, 2 or \"inf\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<Replica, E> {
                match v {
                    1 => Ok(Replica::One),
                    2 => Ok(Replica::Two),
                    _ => Err(E::custom("replica index must be 1, 2 or inf")),
                }
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<Replica, E> {
                self.visit_u64(u64::try_from(v).map_err(E::custom)?)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<Replica, E> {
                v.parse().map_err(E::custom)
            }
        }
        de.deserialize_any(V)
    }
}

/// One experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub t_over_pi: f64,
    pub theta_over_pi: f64,
    #[serde(default)]
    pub phi_over_pi: f64,
    pub d: usize,
    pub n_replica: Replica,
    pub seed: u64,
    pub chi_max: usize,
    pub svd_cutoff: f64,
}

impl ProtocolParams {
    pub fn new(t_over_pi: f64, theta_over_pi: f64, d: usize, n_replica: Replica) -> Self {
        ProtocolParams {
            t_over_pi,
            theta_over_pi,
            phi_over_pi: 0.0,
            d,
            n_replica,
            seed: 0,
            chi_max: 256,
            svd_cutoff: 1e-10,
        }
    }

    pub fn t(&self) -> f64 {
        PiUnits(self.t_over_pi).radians()
    }

    pub fn theta(&self) -> f64 {
        PiUnits(self.theta_over_pi).radians()
    }

    pub fn phi(&self) -> f64 {
        PiUnits(self.phi_over_pi).radians()
    }

    pub fn validate(&self) -> Result<()> {
        check_t(self.t())?;
        check_theta(self.theta())?;
        if !(0.0..2.0).contains(&self.phi_over_pi) {
            return Err(domain("phi_over_pi", self.phi_over_pi, "[0, 2)"));
        }
        if self.d < 2 {
            return Err(TelecodeError::InvalidDistance(self.d));
        }
        if self.chi_max < 2 {
            return Err(domain("chi_max", self.chi_max as f64, ">= 2"));
        }
        if !(self.svd_cutoff > 0.0 && self.svd_cutoff < 1.0) {
            return Err(domain("svd_cutoff", self.svd_cutoff, "(0, 1)"));
        }
        Ok(())
    }

    pub fn couplings(&self) -> Result<Couplings> {
        couplings_from(self.t(), self.theta())
    }
}

/// Ashkin-Teller couplings of one qubit site at φ = 0.
///
/// `tanh_j` and `parallel` are the gate amplitudes normalized by cosh J; they
/// stay finite even where J or K saturate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub t: f64,
    pub theta: f64,
    pub j: Strength,
    pub k: Strength,
    pub beta: Strength,
    /// tanh J = sin 2t cos θ.
    pub tanh_j: f64,
    /// e^{−2K} / cosh J = sin 2t sin θ.
    pub parallel: f64,
}

impl Couplings {
    /// Couplings of the Hadamard-dual point θ → π/2 − θ.
    pub fn dual(&self) -> Couplings {
        couplings_from(self.t, FRAC_PI_2 - self.theta).expect("dual of a valid point is valid")
    }
}

fn domain(name: &'static str, value: f64, domain: &'static str) -> TelecodeError {
    TelecodeError::Domain {
        name,
        value,
        domain,
    }
}

const ANGLE_SLACK: f64 = 1e-12;

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && (-ANGLE_SLACK..=FRAC_PI_4 + ANGLE_SLACK).contains(&t) {
        Ok(())
    } else {
        Err(domain("t", t, "[0, pi/4]"))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && (-ANGLE_SLACK..=PI / 2.0 + ANGLE_SLACK).contains(&theta) {
        Ok(())
    } else {
        Err(domain("theta", theta, "[0, pi/2]"))
    }
}

/// Measurement strength β = atanh(sin 2t).
pub fn beta_from_t(t: f64) -> Result<Strength> {
    check_t(t)?;
    let q = (2.0 * t).sin();
    if q >= 1.0 {
        Ok(Strength::Saturated)
    } else {
        Ok(Strength::Finite(q.max(0.0).atanh()))
    }
}

/// Ashkin-Teller couplings J and K at φ = 0.
pub fn couplings_from(t: f64, theta: f64) -> Result<Couplings> {
    check_t(t)?;
    check_theta(theta)?;
    let t = t.clamp(0.0, FRAC_PI_4);
    let theta = theta.clamp(0.0, PI / 2.0);
    let q = (2.0 * t).sin().min(1.0);
    // Both factors as sines keep θ ↔ π/2 − θ bit-exact.
    let sin_th = theta.sin();
    let cos_th = (FRAC_PI_2 - theta).sin();
    let tanh_j = q * cos_th;
    let parallel = q * sin_th;
    let j = if tanh_j >= 1.0 {
        Strength::Saturated
    } else {
        Strength::Finite(tanh_j.atanh())
    };
    let k = if parallel <= 0.0 {
        Strength::Saturated
    } else {
        // e^{−2K} = parallel · cosh J, with cosh J = 1/√(1 − tanh²J).
        let cosh_j = 1.0 / (1.0 - tanh_j * tanh_j).sqrt();
        if cosh_j.is_finite() {
            Strength::Finite((-0.5 * (parallel * cosh_j).ln()).max(0.0))
        } else {
            Strength::Finite(0.0)
        }
    };
    Ok(Couplings {
        t,
        theta,
        j,
        k,
        beta: beta_from_t(t)?,
        tanh_j,
        parallel,
    })
}

/// 2×2 complex matrix, row major.
pub type Mat2 = [[Complex64; 2]; 2];

/// Pauli vector σ^{θ,φ} = sinθ cosφ X + sinθ sinφ Y + cosθ Z.
pub fn bloch_pauli(theta: f64, phi: f64) -> Mat2 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let off = Complex64::new(st * cp, -st * sp);
    [
        [Complex64::new(ct, 0.0), off],
        [off.conj(), Complex64::new(-ct, 0.0)],
    ]
}

/// Kraus operator M_s = exp(βsσ/2)/√(2 cosh β) = (cos t + s sin t σ)/√2.
///
/// The second form is finite everywhere and equals the rank-1 projector at
/// t = π/4.
pub fn kraus_matrix(t: f64, theta: f64, phi: f64, s: i8) -> Result<Mat2> {
    check_t(t)?;
    if s != 1 && s != -1 {
        return Err(TelecodeError::OutcomeValue(s));
    }
    let t = t.clamp(0.0, FRAC_PI_4);
    let sigma = bloch_pauli(theta, phi);
    let a = t.cos() * FRAC_1_SQRT_2;
    let b = f64::from(s) * t.sin() * FRAC_1_SQRT_2;
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = sigma[r][c] * b;
            if r == c {
                *x += a;
            }
        }
    }
    Ok(m)
}

/// Which decoder frame the disorder refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderMode {
    Active,
    Passive,
}

/// Bond-sign flip probability of the equivalent random-bond Ising model.
pub fn disorder_prob(t: f64, mode: DisorderMode) -> Result<f64> {
    check_t(t)?;
    let t = t.clamp(0.0, FRAC_PI_4);
    Ok(match mode {
        DisorderMode::Active => (FRAC_PI_4 - t).sin().powi(2),
        DisorderMode::Passive => t.sin().powi(2),
    })
}

/// Parameters of the Hadamard-dual experiment, θ → π/2 − θ.
pub fn hadamard_dual_params(p: &ProtocolParams) -> Result<ProtocolParams> {
    if p.phi_over_pi != 0.0 {
        return Err(TelecodeError::Unsupported(
            "Hadamard duality requires phi = 0",
        ));
    }
    Ok(ProtocolParams {
        theta_over_pi: 0.5 - p.theta_over_pi,
        ..p.clone()
    })
}
