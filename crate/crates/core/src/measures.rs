//! Non-Gaussianity of Fock-diagonal states.
//!
//! The Gaussian reference of a diagonal state is the thermal state with the
//! same mean photon number. Measure `A` is the Hilbert-Schmidt distance to the
//! reference normalized by the purity,
//! `δ_A = ½ [1 − Σ τ_n (2p_n − τ_n) / Σ p_n²]`,
//! and measure `B` is the entropy gap
//! `δ_B = (N+1) ln(N+1) − N ln N + Σ p_n ln p_n`.
//! Applied to detected-photon statistics they give the lower bounds `ε_A`,
//! `ε_B`.

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::states::{thermal_distribution, CutoffPolicy, PhotonDistribution};

/// Negative values down to this are treated as rounding and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

const MAX_MEAN: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    A,
    B,
}

impl Measure {
    fn tag(self) -> char {
        match self {
            Measure::A => 'A',
            Measure::B => 'B',
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Whether a value refers to photon or detected-photon statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    Photon,
    Detected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonGResult {
    pub value: f64,
    pub measure: Measure,
    pub reading: Reading,
    /// Mean of the thermal reference, i.e. of the input distribution.
    pub reference_mean: f64,
    pub stderr: Option<f64>,
    /// Set when a slightly negative rounding result was clamped to zero.
    pub clamped: bool,
}

impl NonGResult {
    fn checked(value: f64, measure: Measure, reference_mean: f64) -> Result<Self> {
        if value < -CLAMP_TOL || !value.is_finite() {
            return Err(Error::NegativeMeasure {
                measure: measure.tag(),
                value,
            });
        }
        let clamped = value < 0.0;
        Ok(Self {
            value: value.max(0.0),
            measure,
            reading: Reading::Photon,
            reference_mean,
            stderr: None,
            clamped,
        })
    }

    fn detected(self) -> Self {
        Self {
            reading: Reading::Detected,
            ..self
        }
    }
}

struct Moments {
    mean: f64,
    purity: f64,
}

fn moments(dist: &PhotonDistribution) -> Result<Moments> {
    let s = dist.stats();
    if s.purity == 0.0 {
        return Err(domain("non-Gaussianity of an all-zero distribution is undefined"));
    }
    if s.mean >= MAX_MEAN {
        return Err(domain(format!("mean photon number {} exceeds {MAX_MEAN}", s.mean)));
    }
    Ok(Moments {
        mean: s.mean,
        purity: s.purity,
    })
}

fn reference_thermal(mean: f64, min_len: usize) -> Result<PhotonDistribution> {
    let auto = thermal_distribution(mean, CutoffPolicy::default())?;
    if auto.probs().len() >= min_len {
        Ok(auto)
    } else {
        thermal_distribution(mean, CutoffPolicy::fixed(min_len - 1))
    }
}

/// Hilbert-Schmidt measure `δ_A`, summing `τ_n (2p_n − τ_n)` over an explicit
/// thermal reference vector.
pub fn delta_a(dist: &PhotonDistribution) -> Result<NonGResult> {
    let m = moments(dist)?;
    let tau = reference_thermal(m.mean, dist.probs().len())?;
    let cross: f64 = tau
        .probs()
        .iter()
        .enumerate()
        .map(|(n, &t)| t * (2.0 * dist.get(n) - t))
        .sum();
    NonGResult::checked(0.5 * (1.0 - cross / m.purity), Measure::A, m.mean)
}

/// `δ_A` through the expanded form `(μ[p] + 1/(2N+1) − 2κ[p, τ]) / (2μ[p])`,
/// with the thermal purity in closed form.
pub fn delta_a_expanded(dist: &PhotonDistribution) -> Result<f64> {
    let m = moments(dist)?;
    let tau = reference_thermal(m.mean, dist.probs().len())?;
    let kappa = hs_overlap(dist, &tau);
    Ok((m.purity + 1.0 / (2.0 * m.mean + 1.0) - 2.0 * kappa) / (2.0 * m.purity))
}

/// Entropy of a thermal state of mean `N`: `(N+1) ln(N+1) − N ln N`.
pub fn thermal_entropy(mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    mean.ln_1p() + mean * mean.recip().ln_1p()
}

/// Entropic measure `δ_B`: thermal-reference entropy minus the Shannon entropy
/// of `dist`.
pub fn delta_b(dist: &PhotonDistribution) -> Result<NonGResult> {
    let m = moments(dist)?;
    let neg_entropy: f64 = dist.probs().iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    NonGResult::checked(thermal_entropy(m.mean) + neg_entropy, Measure::B, m.mean)
}

/// `κ = Tr[ρσ] = Σ p_n q_n`; the shorter support is zero-padded.
pub fn hs_overlap(p: &PhotonDistribution, q: &PhotonDistribution) -> f64 {
    p.probs().iter().zip(q.probs()).map(|(a, b)| a * b).sum()
}

/// `(ε_A, ε_B)`: both measures evaluated on detected-photon statistics.
pub fn epsilon_pair(dist_detected: &PhotonDistribution) -> Result<(NonGResult, NonGResult)> {
    Ok((delta_a(dist_detected)?.detected(), delta_b(dist_detected)?.detected()))
}
