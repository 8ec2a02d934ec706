//! Photon-number distributions of the state families handled by the crate:
//! Poissonian (PHAV), thermal, 2-PHAV and displaced PHAV / 2-PHAV, plus the
//! binomial loss channel that maps photons to detected photons.

use std::cell::RefCell;

use crate::error::{domain, Error, Result};
use crate::quad::{self, QuadratureControl};
use crate::specfun::{self, ln_factorials, log_gamma};

/// Tail target used by [`CutoffPolicy::default`].
pub const DEFAULT_TAIL_TARGET: f64 = 1e-14;

/// Tolerance on `Σp + tail_bound = 1` for constructed distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Largest coupling `B = 2√(n1 n2)` for which the 2-PHAV `1F2` series is
/// used. Its terms alternate in sign and lose about `2B / ln 10` digits, so
/// above this the positive-term half-angle series takes over.
pub const ALTERNATING_SERIES_MAX_COUPLING: f64 = 4.0;

/// Above this coupling the 2-PHAV statistics come from the phase-average
/// quadrature instead of a series.
pub const CLOSED_FORM_MAX_COUPLING: f64 = 200.0;

/// Truncated probability vector over photon number `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub mean: f64,
    pub purity: f64,
    /// Shannon entropy in nats; equals the von Neumann entropy of the
    /// corresponding diagonal state.
    pub entropy: f64,
}

impl PhotonDistribution {
    /// Wraps explicit probabilities. Entries must be finite and nonnegative;
    /// normalization is not enforced here (see [`Self::normalization_error`]).
    pub fn new(probs: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("a photon distribution needs at least one entry"));
        }
        if let Some((n, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(domain(format!(
                "probability p_{n} = {p} is not a finite nonnegative number"
            )));
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(domain(format!(
                "tail bound {tail_bound} must be finite and nonnegative"
            )));
        }
        Ok(Self { probs, tail_bound })
    }

    pub fn vacuum() -> Self {
        Self {
            probs: vec![1.0],
            tail_bound: 0.0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `p_n`, zero beyond the stored support.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `|Σp + tail_bound − 1|`.
    pub fn normalization_error(&self) -> f64 {
        (self.total() + self.tail_bound - 1.0).abs()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn stats(&self) -> DistributionStats {
        distribution_stats(self)
    }
}

/// Mean photon number of a single PHAV, `N = |β|²`. After loss the same value
/// is read as a mean number of detected photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhavParams {
    mean: f64,
}

impl PhavParams {
    pub fn new(mean: f64) -> Result<Self> {
        check_mean("PHAV mean", mean)?;
        Ok(Self { mean })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `|β|`
    pub fn amplitude(&self) -> f64 {
        self.mean.sqrt()
    }
}

/// Component means of a 2-PHAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhavParams {
    n1: f64,
    n2: f64,
}

impl TwoPhavParams {
    pub fn new(n1: f64, n2: f64) -> Result<Self> {
        check_mean("2-PHAV component n1", n1)?;
        check_mean("2-PHAV component n2", n2)?;
        Ok(Self { n1, n2 })
    }

    /// Components `M_T·R/(1+R)` and `M_T/(1+R)` for a ratio `R = max/min ≥ 1`.
    pub fn from_total_and_ratio(total: f64, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(domain(format!("ratio max/min must be >= 1, got {ratio}")));
        }
        Self::new(total * ratio / (1.0 + ratio), total / (1.0 + ratio))
    }

    /// Components `M_T/(1+q)` and `M_T·q/(1+q)` for a balance `q = min/max ∈ (0, 1]`.
    pub fn from_total_and_balance(total: f64, balance: f64) -> Result<Self> {
        if !(balance > 0.0 && balance <= 1.0) {
            return Err(domain(format!("balance min/max must lie in (0, 1], got {balance}")));
        }
        Self::new(total / (1.0 + balance), total * balance / (1.0 + balance))
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    /// `A = n1 + n2`
    pub fn total(&self) -> f64 {
        self.n1 + self.n2
    }

    /// `B = 2√(n1 n2)`
    pub fn coupling(&self) -> f64 {
        2.0 * (self.n1 * self.n2).sqrt()
    }

    /// `R = max/min`, undefined unless both components are populated.
    pub fn ratio(&self) -> Option<f64> {
        let (lo, hi) = self.ordered();
        (lo > 0.0).then(|| hi / lo)
    }

    /// `q = min/max = 1/R`.
    pub fn balance(&self) -> Option<f64> {
        let (lo, hi) = self.ordered();
        (lo > 0.0).then(|| lo / hi)
    }

    fn ordered(&self) -> (f64, f64) {
        if self.n1 <= self.n2 {
            (self.n1, self.n2)
        } else {
            (self.n2, self.n1)
        }
    }
}

fn check_mean(what: &str, mean: f64) -> Result<()> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(domain(format!("{what} must be finite and nonnegative, got {mean}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec {
    transmissivity: f64,
}

impl BeamSplitterSpec {
    pub fn new(transmissivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(domain(format!(
                "transmissivity must lie in [0, 1], got {transmissivity}"
            )));
        }
        Ok(Self { transmissivity })
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Transmitted,
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffMode {
    Automatic,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPolicy {
    pub mode: CutoffMode,
    pub tail_target: f64,
}

impl CutoffPolicy {
    pub fn fixed(n_max: usize) -> Self {
        Self {
            mode: CutoffMode::Fixed(n_max),
            ..Self::default()
        }
    }
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self {
            mode: CutoffMode::Automatic,
            tail_target: DEFAULT_TAIL_TARGET,
        }
    }
}

/// Distribution whose tail dominates the truncated mass.
#[derive(Debug, Clone, Copy)]
enum Envelope {
    /// Mixtures of Poissonians with intensity at most the given value.
    Poisson(f64),
    Geometric(f64),
}

impl Envelope {
    /// Upper bound on `P(n > n_max)`.
    fn tail_above(self, n_max: usize) -> f64 {
        match self {
            Envelope::Poisson(lambda) => {
                if lambda <= 0.0 {
                    return 0.0;
                }
                let m = (n_max + 1) as f64;
                if m + 1.0 <= lambda {
                    return 1.0;
                }
                // p_{m+j} / p_{m+j-1} ≤ λ/(m+1) for j ≥ 1
                let p_m = poisson_pmf_ln(m, lambda, log_gamma(m + 1.0).expect("m + 1 > 0")).exp();
                (p_m / (1.0 - lambda / (m + 1.0))).min(1.0)
            }
            Envelope::Geometric(mean) => {
                if mean <= 0.0 {
                    return 0.0;
                }
                geometric_ratio(mean).powf((n_max + 1) as f64)
            }
        }
    }
}

fn geometric_ratio(mean: f64) -> f64 {
    mean / (1.0 + mean)
}

impl CutoffPolicy {
    fn resolve(&self, mean: f64, envelope: Envelope) -> Result<usize> {
        match self.mode {
            CutoffMode::Fixed(n) => Ok(n),
            CutoffMode::Automatic => {
                if !(self.tail_target > 0.0 && self.tail_target <= 1e-10) {
                    return Err(domain(format!(
                        "automatic cutoff needs a tail target in (0, 1e-10], got {}",
                        self.tail_target
                    )));
                }
                let mut n = (mean + 12.0 * (mean + 1.0).sqrt() + 30.0).ceil() as usize;
                if let Envelope::Geometric(m) = envelope {
                    if m > 0.0 {
                        let needed = (self.tail_target.ln() / geometric_ratio(m).ln()).ceil() as usize;
                        n = n.max(needed);
                    }
                }
                while envelope.tail_above(n) > self.tail_target {
                    n += 1 + n / 16;
                }
                Ok(n)
            }
        }
    }

    fn finish(&self, mut probs: Vec<f64>, envelope: Envelope) -> PhotonDistribution {
        let n_max = probs.len() - 1;
        let analytic = envelope.tail_above(n_max);
        let deficit = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        let tail_bound = if analytic <= NORMALIZATION_TOL {
            analytic
        } else {
            deficit
        };
        if self.mode == CutoffMode::Automatic {
            while probs.len() > 1 && probs.last() == Some(&0.0) {
                probs.pop();
            }
        }
        PhotonDistribution { probs, tail_bound }
    }
}

fn poisson_pmf_ln(n: f64, lambda: f64, ln_n_fact: f64) -> f64 {
    n * lambda.ln() - lambda - ln_n_fact
}

/// Poissonian entries `e^{-λ} λ^n / n!` written into `out`, computed in log space.
fn poisson_row(lambda: f64, ln_fact: &[f64], out: &mut [f64]) {
    if lambda <= 0.0 {
        out.iter_mut().for_each(|p| *p = 0.0);
        out[0] = 1.0;
        return;
    }
    for (n, p) in out.iter_mut().enumerate() {
        *p = poisson_pmf_ln(n as f64, lambda, ln_fact[n]).exp();
    }
}

/// Photon statistics of a PHAV: Poissonian with mean `N`.
pub fn poisson_distribution(params: PhavParams, cutoff: CutoffPolicy) -> Result<PhotonDistribution> {
    let lambda = params.mean();
    let envelope = Envelope::Poisson(lambda);
    let n_max = cutoff.resolve(lambda, envelope)?;
    let ln_fact = ln_factorials(n_max);
    let mut probs = vec![0.0; n_max + 1];
    poisson_row(lambda, &ln_fact, &mut probs);
    Ok(cutoff.finish(probs, envelope))
}

/// Thermal statistics `τ_n = N^n / (1+N)^{n+1}`.
pub fn thermal_distribution(mean: f64, cutoff: CutoffPolicy) -> Result<PhotonDistribution> {
    check_mean("thermal mean", mean)?;
    let envelope = Envelope::Geometric(mean);
    let n_max = cutoff.resolve(mean, envelope)?;
    let probs = if mean == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        v
    } else {
        let ln_ratio = mean.ln() - mean.ln_1p();
        let ln_first = -mean.ln_1p();
        (0..=n_max).map(|n| (ln_first + n as f64 * ln_ratio).exp()).collect()
    };
    Ok(cutoff.finish(probs, envelope))
}

/// Signed moments `M_k = (1/2π) ∫ cos^k φ · e^{-B cos φ} dφ`, `k = 0..=k_max`.
///
/// Even `k`: `Γ(k/2+1/2) / (√π Γ(k/2+1)) · 1F2(k/2+1/2; 1/2, k/2+1; B²/4)`.
/// Odd `k`: `−B Γ(k/2+1) / (√π Γ(k/2+3/2)) · 1F2(k/2+1; 3/2, k/2+3/2; B²/4)`.
fn cosine_moments(coupling: f64, k_max: usize) -> Result<Vec<f64>> {
    let z = 0.25 * coupling * coupling;
    let half_ln_pi = 0.5 * std::f64::consts::PI.ln();
    (0..=k_max)
        .map(|k| {
            let h = 0.5 * k as f64;
            let wrap = |e: Error| match e {
                Error::SeriesNotConverged { partial_sum, terms } => Error::TwoPhavSeries {
                    n: k,
                    k,
                    partial_sum,
                    terms,
                },
                other => other,
            };
            if k % 2 == 0 {
                let pre = (log_gamma(h + 0.5)? - half_ln_pi - log_gamma(h + 1.0)?).exp();
                Ok(pre * specfun::hyp1f2(h + 0.5, 0.5, h + 1.0, z).map_err(wrap)?)
            } else {
                let pre = (log_gamma(h + 1.0)? - half_ln_pi - log_gamma(h + 1.5)?).exp();
                Ok(-coupling * pre * specfun::hyp1f2(h + 1.0, 1.5, h + 1.5, z).map_err(wrap)?)
            }
        })
        .collect()
}

/// Closed-form 2-PHAV entries: `p_n = Σ_k Pois_{n−k}(A) · (B^k/k!) · M_k(B)`,
/// the binomial expansion of the phase-averaged Poissonian.
fn two_phav_series(total: f64, coupling: f64, n_max: usize) -> Result<Vec<f64>> {
    let ln_fact = ln_factorials(n_max);
    let mut pois = vec![0.0; n_max + 1];
    poisson_row(total, &ln_fact, &mut pois);
    let moments = cosine_moments(coupling, n_max)?;
    let ln_b = coupling.ln();
    let weighted: Vec<f64> = moments
        .iter()
        .enumerate()
        .map(|(k, m)| (k as f64 * ln_b - ln_fact[k]).exp() * m)
        .collect();
    Ok((0..=n_max)
        .map(|n| {
            let p: f64 = (0..=n).map(|k| pois[n - k] * weighted[k]).sum();
            p.max(0.0)
        })
        .collect())
}

fn two_phav_quadrature_sum(total: f64, coupling: f64, n_max: usize, nodes: usize) -> Vec<f64> {
    let ln_fact = ln_factorials(n_max);
    quad::phase_average(n_max + 1, nodes, |phi, out| {
        poisson_row((total + coupling * phi.cos()).max(0.0), &ln_fact, out)
    })
}

fn two_phav_quadrature_adaptive(total: f64, coupling: f64, n_max: usize) -> Result<Vec<f64>> {
    let ln_fact = ln_factorials(n_max);
    quad::phase_average_adaptive(n_max + 1, &QuadratureControl::default(), |phi, out| {
        poisson_row((total + coupling * phi.cos()).max(0.0), &ln_fact, out)
    })
    .map(|(v, _)| v)
}

/// `Q_k = (1/2π) ∫ Pois_k(2B cos²(φ/2)) dφ
///      = (2B)^k/k! · Γ(k+1/2)/(√π k!) · e^{−2B} 1F1(1/2; k+1; 2B)`,
/// summed in log space. Every term is positive.
fn half_angle_weights(coupling: f64, k_max: usize) -> Result<Vec<f64>> {
    let x = 2.0 * coupling;
    let ln_x = x.ln();
    let ln_fact = ln_factorials(k_max);
    let half_ln_pi = 0.5 * std::f64::consts::PI.ln();
    let max_terms = (x + 40.0 * x.sqrt() + 200.0) as usize;
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let ln_pre = kf * ln_x - 2.0 * ln_fact[k] + log_gamma(kf + 0.5)? - half_ln_pi - x;
            let b = kf + 1.0;
            let mut ln_t = 0.0;
            let mut sum = 0.0;
            for j in 0..max_terms {
                let jf = j as f64;
                let term = (ln_pre + ln_t).exp();
                sum += term;
                // past the peak and negligible
                if jf > x && term <= 1e-17 * sum {
                    return Ok(sum);
                }
                ln_t += ((0.5 + jf) * x / ((b + jf) * (jf + 1.0))).ln();
            }
            Err(Error::TwoPhavSeries {
                n: k_max,
                k,
                partial_sum: sum,
                terms: max_terms,
            })
        })
        .collect()
}

/// 2-PHAV entries from `A + B cos φ = (√n1 − √n2)² + 2B cos²(φ/2)`:
/// `p_n = Σ_k Pois_{n−k}((√n1 − √n2)²) · Q_k`.
fn two_phav_half_angle_series(params: TwoPhavParams, n_max: usize) -> Result<Vec<f64>> {
    let gap = (params.n1().sqrt() - params.n2().sqrt()).powi(2);
    let mut pois = vec![0.0; n_max + 1];
    poisson_row(gap, &ln_factorials(n_max), &mut pois);
    let weights = half_angle_weights(params.coupling(), n_max)?;
    Ok((0..=n_max)
        .map(|n| (0..=n).map(|k| pois[n - k] * weights[k]).sum())
        .collect())
}

/// Raw 2-PHAV entries on `0..=n_max`.
fn two_phav_probs(params: TwoPhavParams, n_max: usize) -> Result<Vec<f64>> {
    let (total, coupling) = (params.total(), params.coupling());
    if coupling == 0.0 {
        let mut probs = vec![0.0; n_max + 1];
        poisson_row(total, &ln_factorials(n_max), &mut probs);
        Ok(probs)
    } else if coupling <= ALTERNATING_SERIES_MAX_COUPLING {
        two_phav_series(total, coupling, n_max)
    } else if coupling <= CLOSED_FORM_MAX_COUPLING {
        two_phav_half_angle_series(params, n_max)
    } else {
        two_phav_quadrature_adaptive(total, coupling, n_max)
    }
}

fn two_phav_envelope(params: TwoPhavParams) -> Envelope {
    Envelope::Poisson(params.total() + params.coupling())
}

/// 2-PHAV photon statistics from the closed-form series.
///
/// With one component empty this reduces to [`poisson_distribution`]. Small
/// couplings use the `1F2` cosine-moment series, larger ones an equivalent
/// positive-term series, and couplings above [`CLOSED_FORM_MAX_COUPLING`] the
/// phase average itself.
pub fn two_phav_distribution(params: TwoPhavParams, cutoff: CutoffPolicy) -> Result<PhotonDistribution> {
    let envelope = two_phav_envelope(params);
    let n_max = cutoff.resolve(params.total(), envelope)?;
    let probs = two_phav_probs(params, n_max)?;
    Ok(cutoff.finish(probs, envelope))
}

/// 2-PHAV statistics as the phase average `(1/2π) ∫ Pois_n(A + B cos φ) dφ`
/// on `nodes` uniform nodes.
pub fn two_phav_by_quadrature(params: TwoPhavParams, cutoff: CutoffPolicy, nodes: usize) -> Result<PhotonDistribution> {
    quad::check_nodes(nodes)?;
    let envelope = two_phav_envelope(params);
    let n_max = cutoff.resolve(params.total(), envelope)?;
    let probs = two_phav_quadrature_sum(params.total(), params.coupling(), n_max, nodes);
    Ok(cutoff.finish(probs, envelope))
}

/// Binomial detection map `p_m = Σ_{n≥m} C(n,m) η^m (1−η)^{n−m} p_n`.
pub fn apply_loss(dist: &PhotonDistribution, efficiency: f64) -> Result<PhotonDistribution> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(domain(format!("efficiency must lie in [0, 1], got {efficiency}")));
    }
    if efficiency == 1.0 {
        return Ok(dist.clone());
    }
    let n_max = dist.n_max();
    let mut out = vec![0.0; n_max + 1];
    if efficiency == 0.0 {
        out[0] = dist.total();
    } else {
        let ln_fact = ln_factorials(n_max);
        let ln_eta = efficiency.ln();
        let ln_loss = (-efficiency).ln_1p();
        for (n, &p) in dist.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
                let ln_w = ln_fact[n] - ln_fact[m] - ln_fact[n - m] + m as f64 * ln_eta + (n - m) as f64 * ln_loss;
                *slot += ln_w.exp() * p;
            }
        }
    }
    Ok(PhotonDistribution {
        probs: out,
        tail_bound: dist.tail_bound(),
    })
}

/// Component means at one output port of a beam splitter fed by PHAVs of
/// means `beta_sq` and `beta_tilde_sq`.
pub fn bs_output_params(beta_sq: f64, beta_tilde_sq: f64, bs: BeamSplitterSpec, port: Port) -> Result<TwoPhavParams> {
    let t = bs.transmissivity();
    match port {
        Port::Transmitted => TwoPhavParams::new(t * beta_sq, (1.0 - t) * beta_tilde_sq),
        Port::Reflected => TwoPhavParams::new((1.0 - t) * beta_sq, t * beta_tilde_sq),
    }
}

/// Statistics of a PHAV displaced by a coherent probe with `|α|² = probe_mean`.
/// Phase randomization makes this a 2-PHAV with components `(N, |α|²)`.
pub fn displaced_phav_distribution(
    state: PhavParams,
    probe_mean: f64,
    cutoff: CutoffPolicy,
) -> Result<PhotonDistribution> {
    two_phav_distribution(TwoPhavParams::new(state.mean(), probe_mean)?, cutoff)
}

/// Second-component intensity seen at phase `φ`: `|√P − √n2 e^{iφ}|²`.
fn displaced_component(probe_mean: f64, n2: f64, phi: f64) -> f64 {
    (probe_mean + n2 - 2.0 * (probe_mean * n2).sqrt() * phi.cos()).max(0.0)
}

struct DisplacedTwoPhav {
    state: TwoPhavParams,
    probe_mean: f64,
    envelope: Envelope,
    n_max: usize,
}

impl DisplacedTwoPhav {
    fn new(state: TwoPhavParams, probe_mean: f64, cutoff: &CutoffPolicy) -> Result<Self> {
        check_mean("probe mean", probe_mean)?;
        let amp = state.n1().sqrt() + state.n2().sqrt() + probe_mean.sqrt();
        let envelope = Envelope::Poisson(amp * amp);
        let n_max = cutoff.resolve(state.total() + probe_mean, envelope)?;
        Ok(Self {
            state,
            probe_mean,
            envelope,
            n_max,
        })
    }

    /// Whether the double phase average collapses to a single 2-PHAV.
    fn collapsed(&self) -> Option<TwoPhavParams> {
        if self.state.n2() == 0.0 {
            Some(TwoPhavParams {
                n1: self.state.n1(),
                n2: self.probe_mean,
            })
        } else if self.probe_mean == 0.0 {
            Some(self.state)
        } else {
            None
        }
    }

    fn inner(&self, phi: f64) -> Result<Vec<f64>> {
        let second = displaced_component(self.probe_mean, self.state.n2(), phi);
        two_phav_probs(
            TwoPhavParams {
                n1: self.state.n1(),
                n2: second,
            },
            self.n_max,
        )
    }
}

/// Statistics of a 2-PHAV displaced by a coherent probe of mean `probe_mean`,
/// as a trapezoid phase average over the second component:
/// `p_m = (1/2π) ∫ [2-PHAV(n1, P + n2 − 2√(P n2) cos φ)]_m dφ`.
pub fn displaced_two_phav_distribution(
    state: TwoPhavParams,
    probe_mean: f64,
    cutoff: CutoffPolicy,
    nodes: usize,
) -> Result<PhotonDistribution> {
    quad::check_nodes(nodes)?;
    let d = DisplacedTwoPhav::new(state, probe_mean, &cutoff)?;
    if let Some(params) = d.collapsed() {
        return two_phav_distribution(params, cutoff);
    }
    let mut acc = vec![0.0; d.n_max + 1];
    for j in 0..nodes {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        for (a, p) in acc.iter_mut().zip(d.inner(phi)?) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= nodes as f64);
    Ok(cutoff.finish(acc, d.envelope))
}

/// [`displaced_two_phav_distribution`] with node doubling under `control`.
pub fn displaced_two_phav_adaptive(
    state: TwoPhavParams,
    probe_mean: f64,
    cutoff: CutoffPolicy,
    control: &QuadratureControl,
) -> Result<PhotonDistribution> {
    let d = DisplacedTwoPhav::new(state, probe_mean, &cutoff)?;
    if let Some(params) = d.collapsed() {
        return two_phav_distribution(params, cutoff);
    }
    let failure = RefCell::new(None);
    let result = quad::phase_average_adaptive(d.n_max + 1, control, |phi, out| match d.inner(phi) {
        Ok(v) => out.copy_from_slice(&v),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let (probs, _) = result?;
    Ok(cutoff.finish(probs, d.envelope))
}

/// Mean, purity `Σp²` and Shannon entropy `−Σ p ln p` (with `0 ln 0 = 0`).
pub fn distribution_stats(dist: &PhotonDistribution) -> DistributionStats {
    let mut mean = 0.0;
    let mut purity = 0.0;
    let mut entropy = 0.0;
    for (n, &p) in dist.probs().iter().enumerate() {
        mean += n as f64 * p;
        purity += p * p;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    DistributionStats { mean, purity, entropy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn auto() -> CutoffPolicy {
        CutoffPolicy::default()
    }

    fn phav(n: f64) -> PhotonDistribution {
        poisson_distribution(PhavParams::new(n).unwrap(), auto()).unwrap()
    }

    fn two(n1: f64, n2: f64) -> PhotonDistribution {
        two_phav_distribution(TwoPhavParams::new(n1, n2).unwrap(), auto()).unwrap()
    }

    fn max_diff(a: &PhotonDistribution, b: &PhotonDistribution) -> f64 {
        let len = a.probs().len().max(b.probs().len());
        (0..len).map(|n| (a.get(n) - b.get(n)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(phav(0.0).probs(), &[1.0]);
        let d = phav(1.0);
        assert_relative_eq!(d.get(0), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(d.get(1), (-1.0f64).exp(), max_relative = 1e-15);
        assert!((phav(1.97).mean() - 1.97).abs() < 1e-9);
    }

    #[test]
    fn poisson_entries_match_direct_products() {
        for lambda in [0.3, 1.97, 7.5, 25.0] {
            let d = phav(lambda);
            let mut direct = (-lambda).exp();
            for n in 0..=60.min(d.n_max()) {
                if n > 0 {
                    direct *= lambda / n as f64;
                }
                assert!(((d.get(n) - direct) / direct).abs() <= 1e-13, "λ = {lambda}, n = {n}");
            }
        }
    }

    #[test]
    fn thermal_examples() {
        assert_eq!(thermal_distribution(0.0, auto()).unwrap().probs(), &[1.0]);
        let t = thermal_distribution(1.0, auto()).unwrap();
        assert_relative_eq!(t.get(0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(t.get(1), 0.25, max_relative = 1e-15);
        assert_relative_eq!(t.get(2), 0.125, max_relative = 1e-15);
        let s = thermal_distribution(1.97, auto()).unwrap().stats();
        assert!((s.purity - 1.0 / (2.0 * 1.97 + 1.0)).abs() < 1e-10);
        assert!((s.purity - 0.202_429_1).abs() < 1e-7);
    }

    #[test]
    fn constructors_respect_tail_policy() {
        for d in [
            phav(0.5),
            phav(30.0),
            thermal_distribution(10.0, auto()).unwrap(),
            two(1.03, 0.91),
            two(4.0, 4.0),
            two(12.0, 9.0),
        ] {
            assert!(d.normalization_error() <= NORMALIZATION_TOL);
            assert!(d.tail_bound() <= 1e-10);
        }
    }

    #[test]
    fn fixed_cutoff_reports_truncated_mass() {
        let d = poisson_distribution(PhavParams::new(3.0).unwrap(), CutoffPolicy::fixed(2)).unwrap();
        assert_eq!(d.probs().len(), 3);
        let kept: f64 = (0..3)
            .map(|n| (-3.0f64).exp() * 3f64.powi(n) / [1.0, 1.0, 2.0][n as usize])
            .sum();
        assert_relative_eq!(d.tail_bound(), 1.0 - kept, max_relative = 1e-12);
        assert!(d.normalization_error() <= NORMALIZATION_TOL);
    }

    // Independent oracle: mean-value phase average with a huge node count and
    // direct-product Poisson weights.
    fn two_phav_oracle(n1: f64, n2: f64, n_max: usize) -> Vec<f64> {
        let nodes = 8192;
        let (a, b) = (n1 + n2, 2.0 * (n1 * n2).sqrt());
        let mut acc = vec![0.0; n_max + 1];
        for j in 0..nodes {
            let lambda = (a + b * (2.0 * PI * j as f64 / nodes as f64).cos()).max(0.0);
            let mut p = (-lambda).exp();
            for (n, slot) in acc.iter_mut().enumerate() {
                if n > 0 {
                    p *= lambda / n as f64;
                }
                *slot += p;
            }
        }
        acc.iter().map(|v| v / nodes as f64).collect()
    }

    #[test]
    fn two_phav_examples() {
        // one component empty
        assert_eq!(two(0.0, 2.5), phav(2.5));
        // n = 0 entry is e^{-A} I0(B)
        let d = two(1.0, 1.0);
        let p0 = (-2.0f64).exp() * specfun::bessel_i0_scaled(2.0).unwrap() * 2f64.exp();
        assert_relative_eq!(d.get(0), p0, max_relative = 1e-13);
        // full vector against the oracle
        let d = two(1.03, 0.91);
        let oracle = two_phav_oracle(1.03, 0.91, d.n_max());
        for (n, o) in oracle.iter().enumerate() {
            assert!((d.get(n) - o).abs() <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn two_phav_closed_form_agrees_with_quadrature() {
        for (n1, n2) in [(2.0, 2.0), (0.5, 4.0), (4.0, 4.0), (3.0, 0.1)] {
            let p = TwoPhavParams::new(n1, n2).unwrap();
            let closed = two_phav_distribution(p, auto()).unwrap();
            let quad = two_phav_by_quadrature(p, auto(), 256).unwrap();
            assert!(max_diff(&closed, &quad) <= 1e-9, "({n1}, {n2})");
        }
    }

    #[test]
    fn two_phav_large_coupling_matches_oracle() {
        for (n1, n2) in [(10.0, 9.0), (25.0, 25.0), (60.0, 3.0)] {
            let d = two(n1, n2);
            let oracle = two_phav_oracle(n1, n2, d.n_max());
            for (n, o) in oracle.iter().enumerate() {
                assert!((d.get(n) - o).abs() <= 1e-12, "({n1}, {n2}) n = {n}");
            }
        }
        let d = two(6000.0, 5000.0);
        assert!(TwoPhavParams::new(6000.0, 5000.0).unwrap().coupling() > CLOSED_FORM_MAX_COUPLING);
        assert!(d.normalization_error() <= NORMALIZATION_TOL);
        assert!((d.mean() - 11000.0).abs() < 1e-6);
    }

    #[test]
    fn series_routes_agree_at_switch() {
        // both series at couplings around the switch point
        for (n1, n2) in [(4.0, 1.0), (2.0, 2.0), (1.0, 3.9)] {
            let p = TwoPhavParams::new(n1, n2).unwrap();
            let alt = two_phav_series(p.total(), p.coupling(), 60).unwrap();
            let pos = two_phav_half_angle_series(p, 60).unwrap();
            for (a, b) in alt.iter().zip(&pos) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let p = TwoPhavParams::new(0.0, 1.7).unwrap();
        let q = two_phav_by_quadrature(p, auto(), 64).unwrap();
        assert!(max_diff(&q, &phav(1.7)) < 1e-15);
        let q = two_phav_by_quadrature(TwoPhavParams::new(1.0, 1.0).unwrap(), auto(), 128).unwrap();
        let p0 = (-2.0f64).exp() * specfun::bessel_i0_scaled(2.0).unwrap() * 2f64.exp();
        assert_relative_eq!(q.get(0), p0, max_relative = 1e-13);
        assert!(two_phav_by_quadrature(p, auto(), 32).is_err());
    }

    #[test]
    fn two_phav_is_bimodal_when_balanced() {
        let d = two(3.0, 3.0);
        let p = d.probs();
        let has_valley =
            (1..p.len() - 1).any(|j| p[..j].iter().any(|&pi| pi > p[j]) && p[j + 1..].iter().any(|&pk| pk > p[j]));
        assert!(has_valley);
    }

    #[test]
    fn loss_examples() {
        let d = two(1.2, 0.4);
        assert_eq!(apply_loss(&d, 1.0).unwrap(), d);
        for eta in [0.25, 0.5, 0.9] {
            let thinned = apply_loss(&phav(3.0), eta).unwrap();
            assert!(max_diff(&thinned, &phav(3.0 * eta)) <= 1e-12);
            let thinned = apply_loss(&two(1.4, 2.2), eta).unwrap();
            assert!(max_diff(&thinned, &two(1.4 * eta, 2.2 * eta)) <= 1e-9);
        }
        let all_lost = apply_loss(&phav(2.0), 0.0).unwrap();
        assert!((all_lost.get(0) - phav(2.0).total()).abs() < 1e-15);
        assert!(apply_loss(&d, 1.5).is_err());
    }

    #[test]
    fn beam_splitter_ports() {
        let p = bs_output_params(4.0, 1.0, BeamSplitterSpec::new(1.0).unwrap(), Port::Transmitted).unwrap();
        assert_eq!((p.n1(), p.n2()), (4.0, 0.0));
        let p = bs_output_params(4.0, 1.0, BeamSplitterSpec::new(0.5).unwrap(), Port::Transmitted).unwrap();
        assert_eq!((p.n1(), p.n2()), (2.0, 0.5));
        let p = bs_output_params(4.0, 1.0, BeamSplitterSpec::new(0.3).unwrap(), Port::Reflected).unwrap();
        assert_relative_eq!(p.n1(), 2.8, max_relative = 1e-15);
        assert_relative_eq!(p.n2(), 0.3, max_relative = 1e-15);
        assert!(BeamSplitterSpec::new(1.1).is_err());
    }

    #[test]
    fn two_phav_param_helpers() {
        let p = TwoPhavParams::new(1.24, 1.0).unwrap();
        assert_relative_eq!(p.ratio().unwrap(), 1.24);
        assert_relative_eq!(p.balance().unwrap(), 1.0 / 1.24);
        assert!(p.total() >= p.coupling());
        assert_eq!(TwoPhavParams::new(0.0, 2.0).unwrap().ratio(), None);
        let q = TwoPhavParams::from_total_and_ratio(4.12, 1.24).unwrap();
        assert_relative_eq!(q.total(), 4.12, max_relative = 1e-15);
        assert_relative_eq!(q.ratio().unwrap(), 1.24, max_relative = 1e-14);
        let q = TwoPhavParams::from_total_and_balance(4.12, 0.25).unwrap();
        assert_relative_eq!(q.balance().unwrap(), 0.25, max_relative = 1e-14);
        assert!(TwoPhavParams::new(-1.0, 1.0).is_err());
        assert!(TwoPhavParams::from_total_and_balance(1.0, 0.0).is_err());
    }

    #[test]
    fn displaced_phav_examples() {
        let s = PhavParams::new(1.97).unwrap();
        assert_eq!(displaced_phav_distribution(s, 0.0, auto()).unwrap(), phav(1.97));
        let vac = PhavParams::new(0.0).unwrap();
        assert_eq!(displaced_phav_distribution(vac, 0.8, auto()).unwrap(), phav(0.8));
        let d = displaced_phav_distribution(s, 1.0, auto()).unwrap();
        let oracle = two_phav_oracle(1.97, 1.0, d.n_max());
        for (n, o) in oracle.iter().enumerate() {
            assert!((d.get(n) - o).abs() <= 1e-12);
        }
    }

    // Brute-force double phase average of Poisson(|b1 e^{iφ1} + b2 e^{iφ2} − a|²).
    fn displaced_two_phav_oracle(n1: f64, n2: f64, probe: f64, n_max: usize) -> Vec<f64> {
        let nodes = 512;
        let (b1, b2, a) = (n1.sqrt(), n2.sqrt(), probe.sqrt());
        let mut acc = vec![0.0; n_max + 1];
        for j in 0..nodes {
            for l in 0..nodes {
                let (p1, p2) = (2.0 * PI * j as f64 / nodes as f64, 2.0 * PI * l as f64 / nodes as f64);
                let re = b1 * p1.cos() + b2 * p2.cos() - a;
                let im = b1 * p1.sin() + b2 * p2.sin();
                let lambda = re * re + im * im;
                let mut p = (-lambda).exp();
                for (n, slot) in acc.iter_mut().enumerate() {
                    if n > 0 {
                        p *= lambda / n as f64;
                    }
                    *slot += p;
                }
            }
        }
        acc.iter().map(|v| v / (nodes * nodes) as f64).collect()
    }

    #[test]
    fn displaced_two_phav_examples() {
        let s = TwoPhavParams::new(1.03, 0.0).unwrap();
        assert_eq!(
            displaced_two_phav_distribution(s, 0.6, auto(), 256).unwrap(),
            displaced_phav_distribution(PhavParams::new(1.03).unwrap(), 0.6, auto()).unwrap()
        );
        let s = TwoPhavParams::new(1.03, 0.91).unwrap();
        assert_eq!(
            displaced_two_phav_distribution(s, 0.0, auto(), 256).unwrap(),
            two(1.03, 0.91)
        );

        let d = displaced_two_phav_distribution(s, 1.0, auto(), 256).unwrap();
        let oracle = displaced_two_phav_oracle(1.03, 0.91, 1.0, d.n_max());
        for (n, o) in oracle.iter().enumerate() {
            assert!((d.get(n) - o).abs() <= 1e-10, "n = {n}: {} vs {o}", d.get(n));
        }
        let adaptive = displaced_two_phav_adaptive(s, 1.0, auto(), &QuadratureControl::default()).unwrap();
        assert!(max_diff(&adaptive, &d) <= 1e-11);
    }

    #[test]
    fn stats_examples() {
        let s = PhotonDistribution::vacuum().stats();
        assert_eq!((s.mean, s.purity, s.entropy), (0.0, 1.0, 0.0));
        let s = thermal_distribution(1.0, auto()).unwrap().stats();
        assert!((s.entropy - 2.0 * 2f64.ln()).abs() < 1e-12);
        // direct summation at n_max = 200
        let mut p = (-1.97f64).exp();
        let mut h = 0.0;
        for n in 0..=200 {
            if n > 0 {
                p *= 1.97 / n as f64;
            }
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        assert!((phav(1.97).stats().entropy - h).abs() < 1e-13);
    }

    #[test]
    fn distribution_validation() {
        assert!(PhotonDistribution::new(vec![], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![0.5, -0.1], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![0.5, f64::NAN], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![1.0], -1.0).is_err());
        assert!(PhotonDistribution::new(vec![0.5, 0.5], 0.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn normalization(n1 in 0.0f64..6.0, n2 in 0.0f64..6.0) {
                let d = two(n1, n2);
                prop_assert!(d.normalization_error() <= NORMALIZATION_TOL);
                prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
            }

            #[test]
            fn mean_conservation(n1 in 0.0f64..6.0, n2 in 0.0f64..6.0) {
                prop_assert!((two(n1, n2).mean() - (n1 + n2)).abs() <= 1e-9);
            }

            #[test]
            fn symmetry(n1 in 0.0f64..6.0, n2 in 0.0f64..6.0) {
                prop_assert_eq!(two(n1, n2), two(n2, n1));
            }

            #[test]
            fn loss_composes(n1 in 0.0f64..5.0, n2 in 0.0f64..5.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
                let d = two(n1, n2);
                let twice = apply_loss(&apply_loss(&d, e1).unwrap(), e2).unwrap();
                let once = apply_loss(&d, e1 * e2).unwrap();
                prop_assert!(max_diff(&twice, &once) <= 1e-10);
                prop_assert!((once.mean() - e1 * e2 * d.mean()).abs() <= 1e-10);
            }

            #[test]
            fn poisson_normalization(n in 0.0f64..50.0) {
                let d = phav(n);
                prop_assert!(d.normalization_error() <= NORMALIZATION_TOL);
                prop_assert!((d.mean() - n).abs() <= 1e-9);
            }
        }
    }
}
