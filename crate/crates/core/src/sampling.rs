//! Shot-level sampling of photon-number distributions and bootstrap error
//! bars for the detected-photon measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::measures::{epsilon_pair, NonGResult};
use crate::states::PhotonDistribution;

/// Generator used for every random draw, reported in output metadata.
pub const RNG_NAME: &str = "ChaCha20Rng (rand_chacha 0.9)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Generator for stream `stream` of this seed. Stream 0 draws shots,
    /// stream `i + 1` drives bootstrap resample `i`.
    fn rng(self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Number of shots that landed on each photon number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountHistogram {
    counts: Vec<u64>,
    shots: u64,
}

impl CountHistogram {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(domain("a count histogram needs at least one shot"));
        }
        Ok(Self { counts, shots })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// `shots` i.i.d. draws by inverse CDF over the truncated distribution.
pub fn sample_counts(dist: &PhotonDistribution, shots: u64, seed: RngSeed) -> Result<CountHistogram> {
    if shots == 0 {
        return Err(domain("at least one shot is required"));
    }
    let total = dist.total();
    if total <= 0.0 {
        return Err(domain("cannot sample from an all-zero distribution"));
    }
    let mut running = 0.0;
    let cdf: Vec<f64> = dist
        .probs()
        .iter()
        .map(|p| {
            running += p / total;
            running
        })
        .collect();
    let last = cdf.len() - 1;
    let mut counts = vec![0u64; cdf.len()];
    let mut rng = seed.rng(0);
    for _ in 0..shots {
        let u: f64 = rng.random();
        let n = cdf.partition_point(|&c| c <= u).min(last);
        counts[n] += 1;
    }
    while counts.len() > 1 && counts.last() == Some(&0) {
        counts.pop();
    }
    CountHistogram::new(counts)
}

/// Relative frequencies `counts / shots`, with zero tail bound.
pub fn empirical_distribution(hist: &CountHistogram) -> PhotonDistribution {
    let shots = hist.shots() as f64;
    let probs = hist.counts().iter().map(|&c| c as f64 / shots).collect();
    PhotonDistribution::new(probs, 0.0).expect("frequencies are finite and nonnegative")
}

/// One multinomial resample of `hist`, drawn bin by bin from conditional
/// binomials.
fn multinomial_resample(hist: &CountHistogram, rng: &mut ChaCha20Rng) -> CountHistogram {
    let mut remaining = hist.shots();
    let mut mass_left = 1.0;
    let shots = hist.shots() as f64;
    let mut counts = Vec::with_capacity(hist.counts().len());
    for &c in hist.counts() {
        let p = c as f64 / shots;
        let k = if remaining == 0 || p == 0.0 {
            0
        } else if p >= mass_left {
            remaining
        } else {
            Binomial::new(remaining, (p / mass_left).min(1.0))
                .expect("probability lies in [0, 1]")
                .sample(rng)
        };
        counts.push(k);
        remaining -= k;
        mass_left -= p;
    }
    if remaining > 0 {
        // rounding left shots unassigned: put them on the last occupied bin
        let idx = counts.len() - 1 - hist.counts().iter().rev().position(|&c| c > 0).unwrap_or(0);
        counts[idx] += remaining;
    }
    CountHistogram {
        counts,
        shots: hist.shots(),
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Minimum number of bootstrap resamples.
pub const MIN_RESAMPLES: usize = 100;

/// `ε_A`, `ε_B` of the empirical distribution with bootstrap standard errors.
///
/// Each resample redraws the histogram multinomially from its own relative
/// frequencies; `stderr` is the standard deviation over resamples. Resample
/// `i` uses its own stream of the seed, so the result does not depend on how
/// the work is scheduled.
pub fn bootstrap_epsilon(hist: &CountHistogram, resamples: usize, seed: RngSeed) -> Result<(NonGResult, NonGResult)> {
    if resamples < MIN_RESAMPLES {
        return Err(domain(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if hist.occupied_bins() < 2 {
        return Err(Error::Degenerate(
            "bootstrap needs counts in at least two photon-number bins".into(),
        ));
    }
    let (mut ea, mut eb) = epsilon_pair(&empirical_distribution(hist))?;
    let draws: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.rng(i as u64 + 1);
            let resampled = multinomial_resample(hist, &mut rng);
            let (a, b) = epsilon_pair(&empirical_distribution(&resampled))?;
            Ok((a.value, b.value))
        })
        .collect::<Result<_>>()?;
    let a: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let b: Vec<f64> = draws.iter().map(|d| d.1).collect();
    ea.stderr = Some(sample_std(&a));
    eb.stderr = Some(sample_std(&b));
    Ok((ea, eb))
}
