//! Parameter sweeps of the detected-photon measures over PHAV and 2-PHAV
//! families.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::measures::epsilon_pair;
use crate::sampling::{bootstrap_epsilon, sample_counts, RngSeed};
use crate::states::{
    poisson_distribution, two_phav_distribution, CutoffPolicy, PhavParams, PhotonDistribution, TwoPhavParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    /// Single PHAV, grid over its mean.
    Phav,
    /// 2-PHAV with fixed component ratio, grid over the total mean.
    RatioFixed,
    /// 2-PHAV with fixed total mean, grid over the balance `min/max`.
    TotalFixed,
}

impl SweepFamily {
    pub fn label(self) -> &'static str {
        match self {
            SweepFamily::Phav => "phav",
            SweepFamily::RatioFixed => "ratio-fixed",
            SweepFamily::TotalFixed => "total-fixed",
        }
    }
}

impl fmt::Display for SweepFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phav" => Ok(SweepFamily::Phav),
            "ratio-fixed" => Ok(SweepFamily::RatioFixed),
            "total-fixed" => Ok(SweepFamily::TotalFixed),
            other => Err(Error::InvalidArgument(format!("unknown sweep family `{other}`"))),
        }
    }
}

/// How a component ratio is quoted: `Geq1` as max/min, `Leq1` as min/max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioConvention {
    #[default]
    Geq1,
    Leq1,
}

impl RatioConvention {
    /// The ratio as max/min.
    pub fn normalize(self, ratio: f64) -> Result<f64> {
        match self {
            RatioConvention::Geq1 if ratio >= 1.0 && ratio.is_finite() => Ok(ratio),
            RatioConvention::Leq1 if ratio > 0.0 && ratio <= 1.0 => Ok(1.0 / ratio),
            RatioConvention::Geq1 => Err(domain(format!("ratio must be >= 1 (max/min), got {ratio}"))),
            RatioConvention::Leq1 => Err(domain(format!("ratio must lie in (0, 1] (min/max), got {ratio}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    family: SweepFamily,
    fixed_value: Option<f64>,
    grid: Vec<f64>,
    efficiency: f64,
}

impl SweepSpec {
    /// `fixed_value` is the component ratio (already max/min) for
    /// `RatioFixed`, the total mean for `TotalFixed`, and absent for `Phav`.
    pub fn new(family: SweepFamily, fixed_value: Option<f64>, grid: Vec<f64>, efficiency: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(domain("sweep grid is empty"));
        }
        if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("sweep grid must be finite and strictly increasing"));
        }
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(domain(format!("efficiency must lie in [0, 1], got {efficiency}")));
        }
        match (family, fixed_value) {
            (SweepFamily::Phav, None) => {
                if grid[0] < 0.0 {
                    return Err(domain("PHAV means must be nonnegative"));
                }
            }
            (SweepFamily::Phav, Some(_)) => {
                return Err(Error::InvalidArgument("the phav family takes no fixed value".into()))
            }
            (SweepFamily::RatioFixed, Some(r)) => {
                if !(r.is_finite() && r >= 1.0) {
                    return Err(domain(format!("fixed ratio must be >= 1 as max/min, got {r}")));
                }
                if grid[0] < 0.0 {
                    return Err(domain("total means must be nonnegative"));
                }
            }
            (SweepFamily::TotalFixed, Some(t)) => {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(domain(format!("fixed total must be nonnegative, got {t}")));
                }
                if grid[0] <= 0.0 || grid[grid.len() - 1] > 1.0 {
                    return Err(domain("balance grid must lie in (0, 1]"));
                }
            }
            (family, None) => {
                return Err(Error::InvalidArgument(format!(
                    "the {family} family needs a fixed value"
                )))
            }
        }
        Ok(Self {
            family,
            fixed_value,
            grid,
            efficiency,
        })
    }

    pub fn family(&self) -> SweepFamily {
        self.family
    }

    pub fn fixed_value(&self) -> Option<f64> {
        self.fixed_value
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub swept_value: f64,
    pub epsilon_a: f64,
    pub epsilon_b: f64,
    pub stderr_a: Option<f64>,
    pub stderr_b: Option<f64>,
}

/// Detected-photon distribution at grid value `x`.
pub fn distribution_at(spec: &SweepSpec, x: f64) -> Result<PhotonDistribution> {
    let eta = spec.efficiency;
    let cutoff = CutoffPolicy::default();
    match (spec.family, spec.fixed_value) {
        (SweepFamily::Phav, _) => poisson_distribution(PhavParams::new(eta * x)?, cutoff),
        (SweepFamily::RatioFixed, Some(r)) => {
            two_phav_distribution(TwoPhavParams::from_total_and_ratio(eta * x, r)?, cutoff)
        }
        (SweepFamily::TotalFixed, Some(t)) => {
            two_phav_distribution(TwoPhavParams::from_total_and_balance(eta * t, x)?, cutoff)
        }
        _ => unreachable!("validated in SweepSpec::new"),
    }
}

/// One row per grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.grid
        .par_iter()
        .map(|&x| {
            let (a, b) = epsilon_pair(&distribution_at(spec, x)?)?;
            Ok(SweepRow {
                swept_value: x,
                epsilon_a: a.value,
                epsilon_b: b.value,
                stderr_a: None,
                stderr_b: None,
            })
        })
        .collect()
}

/// Like [`run_sweep`], but each row is estimated from `shots` simulated
/// detections with bootstrap standard errors. Grid point `i` uses seed
/// `seed + i`.
pub fn run_sweep_sampled(spec: &SweepSpec, shots: u64, resamples: usize, seed: RngSeed) -> Result<Vec<SweepRow>> {
    spec.grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let row_seed = RngSeed(seed.0.wrapping_add(i as u64));
            let hist = sample_counts(&distribution_at(spec, x)?, shots, row_seed)?;
            let (a, b) = bootstrap_epsilon(&hist, resamples, row_seed)?;
            Ok(SweepRow {
                swept_value: x,
                epsilon_a: a.value,
                epsilon_b: b.value,
                stderr_a: a.stderr,
                stderr_b: b.stderr,
            })
        })
        .collect()
}

/// Parses `start:stop:step` (both ends included when the step lands on
/// `stop`) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidArgument(format!("grid `{s}`: {msg}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("`{t}`: {e}")));
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && step.is_finite()) || stop < start || stop.is_nan() {
                return Err(bad("need stop >= start and a positive step".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            if count > 10_000_000 {
                return Err(bad("too many grid points".into()));
            }
            linspace_step(start, step, count + 1)
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list".into())),
    };
    Ok(grid)
}

fn linspace_step(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + i as f64 * step).collect()
}

/// One point of the measure-vs-measure chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure4Row {
    pub family: SweepFamily,
    /// Held parameter as labelled on the chart: none for PHAV, the ratio as
    /// min/max, or the total mean.
    pub fixed_param: Option<f64>,
    pub swept_value: f64,
    pub epsilon_a: f64,
    pub epsilon_b: f64,
}

/// Ratios (min/max) of the fixed-ratio curves.
pub const FIGURE4_RATIOS: [f64; 3] = [0.2, 0.5, 0.8];
/// Total means of the fixed-total curves.
pub const FIGURE4_TOTALS: [f64; 3] = [2.0, 4.0, 6.0];

/// Curve specifications of the chart: the PHAV curve, three fixed-ratio
/// curves over total mean and three fixed-total curves over balance.
pub fn figure4_specs() -> Vec<(Option<f64>, SweepSpec)> {
    let mut specs = vec![(
        None,
        SweepSpec::new(SweepFamily::Phav, None, linspace_step(0.01, 0.01, 800), 1.0).expect("valid grid"),
    )];
    for r in FIGURE4_RATIOS {
        let ratio = RatioConvention::Leq1.normalize(r).expect("valid ratio");
        let spec = SweepSpec::new(
            SweepFamily::RatioFixed,
            Some(ratio),
            linspace_step(0.05, 0.05, 160),
            1.0,
        );
        specs.push((Some(r), spec.expect("valid grid")));
    }
    for t in FIGURE4_TOTALS {
        let spec = SweepSpec::new(SweepFamily::TotalFixed, Some(t), linspace_step(0.02, 0.02, 50), 1.0);
        specs.push((Some(t), spec.expect("valid grid")));
    }
    specs
}

/// All seven curves of the chart in long format, curve by curve.
pub fn figure4_curves() -> Result<Vec<Figure4Row>> {
    let mut out = Vec::new();
    for (label, spec) in figure4_specs() {
        for row in run_sweep(&spec)? {
            out.push(Figure4Row {
                family: spec.family(),
                fixed_param: label,
                swept_value: row.swept_value,
                epsilon_a: row.epsilon_a,
                epsilon_b: row.epsilon_b,
            });
        }
    }
    Ok(out)
}
