//! Command-line front end: `dist`, `measure`, `wigner`, `sweep` and
//! `figure4`, writing CSV or JSON to a file or standard output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::measures::epsilon_pair;
use crate::sampling::{bootstrap_epsilon, empirical_distribution, sample_counts, RngSeed, RNG_NAME};
use crate::states::{
    poisson_distribution, thermal_distribution, two_phav_distribution, CutoffPolicy, PhavParams, PhotonDistribution,
    TwoPhavParams, NORMALIZATION_TOL,
};
use crate::sweep::{figure4_curves, parse_grid, run_sweep, run_sweep_sampled, RatioConvention, SweepFamily, SweepSpec};
use crate::wigner::{
    radial_profile, radial_profile_degraded, CoordinateConvention, OverlapParams, WignerMethod, WignerSample,
    WignerState,
};

#[derive(Debug, Parser)]
#[command(
    name = "phav",
    version,
    about = "Photon statistics, non-Gaussianity and Wigner functions of PHAV states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Photon-number distribution as `n,p` rows.
    Dist {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Non-Gaussianity measures as a JSON object.
    Measure {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Radial section of the Wigner function as `r,W` rows.
    Wigner {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        wigner: WignerArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measures along a one-parameter family as CSV.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The seven measure-vs-measure curves in long-format CSV.
    Figure4 {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Phav,
    TwoPhav,
    Thermal,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[arg(long, value_enum)]
    pub state: StateKind,
    /// Mean photon number (phav, thermal).
    #[arg(long)]
    pub mean: Option<f64>,
    /// First component mean (two-phav).
    #[arg(long)]
    pub n1: Option<f64>,
    /// Second component mean (two-phav).
    #[arg(long)]
    pub n2: Option<f64>,
    /// Detection efficiency in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// `auto` or a fixed largest photon number.
    #[arg(long, default_value = "auto", value_parser = parse_cutoff)]
    pub cutoff: CutoffPolicy,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Simulate this many detections instead of using exact statistics.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap resamples for standard errors.
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the generation-time line.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Quadrature,
    Parity,
}

impl From<MethodArg> for WignerMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Closed => WignerMethod::ClosedForm,
            MethodArg::Quadrature => WignerMethod::Quadrature,
            MethodArg::Parity => WignerMethod::ParityReconstruction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoordsArg {
    Nominal,
    Rescaled,
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[arg(long, value_enum, default_value = "closed")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 4.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 81)]
    pub steps: usize,
    /// Probe/PHAV mode overlap.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Probe/2-PHAV mode overlap.
    #[arg(long)]
    pub xi_p: Option<f64>,
    /// Overlap between the two 2-PHAV components.
    #[arg(long)]
    pub xi_s: Option<f64>,
    /// Reading of `r` in the overlap-degraded models.
    #[arg(long, value_enum, default_value = "nominal")]
    pub coords: CoordsArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Phav,
    RatioFixed,
    TotalFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RatioConventionArg {
    Geq1,
    Leq1,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Held ratio (ratio-fixed) or total mean (total-fixed).
    #[arg(long)]
    pub fixed: Option<f64>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum, default_value = "geq1")]
    pub ratio_convention: RatioConventionArg,
}

fn parse_cutoff(s: &str) -> std::result::Result<CutoffPolicy, String> {
    if s == "auto" {
        return Ok(CutoffPolicy::default());
    }
    s.parse::<usize>()
        .map(CutoffPolicy::fixed)
        .map_err(|_| format!("expected `auto` or a nonnegative integer, got `{s}`"))
}

/// State after detection losses, reduced to a canonical form: losses are
/// folded into the means, a 2-PHAV with an empty component is a PHAV, and
/// 2-PHAV components are ordered larger first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CanonicalState {
    Phav(f64),
    TwoPhav(f64, f64),
    Thermal(f64),
}

impl CanonicalState {
    pub fn from_args(args: &StateArgs) -> Result<Self> {
        let eta = args.eta;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("--eta must lie in [0, 1], got {eta}")));
        }
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("--state {:?} needs {flag}", args.state)))
        };
        let forbid = |v: Option<f64>, flag: &str| match v {
            Some(_) => Err(Error::InvalidArgument(format!("{flag} does not apply to this state"))),
            None => Ok(()),
        };
        let state = match args.state {
            StateKind::Phav | StateKind::Thermal => {
                forbid(args.n1, "--n1")?;
                forbid(args.n2, "--n2")?;
                let mean = need(args.mean, "--mean")?;
                PhavParams::new(mean)?;
                if args.state == StateKind::Phav {
                    CanonicalState::Phav(eta * mean)
                } else {
                    CanonicalState::Thermal(eta * mean)
                }
            }
            StateKind::TwoPhav => {
                forbid(args.mean, "--mean")?;
                let (n1, n2) = (need(args.n1, "--n1")?, need(args.n2, "--n2")?);
                TwoPhavParams::new(n1, n2)?;
                let (hi, lo) = if n1 >= n2 { (n1, n2) } else { (n2, n1) };
                if lo == 0.0 {
                    CanonicalState::Phav(eta * hi)
                } else {
                    CanonicalState::TwoPhav(eta * hi, eta * lo)
                }
            }
        };
        Ok(state)
    }

    pub fn distribution(&self, cutoff: CutoffPolicy) -> Result<PhotonDistribution> {
        match *self {
            CanonicalState::Phav(n) => poisson_distribution(PhavParams::new(n)?, cutoff),
            CanonicalState::TwoPhav(a, b) => two_phav_distribution(TwoPhavParams::new(a, b)?, cutoff),
            CanonicalState::Thermal(n) => thermal_distribution(n, cutoff),
        }
    }

    fn describe(&self) -> String {
        match *self {
            CanonicalState::Phav(n) => format!("state=phav mean={}", fmt_num(n)),
            CanonicalState::TwoPhav(a, b) => format!("state=two-phav n1={} n2={}", fmt_num(a), fmt_num(b)),
            CanonicalState::Thermal(n) => format!("state=thermal mean={}", fmt_num(n)),
        }
    }

    fn json_fields(&self, obj: &mut Map<String, Value>) {
        let (name, fields): (&str, Vec<(&str, f64)>) = match *self {
            CanonicalState::Phav(n) => ("phav", vec![("mean", n)]),
            CanonicalState::TwoPhav(a, b) => ("two-phav", vec![("n1", a), ("n2", b)]),
            CanonicalState::Thermal(n) => ("thermal", vec![("mean", n)]),
        };
        obj.insert("state".into(), json!(name));
        for (k, v) in fields {
            obj.insert(k.into(), json!(v));
        }
    }

    fn wigner_state(&self) -> Result<WignerState> {
        match *self {
            CanonicalState::Phav(n) => Ok(WignerState::Phav(PhavParams::new(n)?)),
            CanonicalState::TwoPhav(a, b) => Ok(WignerState::TwoPhav(TwoPhavParams::new(a, b)?)),
            CanonicalState::Thermal(_) => Err(Error::InvalidArgument(
                "wigner supports the phav and two-phav states".into(),
            )),
        }
    }
}

/// Shortest decimal string that parses back to the same double (at most 17
/// significant digits), in fixed notation for moderate exponents and
/// scientific notation otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:e}");
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("scientific format has an exponent");
    if (-5..17).contains(&exp) {
        format!("{x}")
    } else {
        sci
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn header(out: &mut String, lines: &[String], output: &OutputArgs) {
    for l in lines {
        let _ = writeln!(out, "# {l}");
    }
    if !output.no_timestamp {
        let _ = writeln!(out, "# generated_unix={}", timestamp());
    }
}

fn emit(text: &str, output: &OutputArgs) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("cannot write output: {e}"));
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io)?;
            stdout.flush().map_err(io)
        }
    }
}

fn check_normalized(dist: &PhotonDistribution) -> Result<()> {
    let err = dist.normalization_error();
    if err > NORMALIZATION_TOL {
        return Err(Error::CheckFailed(format!(
            "distribution normalization off by {err:.3e} (tolerance {NORMALIZATION_TOL:e})"
        )));
    }
    Ok(())
}

fn check_finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::CheckFailed(format!("non-finite {what} value")));
    }
    Ok(())
}

fn check_resamples(sampling: &SamplingArgs) -> Result<Option<u64>> {
    match sampling.shots {
        Some(0) => Err(Error::InvalidArgument("--shots must be positive".into())),
        shots => Ok(shots),
    }
}

fn cmd_dist(state: &StateArgs, sampling: &SamplingArgs, output: &OutputArgs) -> Result<String> {
    let canonical = CanonicalState::from_args(state)?;
    let exact = canonical.distribution(state.cutoff)?;
    check_normalized(&exact)?;
    let mut lines = vec![canonical.describe()];
    let dist = match check_resamples(sampling)? {
        Some(shots) => {
            lines.push(format!("shots={shots} seed={} rng={RNG_NAME}", sampling.seed));
            empirical_distribution(&sample_counts(&exact, shots, RngSeed(sampling.seed))?)
        }
        None => exact,
    };
    lines.push(format!("tail_bound={}", fmt_num(dist.tail_bound())));
    let mut out = String::new();
    header(&mut out, &lines, output);
    out.push_str("n,p\n");
    for (n, p) in dist.probs().iter().enumerate() {
        let _ = writeln!(out, "{n},{}", fmt_num(*p));
    }
    Ok(out)
}

fn cmd_measure(state: &StateArgs, sampling: &SamplingArgs, output: &OutputArgs) -> Result<String> {
    let canonical = CanonicalState::from_args(state)?;
    let exact = canonical.distribution(state.cutoff)?;
    check_normalized(&exact)?;
    let mut obj = Map::new();
    canonical.json_fields(&mut obj);
    obj.insert("eta".into(), json!(state.eta));
    obj.insert("tail_bound".into(), json!(exact.tail_bound()));
    let (a, b) = match check_resamples(sampling)? {
        Some(shots) => {
            let hist = sample_counts(&exact, shots, RngSeed(sampling.seed))?;
            let (a, b) = bootstrap_epsilon(&hist, sampling.resamples, RngSeed(sampling.seed))?;
            let (ea, eb) = epsilon_pair(&exact)?;
            obj.insert("epsilon_a_exact".into(), json!(ea.value));
            obj.insert("epsilon_b_exact".into(), json!(eb.value));
            obj.insert("stderr_a".into(), json!(a.stderr));
            obj.insert("stderr_b".into(), json!(b.stderr));
            obj.insert("shots".into(), json!(shots));
            obj.insert("resamples".into(), json!(sampling.resamples));
            obj.insert("seed".into(), json!(sampling.seed));
            obj.insert("rng".into(), json!(RNG_NAME));
            (a, b)
        }
        None => epsilon_pair(&exact)?,
    };
    check_finite("measure", [a.value, b.value, a.reference_mean])?;
    obj.insert("epsilon_a".into(), json!(a.value));
    obj.insert("epsilon_b".into(), json!(b.value));
    obj.insert("reference_mean".into(), json!(a.reference_mean));
    obj.insert("clamped".into(), json!(a.clamped || b.clamped));
    if !output.no_timestamp {
        obj.insert("generated_unix".into(), json!(timestamp()));
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON of plain values");
    text.push('\n');
    Ok(text)
}

fn cmd_wigner(state: &StateArgs, args: &WignerArgs, output: &OutputArgs) -> Result<String> {
    let canonical = CanonicalState::from_args(state)?;
    let wstate = canonical.wigner_state()?;
    let method = WignerMethod::from(args.method);
    let mut lines = vec![canonical.describe(), format!("method={:?}", args.method).to_lowercase()];
    let degraded = args.xi.is_some() || args.xi_p.is_some() || args.xi_s.is_some();
    let samples: Vec<WignerSample> = if degraded {
        let overlaps = OverlapParams::new(
            args.xi.unwrap_or(1.0),
            args.xi_p.unwrap_or(1.0),
            args.xi_s.unwrap_or(1.0),
        )?;
        let convention = match args.coords {
            CoordsArg::Nominal => CoordinateConvention::Nominal,
            CoordsArg::Rescaled => CoordinateConvention::Rescaled,
        };
        lines.push(
            format!(
                "xi={} xi_p={} xi_s={} coords={:?}",
                fmt_num(overlaps.xi()),
                fmt_num(overlaps.xi_p()),
                fmt_num(overlaps.xi_s()),
                args.coords
            )
            .to_lowercase(),
        );
        radial_profile_degraded(&wstate, args.rmax, args.steps, method, &overlaps, convention)?
    } else {
        radial_profile(&wstate, args.rmax, args.steps, method)?
    };
    check_finite("Wigner", samples.iter().map(|s| s.value))?;
    let bound = std::f64::consts::FRAC_2_PI * (1.0 + 1e-9);
    if let Some(s) = samples.iter().find(|s| s.value.abs() > bound) {
        return Err(Error::CheckFailed(format!(
            "Wigner value {} at r = {} exceeds 2/pi",
            s.value, s.alpha_mag
        )));
    }
    let mut out = String::new();
    header(&mut out, &lines, output);
    out.push_str("r,W\n");
    for s in &samples {
        let _ = writeln!(out, "{},{}", fmt_num(s.alpha_mag), fmt_num(s.value));
    }
    Ok(out)
}

fn cmd_sweep(args: &SweepArgs, eta: f64, sampling: &SamplingArgs, output: &OutputArgs) -> Result<String> {
    let family = match args.family {
        FamilyArg::Phav => SweepFamily::Phav,
        FamilyArg::RatioFixed => SweepFamily::RatioFixed,
        FamilyArg::TotalFixed => SweepFamily::TotalFixed,
    };
    let convention = match args.ratio_convention {
        RatioConventionArg::Geq1 => RatioConvention::Geq1,
        RatioConventionArg::Leq1 => RatioConvention::Leq1,
    };
    let fixed = match (family, args.fixed) {
        (SweepFamily::RatioFixed, Some(r)) => Some(convention.normalize(r)?),
        (_, f) => f,
    };
    let spec = SweepSpec::new(family, fixed, parse_grid(&args.grid)?, eta)?;
    let mut desc = format!("family={family}");
    if let Some(f) = args.fixed {
        let _ = write!(desc, " fixed={}", fmt_num(f));
    }
    if family == SweepFamily::RatioFixed {
        let _ = write!(desc, " ratio_convention={:?}", args.ratio_convention);
    }
    let _ = write!(desc, " eta={}", fmt_num(eta));
    let mut lines = vec![desc.to_lowercase()];
    let rows = match check_resamples(sampling)? {
        Some(shots) => {
            lines.push(format!(
                "shots={shots} resamples={} seed={} rng={RNG_NAME}",
                sampling.resamples, sampling.seed
            ));
            run_sweep_sampled(&spec, shots, sampling.resamples, RngSeed(sampling.seed))?
        }
        None => run_sweep(&spec)?,
    };
    check_finite("measure", rows.iter().flat_map(|r| [r.epsilon_a, r.epsilon_b]))?;
    let mut out = String::new();
    header(&mut out, &lines, output);
    if sampling.shots.is_some() {
        out.push_str("swept_value,epsilon_a,epsilon_b,stderr_a,stderr_b\n");
    } else {
        out.push_str("swept_value,epsilon_a,epsilon_b\n");
    }
    for r in &rows {
        let _ = write!(
            out,
            "{},{},{}",
            fmt_num(r.swept_value),
            fmt_num(r.epsilon_a),
            fmt_num(r.epsilon_b)
        );
        if let (Some(sa), Some(sb)) = (r.stderr_a, r.stderr_b) {
            let _ = write!(out, ",{},{}", fmt_num(sa), fmt_num(sb));
        }
        out.push('\n');
    }
    Ok(out)
}

fn cmd_figure4(output: &OutputArgs) -> Result<String> {
    let rows = figure4_curves()?;
    check_finite("measure", rows.iter().flat_map(|r| [r.epsilon_a, r.epsilon_b]))?;
    let mut out = String::new();
    header(
        &mut out,
        &["ratio-fixed curves label the ratio as min/max; total-fixed curves sweep the balance min/max".into()],
        output,
    );
    out.push_str("family,fixed_param,swept_value,epsilon_a,epsilon_b\n");
    for r in &rows {
        let fixed = r.fixed_param.map(fmt_num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.family,
            fixed,
            fmt_num(r.swept_value),
            fmt_num(r.epsilon_a),
            fmt_num(r.epsilon_b)
        );
    }
    Ok(out)
}

/// Runs one parsed command line, writing its output only once every check
/// has passed.
pub fn run(cli: &Cli) -> Result<()> {
    let (text, output) = match &cli.command {
        Command::Dist {
            state,
            sampling,
            output,
        } => (cmd_dist(state, sampling, output)?, output),
        Command::Measure {
            state,
            sampling,
            output,
        } => (cmd_measure(state, sampling, output)?, output),
        Command::Wigner { state, wigner, output } => (cmd_wigner(state, wigner, output)?, output),
        Command::Sweep {
            sweep,
            eta,
            sampling,
            output,
        } => (cmd_sweep(sweep, *eta, sampling, output)?, output),
        Command::Figure4 { output } => (cmd_figure4(output)?, output),
    };
    emit(&text, output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [
            0.1392,
            1.0 / 3.0,
            2.0,
            1e-300,
            6.02e23,
            -0.5,
            123456.789,
            5e-6,
            1e16,
            1e17,
        ] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1e-7), "1e-7");
        assert!(!fmt_num(1.0 / 3.0).contains('e'));
    }

    #[test]
    fn cutoff_flag() {
        assert_eq!(parse_cutoff("auto").unwrap(), CutoffPolicy::default());
        assert_eq!(parse_cutoff("40").unwrap(), CutoffPolicy::fixed(40));
        assert!(parse_cutoff("-1").is_err());
        assert!(parse_cutoff("x").is_err());
    }

    fn args(state: StateKind, mean: Option<f64>, n1: Option<f64>, n2: Option<f64>, eta: f64) -> StateArgs {
        StateArgs {
            state,
            mean,
            n1,
            n2,
            eta,
            cutoff: CutoffPolicy::default(),
        }
    }

    #[test]
    fn canonical_states() {
        let c = |a| CanonicalState::from_args(&a).unwrap();
        assert_eq!(
            c(args(StateKind::Phav, Some(4.0), None, None, 0.5)),
            CanonicalState::Phav(2.0)
        );
        assert_eq!(
            c(args(StateKind::TwoPhav, None, Some(0.0), Some(2.0), 1.0)),
            CanonicalState::Phav(2.0)
        );
        assert_eq!(
            c(args(StateKind::TwoPhav, None, Some(1.0), Some(3.0), 1.0)),
            CanonicalState::TwoPhav(3.0, 1.0)
        );
        assert!(CanonicalState::from_args(&args(StateKind::Phav, None, None, None, 1.0)).is_err());
        assert!(CanonicalState::from_args(&args(StateKind::TwoPhav, None, Some(1.0), None, 1.0)).is_err());
        assert!(CanonicalState::from_args(&args(StateKind::Phav, Some(1.0), Some(1.0), None, 1.0)).is_err());
        assert!(CanonicalState::from_args(&args(StateKind::Phav, Some(1.0), None, None, 1.5)).is_err());
        assert!(CanonicalState::from_args(&args(StateKind::Phav, Some(-1.0), None, None, 1.0)).is_err());
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "phav", "wigner", "--state", "phav", "--mean", "1.97", "--method", "parity", "--rmax", "3", "--steps", "7",
            "--xi", "0.9",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Wigner { .. }));
        assert!(Cli::try_parse_from(["phav", "dist", "--state", "squeezed", "--mean", "1"]).is_err());
        assert!(Cli::try_parse_from(["phav", "sweep", "--family", "phav"]).is_err());
    }
}
