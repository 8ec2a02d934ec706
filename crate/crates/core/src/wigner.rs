//! Wigner functions of PHAV and 2-PHAV states on a radial section.
//!
//! Values use the convention `∫ W d²α = 1`, in which the largest value any
//! state can reach is `2/π`. Both states are phase insensitive, so only
//! `|α|` enters.

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::quad::{self, QuadratureControl};
use crate::specfun::bessel_i0_scaled;
use crate::states::{
    displaced_phav_distribution, displaced_two_phav_adaptive, two_phav_distribution, CutoffPolicy, PhavParams,
    PhotonDistribution, TwoPhavParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerMethod {
    ClosedForm,
    Quadrature,
    ParityReconstruction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSample {
    pub alpha_mag: f64,
    pub value: f64,
    pub method: WignerMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WignerState {
    Phav(PhavParams),
    TwoPhav(TwoPhavParams),
}

impl WignerState {
    /// `|β| + |β̃|`, the radius of the outer edge of the phase-space ring.
    pub fn amplitude_reach(&self) -> f64 {
        match self {
            WignerState::Phav(p) => p.amplitude(),
            WignerState::TwoPhav(p) => p.n1().sqrt() + p.n2().sqrt(),
        }
    }
}

/// Mode-matching factors between probe, PHAV and the 2-PHAV components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapParams {
    xi: f64,
    xi_p: f64,
    xi_s: f64,
}

impl OverlapParams {
    pub fn new(xi: f64, xi_p: f64, xi_s: f64) -> Result<Self> {
        for (name, v) in [("xi", xi), ("xi_p", xi_p), ("xi_s", xi_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("overlap {name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(Self { xi, xi_p, xi_s })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn xi_p(&self) -> f64 {
        self.xi_p
    }

    pub fn xi_s(&self) -> f64 {
        self.xi_s
    }
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self {
            xi: 1.0,
            xi_p: 1.0,
            xi_s: 1.0,
        }
    }
}

/// How the radial coordinate passed to the degraded models is read.
///
/// `Nominal`: the argument is the probe amplitude `|α|` and the ideal Wigner
/// function is evaluated at `√ξ |α|`. `Rescaled`: the argument already is
/// `√ξ |α|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordinateConvention {
    #[default]
    Nominal,
    Rescaled,
}

impl CoordinateConvention {
    /// `(nominal |α|, scaled √ξ|α|)` for an input coordinate.
    fn split(self, r: f64, xi: f64) -> (f64, f64) {
        match self {
            CoordinateConvention::Nominal => (r, xi.sqrt() * r),
            CoordinateConvention::Rescaled => {
                let nominal = if xi > 0.0 { r / xi.sqrt() } else { f64::INFINITY };
                (nominal, r)
            }
        }
    }
}

/// PHAV Wigner function `(2/π) I0(4|α||β|) e^{−2(|α|²+|β|²)}`, evaluated as
/// `(2/π) [I0(x) e^{−x}] e^{−2(|α|−|β|)²}` to stay finite at large arguments.
pub fn wigner_phav(alpha_mag: f64, params: &PhavParams) -> WignerSample {
    WignerSample {
        alpha_mag,
        value: phav_value(alpha_mag, params.amplitude()),
        method: WignerMethod::ClosedForm,
    }
}

fn phav_value(r: f64, beta: f64) -> f64 {
    let scaled = bessel_i0_scaled(4.0 * r * beta).expect("argument is finite and nonnegative");
    FRAC_2_PI * scaled * (-2.0 * (r - beta).powi(2)).exp()
}

/// PHAV Wigner function as a phase average of coherent-state Wigner functions,
/// `(1/2π) ∫ (2/π) e^{−2|α − |β| e^{iφ}|²} dφ`, on `nodes` uniform nodes.
pub fn wigner_phav_quadrature(alpha_mag: f64, params: &PhavParams, nodes: usize) -> Result<WignerSample> {
    quad::check_nodes(nodes)?;
    let beta = params.amplitude();
    let v = quad::phase_average(1, nodes, |phi, out| out[0] = coherent_value(alpha_mag, beta, phi));
    Ok(WignerSample {
        alpha_mag,
        value: v[0],
        method: WignerMethod::Quadrature,
    })
}

fn wigner_phav_quadrature_adaptive(alpha_mag: f64, params: &PhavParams, control: &QuadratureControl) -> Result<f64> {
    let beta = params.amplitude();
    quad::phase_average_scalar(control, |phi| coherent_value(alpha_mag, beta, phi))
}

fn coherent_value(r: f64, beta: f64, phi: f64) -> f64 {
    let d2 = r * r + beta * beta - 2.0 * r * beta * phi.cos();
    FRAC_2_PI * (-2.0 * d2.max(0.0)).exp()
}

/// Distance `|α − b e^{iφ}|` for real `α = r`.
fn shifted_radius(r: f64, b: f64, phi: f64) -> f64 {
    (r * r + b * b - 2.0 * r * b * phi.cos()).max(0.0).sqrt()
}

/// 2-PHAV Wigner function: the PHAV Wigner function of the first component,
/// phase averaged over the displacement `√n2 e^{iφ}` of the second.
pub fn wigner_two_phav(alpha_mag: f64, params: &TwoPhavParams, nodes: usize) -> Result<WignerSample> {
    quad::check_nodes(nodes)?;
    let (b1, b2) = (params.n1().sqrt(), params.n2().sqrt());
    let v = quad::phase_average(1, nodes, |phi, out| {
        out[0] = phav_value(shifted_radius(alpha_mag, b2, phi), b1)
    });
    Ok(WignerSample {
        alpha_mag,
        value: v[0],
        method: WignerMethod::Quadrature,
    })
}

fn wigner_two_phav_adaptive(alpha_mag: f64, params: &TwoPhavParams, control: &QuadratureControl) -> Result<f64> {
    let (b1, b2) = (params.n1().sqrt(), params.n2().sqrt());
    quad::phase_average_scalar(control, |phi| phav_value(shifted_radius(alpha_mag, b2, phi), b1))
}

/// Overlap-degraded PHAV model in the nominal coordinate convention:
/// `W(√ξ |α|) · e^{−√(1−ξ)(|α| + |β|)}`. Not normalized.
pub fn wigner_phav_degraded(alpha_mag: f64, params: &PhavParams, overlaps: &OverlapParams) -> WignerSample {
    wigner_phav_degraded_with(alpha_mag, params, overlaps, CoordinateConvention::Nominal)
}

pub fn wigner_phav_degraded_with(
    alpha_mag: f64,
    params: &PhavParams,
    overlaps: &OverlapParams,
    convention: CoordinateConvention,
) -> WignerSample {
    let (nominal, scaled) = convention.split(alpha_mag, overlaps.xi());
    let ideal = phav_value(scaled, params.amplitude());
    WignerSample {
        alpha_mag,
        value: ideal * phav_damping(nominal, params.amplitude(), overlaps),
        method: WignerMethod::ClosedForm,
    }
}

fn phav_damping(nominal: f64, beta: f64, o: &OverlapParams) -> f64 {
    (-(1.0 - o.xi()).sqrt() * (nominal + beta)).exp()
}

fn two_phav_damping(nominal: f64, params: &TwoPhavParams, o: &OverlapParams) -> f64 {
    let reach = params.n1().sqrt() + params.n2().sqrt();
    (-((1.0 - o.xi_p()).sqrt() * nominal + (1.0 - o.xi_s()).sqrt() * reach)).exp()
}

/// Overlap-degraded 2-PHAV model in the nominal coordinate convention:
/// `W(√ξ_P |α|) · e^{−[√(1−ξ_P)|α| + √(1−ξ_S)(|β| + |β̃|)]}`. Not normalized.
pub fn wigner_two_phav_degraded(
    alpha_mag: f64,
    params: &TwoPhavParams,
    overlaps: &OverlapParams,
    nodes: usize,
) -> Result<WignerSample> {
    wigner_two_phav_degraded_with(alpha_mag, params, overlaps, nodes, CoordinateConvention::Nominal)
}

pub fn wigner_two_phav_degraded_with(
    alpha_mag: f64,
    params: &TwoPhavParams,
    overlaps: &OverlapParams,
    nodes: usize,
    convention: CoordinateConvention,
) -> Result<WignerSample> {
    let (nominal, scaled) = convention.split(alpha_mag, overlaps.xi_p());
    let ideal = wigner_two_phav(scaled, params, nodes)?.value;
    Ok(WignerSample {
        alpha_mag,
        value: ideal * two_phav_damping(nominal, params, overlaps),
        method: WignerMethod::Quadrature,
    })
}

/// Parity-sum reconstruction `(2/π) Σ_m (−1)^m p_m` from displaced
/// statistics. The truncation error is at most `(2/π)·tail_bound`.
pub fn wigner_from_distribution(dist: &PhotonDistribution) -> f64 {
    let alternating: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(m, &p)| if m % 2 == 0 { p } else { -p })
        .sum();
    FRAC_2_PI * alternating
}

/// Wigner function of a Fock-diagonal state at radius `r`:
/// `(2/π) e^{−2r²} Σ_n (−1)^n p_n L_n(4r²)`.
pub fn wigner_fock_diagonal(alpha_mag: f64, dist: &PhotonDistribution) -> f64 {
    let x = 4.0 * alpha_mag * alpha_mag;
    let damp = (-0.5 * x).exp();
    let mut l_prev = 0.0;
    let mut l_cur = 1.0;
    let mut sum = 0.0;
    for (n, &p) in dist.probs().iter().enumerate() {
        if n > 0 {
            let nf = (n - 1) as f64;
            let l_next = ((2.0 * nf + 1.0 - x) * l_cur - nf * l_prev) / (nf + 1.0);
            l_prev = l_cur;
            l_cur = l_next;
        }
        let term = p * l_cur * damp;
        sum += if n % 2 == 0 { term } else { -term };
    }
    FRAC_2_PI * sum
}

/// Wigner value of `state` at `r` by the requested route.
///
/// Closed form: the Bessel expression for a PHAV, the Laguerre series over
/// the closed-form photon statistics for a 2-PHAV. Quadrature: phase averages
/// with node doubling. Parity reconstruction: the alternating sum over the
/// statistics of the state displaced by a probe of mean `r²`.
pub fn wigner_at(state: &WignerState, alpha_mag: f64, method: WignerMethod) -> Result<WignerSample> {
    let control = QuadratureControl::default();
    let cutoff = CutoffPolicy::default();
    let value = match (state, method) {
        (WignerState::Phav(p), WignerMethod::ClosedForm) => phav_value(alpha_mag, p.amplitude()),
        (WignerState::Phav(p), WignerMethod::Quadrature) => wigner_phav_quadrature_adaptive(alpha_mag, p, &control)?,
        (WignerState::Phav(p), WignerMethod::ParityReconstruction) => {
            wigner_from_distribution(&displaced_phav_distribution(*p, alpha_mag * alpha_mag, cutoff)?)
        }
        (WignerState::TwoPhav(p), WignerMethod::ClosedForm) => {
            wigner_fock_diagonal(alpha_mag, &two_phav_distribution(*p, cutoff)?)
        }
        (WignerState::TwoPhav(p), WignerMethod::Quadrature) => wigner_two_phav_adaptive(alpha_mag, p, &control)?,
        (WignerState::TwoPhav(p), WignerMethod::ParityReconstruction) => wigner_from_distribution(
            &displaced_two_phav_adaptive(*p, alpha_mag * alpha_mag, cutoff, &control)?,
        ),
    };
    Ok(WignerSample {
        alpha_mag,
        value,
        method,
    })
}

/// [`wigner_at`] followed by the overlap-degraded model of the state family.
pub fn wigner_degraded_at(
    state: &WignerState,
    alpha_mag: f64,
    method: WignerMethod,
    overlaps: &OverlapParams,
    convention: CoordinateConvention,
) -> Result<WignerSample> {
    let (xi, damping): (f64, Box<dyn Fn(f64) -> f64>) = match state {
        WignerState::Phav(p) => {
            let beta = p.amplitude();
            (
                overlaps.xi(),
                Box::new(move |nominal| phav_damping(nominal, beta, overlaps)),
            )
        }
        WignerState::TwoPhav(p) => (
            overlaps.xi_p(),
            Box::new(move |nominal| two_phav_damping(nominal, p, overlaps)),
        ),
    };
    let (nominal, scaled) = convention.split(alpha_mag, xi);
    let ideal = wigner_at(state, scaled, method)?;
    Ok(WignerSample {
        alpha_mag,
        value: ideal.value * damping(nominal),
        method,
    })
}

/// Uniform radial grid `r_i = i·r_max/(steps−1)`; a zero `r_max` gives the
/// single point `r = 0`.
pub fn radial_grid(r_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(r_max.is_finite() && r_max >= 0.0) {
        return Err(domain(format!("r_max must be finite and nonnegative, got {r_max}")));
    }
    if steps < 2 {
        return Err(domain(format!("a radial profile needs at least 2 steps, got {steps}")));
    }
    if r_max == 0.0 {
        return Ok(vec![0.0]);
    }
    Ok((0..steps).map(|i| r_max * i as f64 / (steps - 1) as f64).collect())
}

/// Radial section of the Wigner function, evaluated point by point in
/// parallel and returned in grid order.
pub fn radial_profile(
    state: &WignerState,
    r_max: f64,
    steps: usize,
    method: WignerMethod,
) -> Result<Vec<WignerSample>> {
    radial_grid(r_max, steps)?
        .into_par_iter()
        .map(|r| wigner_at(state, r, method))
        .collect()
}

/// [`radial_profile`] through the overlap-degraded models.
pub fn radial_profile_degraded(
    state: &WignerState,
    r_max: f64,
    steps: usize,
    method: WignerMethod,
    overlaps: &OverlapParams,
    convention: CoordinateConvention,
) -> Result<Vec<WignerSample>> {
    radial_grid(r_max, steps)?
        .into_par_iter()
        .map(|r| wigner_degraded_at(state, r, method, overlaps, convention))
        .collect()
}

/// `2π ∫₀^R W(r) r dr` with `R = |β| + |β̃| + 8`, using closed forms for a
/// PHAV and adaptive phase quadrature for a 2-PHAV.
pub fn normalization(state: &WignerState) -> Result<f64> {
    let upper = state.amplitude_reach() + 8.0;
    let method = match state {
        WignerState::Phav(_) => WignerMethod::ClosedForm,
        WignerState::TwoPhav(_) => WignerMethod::Quadrature,
    };
    let integral = quad::radial_integral(upper, 1e-8, |r| Ok(r * wigner_at(state, r, method)?.value))?;
    Ok(2.0 * PI * integral)
}

/// `2π ∫₀^R W̃(r) r dr` for an overlap-degraded model.
pub fn normalization_degraded(state: &WignerState, overlaps: &OverlapParams) -> Result<f64> {
    let xi = match state {
        WignerState::Phav(_) => overlaps.xi(),
        WignerState::TwoPhav(_) => overlaps.xi_p(),
    };
    if xi == 0.0 {
        return Err(domain("degraded normalization needs a nonzero probe overlap"));
    }
    let upper = (state.amplitude_reach() + 8.0) / xi.sqrt();
    let method = match state {
        WignerState::Phav(_) => WignerMethod::ClosedForm,
        WignerState::TwoPhav(_) => WignerMethod::Quadrature,
    };
    let integral = quad::radial_integral(upper, 1e-8, |r| {
        wigner_degraded_at(state, r, method, overlaps, CoordinateConvention::Nominal).map(|s| r * s.value)
    })?;
    Ok(2.0 * PI * integral)
}
