//! Quadrature helpers: periodic trapezoid phase averages and a nested
//! Simpson rule for radial integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest node count accepted by fixed-node phase averages.
pub const MIN_PHASE_NODES: usize = 64;

/// Node doubling schedule for adaptive phase averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl {
    pub initial_nodes: usize,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        Self {
            initial_nodes: 256,
            tol: 1e-12,
            max_nodes: 4096,
        }
    }
}

pub(crate) fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < MIN_PHASE_NODES {
        return Err(Error::InvalidArgument(format!(
            "phase quadrature needs at least {MIN_PHASE_NODES} nodes, got {nodes}"
        )));
    }
    Ok(())
}

/// Accumulates `f(φ_j)` into `acc` for `φ_j = 2π (offset + j·stride) / total`.
fn accumulate<F>(acc: &mut [f64], scratch: &mut [f64], f: &F, total: usize, offset: usize, stride: usize)
where
    F: Fn(f64, &mut [f64]),
{
    let mut j = offset;
    while j < total {
        let phi = 2.0 * PI * j as f64 / total as f64;
        scratch.iter_mut().for_each(|s| *s = 0.0);
        f(phi, scratch);
        for (a, s) in acc.iter_mut().zip(scratch.iter()) {
            *a += s;
        }
        j += stride;
    }
}

/// `(1/2π) ∫₀^{2π} f(φ) dφ` for a vector-valued `f` on `nodes` uniform nodes.
///
/// `f` writes its value into the provided slice of length `len`.
pub fn phase_average<F>(len: usize, nodes: usize, f: F) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]),
{
    let mut acc = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    accumulate(&mut acc, &mut scratch, &f, nodes, 0, 1);
    acc.iter_mut().for_each(|a| *a /= nodes as f64);
    acc
}

/// Phase average with node doubling until the largest componentwise change
/// drops to `control.tol`. Previous nodes are reused. Returns the average and
/// the final node count.
pub fn phase_average_adaptive<F>(len: usize, control: &QuadratureControl, f: F) -> Result<(Vec<f64>, usize)>
where
    F: Fn(f64, &mut [f64]),
{
    check_nodes(control.initial_nodes)?;
    let mut nodes = control.initial_nodes;
    let mut sum = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    accumulate(&mut sum, &mut scratch, &f, nodes, 0, 1);
    let mut avg: Vec<f64> = sum.iter().map(|s| s / nodes as f64).collect();
    let mut change = f64::INFINITY;
    while nodes * 2 <= control.max_nodes {
        let total = nodes * 2;
        // new nodes are the odd indices of the refined grid
        accumulate(&mut sum, &mut scratch, &f, total, 1, 2);
        let next: Vec<f64> = sum.iter().map(|s| s / total as f64).collect();
        change = next
            .iter()
            .zip(avg.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        avg = next;
        nodes = total;
        if change <= control.tol {
            return Ok((avg, nodes));
        }
    }
    Err(Error::QuadratureNotConverged { nodes, change })
}

/// Scalar form of [`phase_average_adaptive`].
pub fn phase_average_scalar<F>(control: &QuadratureControl, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    phase_average_adaptive(1, control, |phi, out| out[0] = f(phi)).map(|(v, _)| v[0])
}

/// `∫₀^{upper} f(r) dr` by Simpson's rule on nested grids, doubling the
/// interval count until successive estimates differ by less than `tol`.
pub fn radial_integral<F>(upper: f64, tol: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    const START: usize = 64;
    const MAX_INTERVALS: usize = 1 << 16;
    let mut n = START;
    let h = upper / n as f64;
    let mut trap = 0.5 * (f(0.0)? + f(upper)?);
    for i in 1..n {
        trap += f(i as f64 * h)?;
    }
    trap *= h;
    let mut simpson_prev = f64::NAN;
    let mut change = f64::INFINITY;
    while n < MAX_INTERVALS {
        let h_new = upper / (2 * n) as f64;
        let mut mid = 0.0;
        for i in 0..n {
            mid += f((2 * i + 1) as f64 * h_new)?;
        }
        let trap_new = 0.5 * trap + h_new * mid;
        let simpson = (4.0 * trap_new - trap) / 3.0;
        if simpson_prev.is_finite() {
            change = (simpson - simpson_prev).abs();
            if change < tol {
                return Ok(simpson);
            }
        }
        simpson_prev = simpson;
        trap = trap_new;
        n *= 2;
    }
    Err(Error::RadialNotConverged { intervals: n, change })
}
