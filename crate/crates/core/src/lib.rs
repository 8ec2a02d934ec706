//! Photon-number statistics, non-Gaussianity measures and Wigner functions of
//! phase-averaged coherent states (PHAV) and of the state produced by
//! interfering two of them on a beam splitter (2-PHAV).
//!
//! Every state handled here is diagonal in the Fock basis, so the universal
//! representation is a truncated [`PhotonDistribution`]. On top of it the crate
//! provides
//!
//! - [`specfun`]: log-gamma, exponentially scaled `I0`, and `1F2`;
//! - [`states`]: Poissonian, thermal, 2-PHAV and displaced distributions, and
//!   the binomial loss channel;
//! - [`measures`]: the Hilbert-Schmidt (`A`) and entropic (`B`)
//!   non-Gaussianity measures;
//! - [`wigner`]: closed-form, phase-quadrature and parity-sum Wigner values;
//! - [`sampling`]: shot-level sampling and bootstrap error bars;
//! - [`sweep`]: the parameter sweeps behind the `phav sweep` and
//!   `phav figure4` subcommands.

pub mod cli;
mod error;
pub mod measures;
pub mod quad;
pub mod sampling;
pub mod specfun;
pub mod states;
pub mod sweep;
pub mod wigner;

pub use error::{Error, Result};
pub use measures::{delta_a, delta_b, epsilon_pair, hs_overlap, Measure, NonGResult, Reading};
pub use states::{CutoffMode, CutoffPolicy, PhavParams, PhotonDistribution, TwoPhavParams};
pub use wigner::{WignerMethod, WignerSample, WignerState};
