//! Equilibrium dynamics of voluntary disclosure by a manager facing litigation risk.
//!
//! The crate is layered bottom-up:
//!
//! * [`mathkit`]: normal law, the observation kernels `h` and `g`, quadrature and root finding.
//! * [`equilibrium`]: model primitives, liability schedules and trend-value curves `γ_t`.
//! * [`valuation`]: option building blocks, net-of-damages values and the expected shortfall.
//! * [`switching`]: optimal candid/sparing switching times and the charge ceiling `c̄`.
//! * [`zone`]: incremental disclosure loss and gain, and the legal-consistency classification.
//! * [`stochastic`]: drifted-Brownian extreme laws, the Mills ratio and scienter probabilities.
//! * [`selftest`]: end-to-end numerical checks against independent oracles.

pub mod equilibrium;
pub mod error;
pub mod mathkit;
pub mod selftest;
pub mod stochastic;
pub mod switching;
pub mod valuation;
pub mod zone;

pub use equilibrium::{LiabilitySchedule, ModelParams, Regime, SwitchRegime, TrendCurve};
pub use error::{Error, Result};
pub use mathkit::{Kernel, Tolerance};
pub use switching::{Corner, SwitchSolution};
pub use zone::{ChargePair, ZoneLabel, ZoneReport};
