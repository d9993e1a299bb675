//! The fault-prone Hotelling game.
//!
//! `n` servers pick locations on `[0, 1]`; clients are uniform and buy from
//! the closest server they can still reach after the line is cut at the
//! points of a rate-`λ` Poisson process. This crate computes expected
//! payoffs in closed form, constructs and verifies the unique equilibrium,
//! locates the existence threshold `λ_min(n)`, and evaluates client-side
//! efficiency metrics. Every closed form has an independent Monte Carlo
//! counterpart built on [`faultline`].

pub mod canonical;
pub mod deviate;
pub mod efficiency;
pub mod error;
pub mod faultline;
pub mod montecarlo;
pub mod numeric;
pub mod payoff;

pub use canonical::{
    beta_pair, canonical_pair, canonical_profile, lambda_to_alpha, nash_equilibrium, ne_exists,
    reparam_forward, threshold, CanonicalPair, ReparamPoint, ThresholdResult,
};
pub use deviate::{best_response, verify_equilibrium, DeviationReport, Verification};
pub use error::{Error, Result};
pub use faultline::{FaultSet, GameConfig, Market, Profile};
pub use montecarlo::{Estimate, MonteCarlo};
pub use payoff::{expected_payoff, PayoffBreakdown};
